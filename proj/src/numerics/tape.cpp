#include "dspg/numerics/tape.hpp"

#include <algorithm>

#include "dspg/error.hpp"

namespace dspg::numerics {

const Shape& Var::shape() const { return tape_->shape(*this); }

std::size_t Var::dim(std::size_t axis) const {
  const Shape& s = shape();
  if (axis >= s.size()) throw DimensionError("axis out of range for shape " + shape_string(s));
  return s[axis];
}

Tape::Tape(Precision precision, bool record) : precision_(precision), record_(record) {}

Var Tape::make(Shape shape, bool needs_grad) {
  Node node;
  node.numel = shape_numel(shape);
  node.shape = std::move(shape);
  node.needs_grad = needs_grad && record_;
  if (precision_ == Precision::f64) {
    node.f64.assign(node.numel, 0.0);
  } else {
    node.f32.assign(node.numel, 0.0f);
  }
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Tape::constant(const Tensor& value) { return constant(value.shape(), value.data()); }

Var Tape::constant(Shape shape, std::span<const float> values) {
  if (values.size() != shape_numel(shape)) {
    throw DimensionError("constant: " + std::to_string(values.size()) + " values for shape " + shape_string(shape));
  }
  Var v = make(std::move(shape), false);
  Node& node = nodes_[v.id()];
  if (precision_ == Precision::f64) {
    std::copy(values.begin(), values.end(), node.f64.begin());
  } else {
    std::copy(values.begin(), values.end(), node.f32.begin());
  }
  return v;
}

Var Tape::param(Tensor& tensor) {
  Node node;
  node.shape = tensor.shape();
  node.numel = tensor.numel();
  node.needs_grad = record_ && tensor.requires_grad();
  node.param = &tensor;
  if (precision_ == Precision::f64) {
    node.f64.assign(tensor.data().begin(), tensor.data().end());
  } else {
    node.external = tensor.data().data();
  }
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

bool Tape::any_needs_grad(std::initializer_list<Var> inputs) const {
  if (!record_) return false;
  return std::any_of(inputs.begin(), inputs.end(), [&](Var v) { return nodes_[v.id()].needs_grad; });
}

template <class T>
const T* Tape::in(int id) const {
  const Node& node = nodes_[id];
  if constexpr (std::is_same_v<T, double>) {
    return node.f64.data();
  } else {
    return node.external ? node.external : node.f32.data();
  }
}

template <class T>
T* Tape::out(int id) {
  Node& node = nodes_[id];
  if constexpr (std::is_same_v<T, double>) {
    return node.f64.data();
  } else {
    return node.f32.data();
  }
}

template <class T>
T* Tape::grad_buffer(int id) {
  Node& node = nodes_[id];
  if constexpr (std::is_same_v<T, double>) {
    if (node.g64.size() != node.numel) node.g64.assign(node.numel, 0.0);
    return node.g64.data();
  } else {
    if (node.g32.size() != node.numel) node.g32.assign(node.numel, 0.0f);
    return node.g32.data();
  }
}

template <class T>
const T* Tape::grad_or_null(int id) const {
  const Node& node = nodes_[id];
  if constexpr (std::is_same_v<T, double>) {
    return node.g64.empty() ? nullptr : node.g64.data();
  } else {
    return node.g32.empty() ? nullptr : node.g32.data();
  }
}

template const float* Tape::in<float>(int) const;
template const double* Tape::in<double>(int) const;
template float* Tape::out<float>(int);
template double* Tape::out<double>(int);
template float* Tape::grad_buffer<float>(int);
template double* Tape::grad_buffer<double>(int);
template const float* Tape::grad_or_null<float>(int) const;
template const double* Tape::grad_or_null<double>(int) const;

void Tape::record(std::vector<int> inputs, int output, std::function<void(Tape&)> backward) {
  if (!record_) return;
  ops_.push_back(Op{std::move(inputs), output, std::move(backward)});
}

Tensor Tape::value(Var v) const {
  const Node& node = nodes_[v.id()];
  std::vector<float> data(node.numel);
  if (precision_ == Precision::f64) {
    std::transform(node.f64.begin(), node.f64.end(), data.begin(), [](double x) { return static_cast<float>(x); });
  } else {
    const float* src = in<float>(v.id());
    std::copy(src, src + node.numel, data.begin());
  }
  return Tensor(node.shape, std::move(data));
}

std::vector<double> Tape::values(Var v) const {
  const Node& node = nodes_[v.id()];
  if (precision_ == Precision::f64) return node.f64;
  const float* src = in<float>(v.id());
  return std::vector<double>(src, src + node.numel);
}

double Tape::item(Var v) const {
  const Node& node = nodes_[v.id()];
  if (node.numel != 1) throw DimensionError("item() on non-scalar of shape " + shape_string(node.shape));
  return precision_ == Precision::f64 ? node.f64[0] : static_cast<double>(in<float>(v.id())[0]);
}

void Tape::backward(Var output) {
  const Node& node = nodes_[output.id()];
  if (node.numel != 1) {
    throw DimensionError("backward() without upstream gradient needs a scalar, got " + shape_string(node.shape));
  }
  const float one = 1.0f;
  backward(output, std::span<const float>(&one, 1));
}

void Tape::backward(Var output, std::span<const float> upstream) {
  if (!record_) throw Error("backward() on a non-recording tape");
  const Node& node = nodes_[output.id()];
  if (upstream.size() != node.numel) {
    throw DimensionError("upstream gradient length " + std::to_string(upstream.size()) + " does not match " +
                         shape_string(node.shape));
  }
  dispatch([&]<class T>() {
    T* g = grad_buffer<T>(output.id());
    for (std::size_t i = 0; i < upstream.size(); ++i) g[i] += static_cast<T>(upstream[i]);
  });
  for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) {
    const Node& out_node = nodes_[it->output];
    const bool has_upstream = precision_ == Precision::f64 ? !out_node.g64.empty() : !out_node.g32.empty();
    if (!has_upstream) continue;
    it->backward(*this);
  }
}

bool Tape::has_grad(Var v) const {
  const Node& node = nodes_[v.id()];
  return precision_ == Precision::f64 ? !node.g64.empty() : !node.g32.empty();
}

Tensor Tape::grad(Var v) const {
  const Node& node = nodes_[v.id()];
  Tensor g(node.shape);
  if (precision_ == Precision::f64) {
    for (std::size_t i = 0; i < node.g64.size(); ++i) g[i] = static_cast<float>(node.g64[i]);
  } else {
    std::copy(node.g32.begin(), node.g32.end(), g.data().begin());
  }
  return g;
}

void Tape::accumulate_param_grads() const {
  for (const Node& node : nodes_) {
    if (!node.param) continue;
    const bool has = precision_ == Precision::f64 ? !node.g64.empty() : !node.g32.empty();
    if (!has) continue;
    std::span<float> dst = node.param->grad();
    if (precision_ == Precision::f64) {
      for (std::size_t i = 0; i < node.numel; ++i) dst[i] += static_cast<float>(node.g64[i]);
    } else {
      for (std::size_t i = 0; i < node.numel; ++i) dst[i] += node.g32[i];
    }
  }
}

}  // namespace dspg::numerics
