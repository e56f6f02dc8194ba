#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "dspg/numerics/tensor.hpp"

namespace dspg::numerics {

enum class Precision { f32, f64 };

class Tape;

// Handle to a value recorded on a Tape. Cheap to copy; only valid while the
// tape is alive.
class Var {
 public:
  Var() = default;
  Tape& tape() const { return *tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }
  const Shape& shape() const;
  std::size_t dim(std::size_t axis) const;

 private:
  friend class Tape;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}
  Tape* tape_ = nullptr;
  int id_ = -1;
};

// Define-by-run reverse-mode tape. Each forward op appends a node and (when
// recording) a backward closure; backward() walks the closures in reverse
// order exactly once.
//
// Values live in float32 by default. A float64 tape runs the same op code in
// double precision; it exists so finite-difference oracles are not dominated
// by float rounding. Parameters bound with param() are read in place on f32
// tapes and their gradients are pushed back with accumulate_param_grads().
//
// A tape is confined to one thread. Independent tapes may share parameter
// tensors for reading.
class Tape {
 public:
  explicit Tape(Precision precision = Precision::f32, bool record = true);
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Precision precision() const { return precision_; }
  bool recording() const { return record_; }

  Var constant(const Tensor& value);
  Var constant(Shape shape, std::span<const float> values);
  Var param(Tensor& tensor);

  const Shape& shape(Var v) const { return nodes_[v.id()].shape; }
  Tensor value(Var v) const;
  std::vector<double> values(Var v) const;
  double item(Var v) const;

  // Seeds the upstream gradient of a scalar output with 1.
  void backward(Var output);
  void backward(Var output, std::span<const float> upstream);
  Tensor grad(Var v) const;
  bool has_grad(Var v) const;
  void accumulate_param_grads() const;

  std::size_t node_count() const { return nodes_.size(); }
  std::size_t op_count() const { return ops_.size(); }

  // --- op-author interface ---
  Var make(Shape shape, bool needs_grad);
  bool needs_grad(int id) const { return nodes_[id].needs_grad; }
  bool any_needs_grad(std::initializer_list<Var> inputs) const;
  template <class T>
  const T* in(int id) const;
  template <class T>
  T* out(int id);
  template <class T>
  T* grad_buffer(int id);  // zero-initialised on first request
  template <class T>
  const T* grad_or_null(int id) const;
  void record(std::vector<int> inputs, int output, std::function<void(Tape&)> backward);

  template <class F>
  decltype(auto) dispatch(F&& f) {
    if (precision_ == Precision::f64) return f.template operator()<double>();
    return f.template operator()<float>();
  }

 private:
  struct Node {
    Shape shape;
    std::size_t numel = 0;
    std::vector<float> f32;
    std::vector<double> f64;
    const float* external = nullptr;
    mutable std::vector<float> g32;
    mutable std::vector<double> g64;
    bool needs_grad = false;
    Tensor* param = nullptr;
  };
  struct Op {
    std::vector<int> inputs;
    int output;
    std::function<void(Tape&)> backward;
  };

  Precision precision_;
  bool record_;
  std::vector<Node> nodes_;
  std::vector<Op> ops_;
};

}  // namespace dspg::numerics
