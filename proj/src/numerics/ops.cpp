#include "dspg/numerics/ops.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <string>

#include "dspg/error.hpp"

namespace dspg::numerics {

namespace {

template <class T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using CMap = Eigen::Map<const Mat<T>>;
template <class T>
using MMap = Eigen::Map<Mat<T>>;
template <class T>
using CStrided = Eigen::Map<const Mat<T>, 0, Eigen::OuterStride<>>;
template <class T>
using MStrided = Eigen::Map<Mat<T>, 0, Eigen::OuterStride<>>;

void require_rank2(Var x, const char* op) {
  if (x.shape().size() != 2) {
    throw DimensionError(std::string(op) + ": expected a rank-2 operand, got " + shape_string(x.shape()));
  }
}

void require_same_shape(Var a, Var b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
  }
}

std::size_t rows(Var x) { return x.shape()[0]; }
std::size_t cols(Var x) { return x.shape()[1]; }

// Elementwise unary op. `deriv(x, y)` returns dy/dx.
template <class Fwd, class Deriv>
Var unary(Var x, Fwd fwd, Deriv deriv) {
  Tape& tape = x.tape();
  Var y = tape.make(x.shape(), tape.any_needs_grad({x}));
  const std::size_t n = shape_numel(x.shape());
  tape.dispatch([&]<class T>() {
    const T* xs = tape.in<T>(x.id());
    T* ys = tape.out<T>(y.id());
    for (std::size_t i = 0; i < n; ++i) ys[i] = static_cast<T>(fwd(static_cast<double>(xs[i])));
    if (!tape.needs_grad(y.id())) return;
    tape.record({x.id()}, y.id(), [xi = x.id(), yi = y.id(), n, deriv](Tape& t) {
      const T* gy = t.grad_or_null<T>(yi);
      const T* xv = t.in<T>(xi);
      const T* yv = t.in<T>(yi);
      T* gx = t.grad_buffer<T>(xi);
      for (std::size_t i = 0; i < n; ++i) {
        gx[i] += static_cast<T>(static_cast<double>(gy[i]) * deriv(static_cast<double>(xv[i]), static_cast<double>(yv[i])));
      }
    });
  });
  return y;
}

}  // namespace

Var matmul(Var a, Var b) {
  require_rank2(a, "matmul");
  require_rank2(b, "matmul");
  if (cols(a) != rows(b)) {
    throw DimensionError("matmul: inner dimensions differ, " + shape_string(a.shape()) + " x " +
                         shape_string(b.shape()));
  }
  Tape& tape = a.tape();
  const std::size_t m = rows(a), k = cols(a), n = cols(b);
  Var c = tape.make({m, n}, tape.any_needs_grad({a, b}));
  tape.dispatch([&]<class T>() {
    MMap<T>(tape.out<T>(c.id()), m, n).noalias() =
        CMap<T>(tape.in<T>(a.id()), m, k) * CMap<T>(tape.in<T>(b.id()), k, n);
    if (!tape.needs_grad(c.id())) return;
    tape.record({a.id(), b.id()}, c.id(), [ai = a.id(), bi = b.id(), ci = c.id(), m, k, n](Tape& t) {
      CMap<T> gc(t.grad_or_null<T>(ci), m, n);
      if (t.needs_grad(ai)) {
        MMap<T>(t.grad_buffer<T>(ai), m, k).noalias() += gc * CMap<T>(t.in<T>(bi), k, n).transpose();
      }
      if (t.needs_grad(bi)) {
        MMap<T>(t.grad_buffer<T>(bi), k, n).noalias() += CMap<T>(t.in<T>(ai), m, k).transpose() * gc;
      }
    });
  });
  return c;
}

namespace {

template <int Sign>
Var add_or_sub(Var a, Var b, const char* name) {
  require_same_shape(a, b, name);
  Tape& tape = a.tape();
  Var y = tape.make(a.shape(), tape.any_needs_grad({a, b}));
  const std::size_t n = shape_numel(a.shape());
  tape.dispatch([&]<class T>() {
    const T* x0 = tape.in<T>(a.id());
    const T* x1 = tape.in<T>(b.id());
    T* ys = tape.out<T>(y.id());
    for (std::size_t i = 0; i < n; ++i) ys[i] = Sign > 0 ? x0[i] + x1[i] : x0[i] - x1[i];
    if (!tape.needs_grad(y.id())) return;
    tape.record({a.id(), b.id()}, y.id(), [ai = a.id(), bi = b.id(), yi = y.id(), n](Tape& t) {
      const T* gy = t.grad_or_null<T>(yi);
      if (t.needs_grad(ai)) {
        T* ga = t.grad_buffer<T>(ai);
        for (std::size_t i = 0; i < n; ++i) ga[i] += gy[i];
      }
      if (t.needs_grad(bi)) {
        T* gb = t.grad_buffer<T>(bi);
        for (std::size_t i = 0; i < n; ++i) gb[i] += Sign > 0 ? gy[i] : -gy[i];
      }
    });
  });
  return y;
}

}  // namespace

Var add(Var a, Var b) { return add_or_sub<1>(a, b, "add"); }
Var sub(Var a, Var b) { return add_or_sub<-1>(a, b, "sub"); }

Var mul(Var a, Var b) {
  require_same_shape(a, b, "mul");
  Tape& tape = a.tape();
  Var y = tape.make(a.shape(), tape.any_needs_grad({a, b}));
  const std::size_t n = shape_numel(a.shape());
  tape.dispatch([&]<class T>() {
    const T* x0 = tape.in<T>(a.id());
    const T* x1 = tape.in<T>(b.id());
    T* ys = tape.out<T>(y.id());
    for (std::size_t i = 0; i < n; ++i) ys[i] = x0[i] * x1[i];
    if (!tape.needs_grad(y.id())) return;
    tape.record({a.id(), b.id()}, y.id(), [ai = a.id(), bi = b.id(), yi = y.id(), n](Tape& t) {
      const T* gy = t.grad_or_null<T>(yi);
      if (t.needs_grad(ai)) {
        T* ga = t.grad_buffer<T>(ai);
        const T* vb = t.in<T>(bi);
        for (std::size_t i = 0; i < n; ++i) ga[i] += gy[i] * vb[i];
      }
      if (t.needs_grad(bi)) {
        T* gb = t.grad_buffer<T>(bi);
        const T* va = t.in<T>(ai);
        for (std::size_t i = 0; i < n; ++i) gb[i] += gy[i] * va[i];
      }
    });
  });
  return y;
}

Var scale(Var x, double factor) {
  return unary(x, [factor](double v) { return v * factor; }, [factor](double, double) { return factor; });
}

Var add_bias(Var x, Var bias) {
  if (bias.shape().size() != 1 || x.shape().empty() || x.shape().back() != bias.shape()[0]) {
    throw DimensionError("add_bias: bias " + shape_string(bias.shape()) + " does not match trailing axis of " +
                         shape_string(x.shape()));
  }
  Tape& tape = x.tape();
  Var y = tape.make(x.shape(), tape.any_needs_grad({x, bias}));
  const std::size_t n = bias.shape()[0];
  const std::size_t outer = shape_numel(x.shape()) / n;
  tape.dispatch([&]<class T>() {
    const T* xs = tape.in<T>(x.id());
    const T* bs = tape.in<T>(bias.id());
    T* ys = tape.out<T>(y.id());
    for (std::size_t r = 0; r < outer; ++r)
      for (std::size_t j = 0; j < n; ++j) ys[r * n + j] = xs[r * n + j] + bs[j];
    if (!tape.needs_grad(y.id())) return;
    tape.record({x.id(), bias.id()}, y.id(), [xi = x.id(), bi = bias.id(), yi = y.id(), n, outer](Tape& t) {
      const T* gy = t.grad_or_null<T>(yi);
      if (t.needs_grad(xi)) {
        T* gx = t.grad_buffer<T>(xi);
        for (std::size_t i = 0; i < n * outer; ++i) gx[i] += gy[i];
      }
      if (t.needs_grad(bi)) {
        T* gb = t.grad_buffer<T>(bi);
        for (std::size_t j = 0; j < n; ++j) {
          double acc = 0.0;
          for (std::size_t r = 0; r < outer; ++r) acc += gy[r * n + j];
          gb[j] += static_cast<T>(acc);
        }
      }
    });
  });
  return y;
}

Var relu(Var x) {
  return unary(x, [](double v) { return v > 0.0 ? v : 0.0; }, [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Var sigmoid(Var x) {
  return unary(
      x, [](double v) { return 1.0 / (1.0 + std::exp(-v)); }, [](double, double y) { return y * (1.0 - y); });
}

Var gelu(Var x) {
  return unary(
      x, [](double v) { return 0.5 * v * (1.0 + std::erf(v * (0.5 * std::numbers::sqrt2))); },
      [](double v, double) {
        const double cdf = 0.5 * (1.0 + std::erf(v * (0.5 * std::numbers::sqrt2)));
        const double pdf = std::exp(-0.5 * v * v) * 0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2;
        return cdf + v * pdf;
      });
}

Var softmax(Var x, std::size_t axis) {
  const Shape& shape = x.shape();
  if (axis >= shape.size()) {
    throw DimensionError("softmax: axis " + std::to_string(axis) + " out of range for " + shape_string(shape));
  }
  const std::size_t n = shape[axis];
  if (n == 0) throw DimensionError("softmax: empty axis");
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= shape[i];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) inner *= shape[i];
  Tape& tape = x.tape();
  Var y = tape.make(shape, tape.any_needs_grad({x}));
  tape.dispatch([&]<class T>() {
    const T* xs = tape.in<T>(x.id());
    T* ys = tape.out<T>(y.id());
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t in = 0; in < inner; ++in) {
        const std::size_t base = o * n * inner + in;
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n; ++j) mx = std::max(mx, static_cast<double>(xs[base + j * inner]));
        double total = 0.0;
        for (std::size_t j = 0; j < n; ++j) total += std::exp(static_cast<double>(xs[base + j * inner]) - mx);
        for (std::size_t j = 0; j < n; ++j) {
          ys[base + j * inner] = static_cast<T>(std::exp(static_cast<double>(xs[base + j * inner]) - mx) / total);
        }
      }
    }
    if (!tape.needs_grad(y.id())) return;
    tape.record({x.id()}, y.id(), [xi = x.id(), yi = y.id(), n, outer, inner](Tape& t) {
      const T* gy = t.grad_or_null<T>(yi);
      const T* yv = t.in<T>(yi);
      T* gx = t.grad_buffer<T>(xi);
      for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t in = 0; in < inner; ++in) {
          const std::size_t base = o * n * inner + in;
          double dot = 0.0;
          for (std::size_t j = 0; j < n; ++j) dot += static_cast<double>(gy[base + j * inner]) * yv[base + j * inner];
          for (std::size_t j = 0; j < n; ++j) {
            const std::size_t idx = base + j * inner;
            gx[idx] += static_cast<T>(yv[idx] * (static_cast<double>(gy[idx]) - dot));
          }
        }
      }
    });
  });
  return y;
}

Var layer_norm(Var x, Var gain, Var bias, double eps) {
  const Shape& shape = x.shape();
  if (shape.empty()) throw DimensionError("layer_norm: scalar input");
  const std::size_t n = shape.back();
  if (gain.shape() != Shape{n} || bias.shape() != Shape{n}) {
    throw DimensionError("layer_norm: gain/bias " + shape_string(gain.shape()) + "/" + shape_string(bias.shape()) +
                         " do not match trailing axis of " + shape_string(shape));
  }
  if (n == 0) throw DimensionError("layer_norm: empty normalized axis");
  const std::size_t outer = shape_numel(shape) / n;
  Tape& tape = x.tape();
  Var y = tape.make(shape, tape.any_needs_grad({x, gain, bias}));
  tape.dispatch([&]<class T>() {
    const T* xs = tape.in<T>(x.id());
    const T* gs = tape.in<T>(gain.id());
    const T* bs = tape.in<T>(bias.id());
    T* ys = tape.out<T>(y.id());
    std::vector<double> rstd(outer), mu(outer);
    for (std::size_t r = 0; r < outer; ++r) {
      const T* row = xs + r * n;
      double m = 0.0;
      for (std::size_t j = 0; j < n; ++j) m += row[j];
      m /= static_cast<double>(n);
      double var = 0.0;
      for (std::size_t j = 0; j < n; ++j) var += (row[j] - m) * (row[j] - m);
      var /= static_cast<double>(n);
      const double rs = 1.0 / std::sqrt(var + eps);
      mu[r] = m;
      rstd[r] = rs;
      for (std::size_t j = 0; j < n; ++j) ys[r * n + j] = static_cast<T>((row[j] - m) * rs * gs[j] + bs[j]);
    }
    if (!tape.needs_grad(y.id())) return;
    tape.record({x.id(), gain.id(), bias.id()}, y.id(),
                [xi = x.id(), gi = gain.id(), bi = bias.id(), yi = y.id(), n, outer, mu = std::move(mu),
                 rstd = std::move(rstd)](Tape& t) {
                  const T* gy = t.grad_or_null<T>(yi);
                  const T* xv = t.in<T>(xi);
                  const T* gv = t.in<T>(gi);
                  T* gx = t.needs_grad(xi) ? t.grad_buffer<T>(xi) : nullptr;
                  T* gg = t.needs_grad(gi) ? t.grad_buffer<T>(gi) : nullptr;
                  T* gb = t.needs_grad(bi) ? t.grad_buffer<T>(bi) : nullptr;
                  std::vector<double> xhat(n), dxhat(n);
                  for (std::size_t r = 0; r < outer; ++r) {
                    double mean_d = 0.0, mean_dx = 0.0;
                    for (std::size_t j = 0; j < n; ++j) {
                      xhat[j] = (xv[r * n + j] - mu[r]) * rstd[r];
                      dxhat[j] = static_cast<double>(gy[r * n + j]) * gv[j];
                      mean_d += dxhat[j];
                      mean_dx += dxhat[j] * xhat[j];
                      if (gg) gg[j] += static_cast<T>(gy[r * n + j] * xhat[j]);
                      if (gb) gb[j] += gy[r * n + j];
                    }
                    if (!gx) continue;
                    mean_d /= static_cast<double>(n);
                    mean_dx /= static_cast<double>(n);
                    for (std::size_t j = 0; j < n; ++j) {
                      gx[r * n + j] += static_cast<T>(rstd[r] * (dxhat[j] - mean_d - xhat[j] * mean_dx));
                    }
                  }
                });
  });
  return y;
}

Var cross_entropy(Var logits, std::span<const int> targets, std::span<const std::uint8_t> mask) {
  require_rank2(logits, "cross_entropy");
  const std::size_t steps = rows(logits), vocab = cols(logits);
  if (targets.size() != steps || mask.size() != steps) {
    throw DimensionError("cross_entropy: " + std::to_string(targets.size()) + " targets / " +
                         std::to_string(mask.size()) + " mask flags for logits " + shape_string(logits.shape()));
  }
  std::size_t count = 0;
  for (std::size_t t = 0; t < steps; ++t) {
    if (!mask[t]) continue;
    if (targets[t] < 0 || static_cast<std::size_t>(targets[t]) >= vocab) {
      throw VocabularyError("cross_entropy: target id " + std::to_string(targets[t]) + " outside vocabulary of size " +
                            std::to_string(vocab));
    }
    ++count;
  }
  Tape& tape = logits.tape();
  Var loss = tape.make({1}, tape.any_needs_grad({logits}));
  std::vector<int> tgt(targets.begin(), targets.end());
  std::vector<std::uint8_t> msk(mask.begin(), mask.end());
  tape.dispatch([&]<class T>() {
    const T* z = tape.in<T>(logits.id());
    double total = 0.0;
    for (std::size_t t = 0; t < steps; ++t) {
      if (!msk[t]) continue;
      const T* row = z + t * vocab;
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < vocab; ++j) mx = std::max(mx, static_cast<double>(row[j]));
      double s = 0.0;
      for (std::size_t j = 0; j < vocab; ++j) s += std::exp(row[j] - mx);
      total += (mx + std::log(s)) - row[tgt[t]];
    }
    tape.out<T>(loss.id())[0] = count ? static_cast<T>(total / static_cast<double>(count)) : T(0);
    if (!tape.needs_grad(loss.id())) return;
    tape.record({logits.id()}, loss.id(),
                [zi = logits.id(), li = loss.id(), steps, vocab, count, tgt = std::move(tgt), msk = std::move(msk)](Tape& t) {
                  T* gz = t.grad_buffer<T>(zi);
                  if (count == 0) return;
                  const double up = t.grad_or_null<T>(li)[0] / static_cast<double>(count);
                  const T* z = t.in<T>(zi);
                  for (std::size_t s = 0; s < steps; ++s) {
                    if (!msk[s]) continue;
                    const T* row = z + s * vocab;
                    double mx = -std::numeric_limits<double>::infinity();
                    for (std::size_t j = 0; j < vocab; ++j) mx = std::max(mx, static_cast<double>(row[j]));
                    double total = 0.0;
                    for (std::size_t j = 0; j < vocab; ++j) total += std::exp(row[j] - mx);
                    for (std::size_t j = 0; j < vocab; ++j) {
                      double p = std::exp(row[j] - mx) / total;
                      if (static_cast<int>(j) == tgt[s]) p -= 1.0;
                      gz[s * vocab + j] += static_cast<T>(up * p);
                    }
                  }
                });
  });
  return loss;
}

Var concat_cols(Var a, Var b) {
  require_rank2(a, "concat_cols");
  require_rank2(b, "concat_cols");
  if (rows(a) != rows(b)) {
    throw DimensionError("concat_cols: row counts differ, " + shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
  }
  const std::size_t m = rows(a), p = cols(a), q = cols(b);
  Tape& tape = a.tape();
  Var y = tape.make({m, p + q}, tape.any_needs_grad({a, b}));
  tape.dispatch([&]<class T>() {
    const T* xa = tape.in<T>(a.id());
    const T* xb = tape.in<T>(b.id());
    T* ys = tape.out<T>(y.id());
    for (std::size_t r = 0; r < m; ++r) {
      std::copy(xa + r * p, xa + (r + 1) * p, ys + r * (p + q));
      std::copy(xb + r * q, xb + (r + 1) * q, ys + r * (p + q) + p);
    }
    if (!tape.needs_grad(y.id())) return;
    tape.record({a.id(), b.id()}, y.id(), [ai = a.id(), bi = b.id(), yi = y.id(), m, p, q](Tape& t) {
      const T* gy = t.grad_or_null<T>(yi);
      if (t.needs_grad(ai)) {
        T* ga = t.grad_buffer<T>(ai);
        for (std::size_t r = 0; r < m; ++r)
          for (std::size_t j = 0; j < p; ++j) ga[r * p + j] += gy[r * (p + q) + j];
      }
      if (t.needs_grad(bi)) {
        T* gb = t.grad_buffer<T>(bi);
        for (std::size_t r = 0; r < m; ++r)
          for (std::size_t j = 0; j < q; ++j) gb[r * q + j] += gy[r * (p + q) + p + j];
      }
    });
  });
  return y;
}

Var concat_rows(Var a, Var b) {
  require_rank2(a, "concat_rows");
  require_rank2(b, "concat_rows");
  if (cols(a) != cols(b)) {
    throw DimensionError("concat_rows: column counts differ, " + shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
  }
  const std::size_t na = shape_numel(a.shape()), nb = shape_numel(b.shape());
  Tape& tape = a.tape();
  Var y = tape.make({rows(a) + rows(b), cols(a)}, tape.any_needs_grad({a, b}));
  tape.dispatch([&]<class T>() {
    T* ys = tape.out<T>(y.id());
    std::copy(tape.in<T>(a.id()), tape.in<T>(a.id()) + na, ys);
    std::copy(tape.in<T>(b.id()), tape.in<T>(b.id()) + nb, ys + na);
    if (!tape.needs_grad(y.id())) return;
    tape.record({a.id(), b.id()}, y.id(), [ai = a.id(), bi = b.id(), yi = y.id(), na, nb](Tape& t) {
      const T* gy = t.grad_or_null<T>(yi);
      if (t.needs_grad(ai)) {
        T* ga = t.grad_buffer<T>(ai);
        for (std::size_t i = 0; i < na; ++i) ga[i] += gy[i];
      }
      if (t.needs_grad(bi)) {
        T* gb = t.grad_buffer<T>(bi);
        for (std::size_t i = 0; i < nb; ++i) gb[i] += gy[na + i];
      }
    });
  });
  return y;
}

Var slice_rows(Var x, std::size_t begin, std::size_t count) {
  require_rank2(x, "slice_rows");
  if (begin + count > rows(x)) {
    throw DimensionError("slice_rows: rows [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                         ") out of range for " + shape_string(x.shape()));
  }
  const std::size_t c = cols(x);
  Tape& tape = x.tape();
  Var y = tape.make({count, c}, tape.any_needs_grad({x}));
  tape.dispatch([&]<class T>() {
    const T* xs = tape.in<T>(x.id()) + begin * c;
    std::copy(xs, xs + count * c, tape.out<T>(y.id()));
    if (!tape.needs_grad(y.id())) return;
    tape.record({x.id()}, y.id(), [xi = x.id(), yi = y.id(), begin, count, c](Tape& t) {
      const T* gy = t.grad_or_null<T>(yi);
      T* gx = t.grad_buffer<T>(xi) + begin * c;
      for (std::size_t i = 0; i < count * c; ++i) gx[i] += gy[i];
    });
  });
  return y;
}

Var gather_rows(Var table, std::span<const int> ids) {
  require_rank2(table, "gather_rows");
  const std::size_t vocab = rows(table), c = cols(table);
  for (int id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= vocab) {
      throw VocabularyError("gather_rows: id " + std::to_string(id) + " outside table of " + std::to_string(vocab) +
                            " rows");
    }
  }
  Tape& tape = table.tape();
  Var y = tape.make({ids.size(), c}, tape.any_needs_grad({table}));
  std::vector<int> idx(ids.begin(), ids.end());
  tape.dispatch([&]<class T>() {
    const T* src = tape.in<T>(table.id());
    T* ys = tape.out<T>(y.id());
    for (std::size_t r = 0; r < idx.size(); ++r) std::copy(src + idx[r] * c, src + (idx[r] + 1) * c, ys + r * c);
    if (!tape.needs_grad(y.id())) return;
    tape.record({table.id()}, y.id(), [ti = table.id(), yi = y.id(), c, idx = std::move(idx)](Tape& t) {
      const T* gy = t.grad_or_null<T>(yi);
      T* gt = t.grad_buffer<T>(ti);
      for (std::size_t r = 0; r < idx.size(); ++r)
        for (std::size_t j = 0; j < c; ++j) gt[idx[r] * c + j] += gy[r * c + j];
    });
  });
  return y;
}

Var reshape(Var x, Shape shape) {
  if (shape_numel(shape) != shape_numel(x.shape())) {
    throw DimensionError("reshape: " + shape_string(x.shape()) + " -> " + shape_string(shape));
  }
  const std::size_t n = shape_numel(shape);
  Tape& tape = x.tape();
  Var y = tape.make(std::move(shape), tape.any_needs_grad({x}));
  tape.dispatch([&]<class T>() {
    std::copy(tape.in<T>(x.id()), tape.in<T>(x.id()) + n, tape.out<T>(y.id()));
    if (!tape.needs_grad(y.id())) return;
    tape.record({x.id()}, y.id(), [xi = x.id(), yi = y.id(), n](Tape& t) {
      const T* gy = t.grad_or_null<T>(yi);
      T* gx = t.grad_buffer<T>(xi);
      for (std::size_t i = 0; i < n; ++i) gx[i] += gy[i];
    });
  });
  return y;
}

Var vector_norms(Var v) {
  require_rank2(v, "vector_norms");
  if (rows(v) % 3 != 0) throw DimensionError("vector_norms: row count not a multiple of 3 in " + shape_string(v.shape()));
  const std::size_t n = rows(v) / 3, c = cols(v);
  Tape& tape = v.tape();
  Var y = tape.make({n, c}, tape.any_needs_grad({v}));
  tape.dispatch([&]<class T>() {
    const T* xs = tape.in<T>(v.id());
    T* ys = tape.out<T>(y.id());
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < c; ++j) {
        double acc = 0.0;
        for (std::size_t k = 0; k < 3; ++k) acc += static_cast<double>(xs[(3 * i + k) * c + j]) * xs[(3 * i + k) * c + j];
        ys[i * c + j] = static_cast<T>(std::sqrt(acc));
      }
    }
    if (!tape.needs_grad(y.id())) return;
    tape.record({v.id()}, y.id(), [vi = v.id(), yi = y.id(), n, c](Tape& t) {
      const T* gy = t.grad_or_null<T>(yi);
      const T* xs = t.in<T>(vi);
      const T* ys = t.in<T>(yi);
      T* gx = t.grad_buffer<T>(vi);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
          const double norm = ys[i * c + j];
          if (norm <= 0.0) continue;  // subgradient 0 at the origin
          for (std::size_t k = 0; k < 3; ++k) {
            gx[(3 * i + k) * c + j] += static_cast<T>(gy[i * c + j] * xs[(3 * i + k) * c + j] / norm);
          }
        }
      }
    });
  });
  return y;
}

Var gate_vectors(Var v, Var gate) {
  require_rank2(v, "gate_vectors");
  require_rank2(gate, "gate_vectors");
  if (rows(v) != 3 * rows(gate) || cols(v) != cols(gate)) {
    throw DimensionError("gate_vectors: vectors " + shape_string(v.shape()) + " vs gate " + shape_string(gate.shape()));
  }
  const std::size_t n = rows(gate), c = cols(gate);
  Tape& tape = v.tape();
  Var y = tape.make(v.shape(), tape.any_needs_grad({v, gate}));
  tape.dispatch([&]<class T>() {
    const T* xs = tape.in<T>(v.id());
    const T* gs = tape.in<T>(gate.id());
    T* ys = tape.out<T>(y.id());
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < 3; ++k)
        for (std::size_t j = 0; j < c; ++j) ys[(3 * i + k) * c + j] = xs[(3 * i + k) * c + j] * gs[i * c + j];
    if (!tape.needs_grad(y.id())) return;
    tape.record({v.id(), gate.id()}, y.id(), [vi = v.id(), gi = gate.id(), yi = y.id(), n, c](Tape& t) {
      const T* gy = t.grad_or_null<T>(yi);
      const T* xs = t.in<T>(vi);
      const T* gs = t.in<T>(gi);
      T* gv = t.needs_grad(vi) ? t.grad_buffer<T>(vi) : nullptr;
      T* gg = t.needs_grad(gi) ? t.grad_buffer<T>(gi) : nullptr;
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
          double acc = 0.0;
          for (std::size_t k = 0; k < 3; ++k) {
            const std::size_t idx = (3 * i + k) * c + j;
            if (gv) gv[idx] += gy[idx] * gs[i * c + j];
            acc += static_cast<double>(gy[idx]) * xs[idx];
          }
          if (gg) gg[i * c + j] += static_cast<T>(acc);
        }
      }
    });
  });
  return y;
}

Var group_mean(Var x, std::size_t group) {
  require_rank2(x, "group_mean");
  if (group == 0 || rows(x) % group != 0) {
    throw DimensionError("group_mean: group size " + std::to_string(group) + " does not divide " +
                         shape_string(x.shape()));
  }
  const std::size_t n = rows(x) / group, c = cols(x);
  Tape& tape = x.tape();
  Var y = tape.make({n, c}, tape.any_needs_grad({x}));
  tape.dispatch([&]<class T>() {
    const T* xs = tape.in<T>(x.id());
    T* ys = tape.out<T>(y.id());
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < c; ++j) {
        double acc = 0.0;
        for (std::size_t k = 0; k < group; ++k) acc += xs[(i * group + k) * c + j];
        ys[i * c + j] = static_cast<T>(acc / static_cast<double>(group));
      }
    }
    if (!tape.needs_grad(y.id())) return;
    tape.record({x.id()}, y.id(), [xi = x.id(), yi = y.id(), n, c, group](Tape& t) {
      const T* gy = t.grad_or_null<T>(yi);
      T* gx = t.grad_buffer<T>(xi);
      const T inv = T(1) / static_cast<T>(group);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < group; ++k)
          for (std::size_t j = 0; j < c; ++j) gx[(i * group + k) * c + j] += gy[i * c + j] * inv;
    });
  });
  return y;
}

Var repeat_rows(Var x, std::size_t times) {
  require_rank2(x, "repeat_rows");
  const std::size_t n = rows(x), c = cols(x);
  Tape& tape = x.tape();
  Var y = tape.make({n * times, c}, tape.any_needs_grad({x}));
  tape.dispatch([&]<class T>() {
    const T* xs = tape.in<T>(x.id());
    T* ys = tape.out<T>(y.id());
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < times; ++k) std::copy(xs + i * c, xs + (i + 1) * c, ys + (i * times + k) * c);
    if (!tape.needs_grad(y.id())) return;
    tape.record({x.id()}, y.id(), [xi = x.id(), yi = y.id(), n, c, times](Tape& t) {
      const T* gy = t.grad_or_null<T>(yi);
      T* gx = t.grad_buffer<T>(xi);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < times; ++k)
          for (std::size_t j = 0; j < c; ++j) gx[i * c + j] += gy[(i * times + k) * c + j];
    });
  });
  return y;
}

Var gather_max(Var x, const std::vector<std::vector<int>>& groups) {
  require_rank2(x, "gather_max");
  const std::size_t n = rows(x), c = cols(x), g = groups.size();
  for (const auto& grp : groups) {
    if (grp.empty()) throw DimensionError("gather_max: empty group");
    for (int r : grp) {
      if (r < 0 || static_cast<std::size_t>(r) >= n) {
        throw DimensionError("gather_max: row " + std::to_string(r) + " out of range for " + shape_string(x.shape()));
      }
    }
  }
  Tape& tape = x.tape();
  Var y = tape.make({g, c}, tape.any_needs_grad({x}));
  std::vector<int> argmax(g * c);
  tape.dispatch([&]<class T>() {
    const T* xs = tape.in<T>(x.id());
    T* ys = tape.out<T>(y.id());
    for (std::size_t p = 0; p < g; ++p) {
      for (std::size_t j = 0; j < c; ++j) {
        int best = groups[p][0];
        for (int r : groups[p]) {
          if (xs[r * c + j] > xs[best * c + j]) best = r;
        }
        argmax[p * c + j] = best;
        ys[p * c + j] = xs[best * c + j];
      }
    }
    if (!tape.needs_grad(y.id())) return;
    tape.record({x.id()}, y.id(), [xi = x.id(), yi = y.id(), c, argmax = std::move(argmax)](Tape& t) {
      const T* gy = t.grad_or_null<T>(yi);
      T* gx = t.grad_buffer<T>(xi);
      for (std::size_t i = 0; i < argmax.size(); ++i) gx[argmax[i] * c + i % c] += gy[i];
    });
  });
  return y;
}

Var max_rows(Var x) {
  require_rank2(x, "max_rows");
  std::vector<int> all(rows(x));
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
  return gather_max(x, {all});
}

Var broadcast_rows(Var x, std::size_t count) {
  require_rank2(x, "broadcast_rows");
  if (rows(x) != 1) throw DimensionError("broadcast_rows: expected a single row, got " + shape_string(x.shape()));
  return repeat_rows(x, count);
}

Var sum(Var x) {
  const std::size_t n = shape_numel(x.shape());
  Tape& tape = x.tape();
  Var y = tape.make({1}, tape.any_needs_grad({x}));
  tape.dispatch([&]<class T>() {
    const T* xs = tape.in<T>(x.id());
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += xs[i];
    tape.out<T>(y.id())[0] = static_cast<T>(acc);
    if (!tape.needs_grad(y.id())) return;
    tape.record({x.id()}, y.id(), [xi = x.id(), yi = y.id(), n](Tape& t) {
      const T up = t.grad_or_null<T>(yi)[0];
      T* gx = t.grad_buffer<T>(xi);
      for (std::size_t i = 0; i < n; ++i) gx[i] += up;
    });
  });
  return y;
}

Var mean(Var x) {
  const std::size_t n = shape_numel(x.shape());
  if (n == 0) throw DimensionError("mean of an empty tensor");
  return scale(sum(x), 1.0 / static_cast<double>(n));
}

Var attention(Var q, Var k, Var v, std::size_t heads, AttentionMask mask) {
  require_rank2(q, "attention");
  require_rank2(k, "attention");
  require_rank2(v, "attention");
  if (k.shape() != v.shape() || cols(q) != cols(k)) {
    throw DimensionError("attention: q " + shape_string(q.shape()) + ", k " + shape_string(k.shape()) + ", v " +
                         shape_string(v.shape()));
  }
  const std::size_t tq = rows(q), tk = rows(k), width = cols(q);
  if (heads == 0 || width % heads != 0) {
    throw DimensionError("attention: width " + std::to_string(width) + " not divisible by " + std::to_string(heads) +
                         " heads");
  }
  const std::size_t dh = width / heads;
  const double inv_scale = 1.0 / std::sqrt(static_cast<double>(dh));
  Tape& tape = q.tape();
  Var y = tape.make({tq, width}, tape.any_needs_grad({q, k, v}));
  tape.dispatch([&]<class T>() {
    using Stride = Eigen::OuterStride<>;
    auto probs = std::make_shared<std::vector<T>>(heads * tq * tk);
    const T* qs = tape.in<T>(q.id());
    const T* ks = tape.in<T>(k.id());
    const T* vs = tape.in<T>(v.id());
    T* ys = tape.out<T>(y.id());
    Mat<T> scores(tq, tk);
    for (std::size_t h = 0; h < heads; ++h) {
      CStrided<T> qh(qs + h * dh, tq, dh, Stride(width));
      CStrided<T> kh(ks + h * dh, tk, dh, Stride(width));
      CStrided<T> vh(vs + h * dh, tk, dh, Stride(width));
      scores.noalias() = qh * kh.transpose();
      MMap<T> p(probs->data() + h * tq * tk, tq, tk);
      for (std::size_t i = 0; i < tq; ++i) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < tk; ++j) {
          if (mask.allowed(i, j)) mx = std::max(mx, scores(i, j) * inv_scale);
        }
        double total = 0.0;
        for (std::size_t j = 0; j < tk; ++j) {
          const double e = mask.allowed(i, j) ? std::exp(scores(i, j) * inv_scale - mx) : 0.0;
          p(i, j) = static_cast<T>(e);
          total += e;
        }
        for (std::size_t j = 0; j < tk; ++j) p(i, j) = static_cast<T>(p(i, j) / total);
      }
      MStrided<T>(ys + h * dh, tq, dh, Stride(width)).noalias() = p * vh;
    }
    if (!tape.needs_grad(y.id())) return;
    tape.record({q.id(), k.id(), v.id()}, y.id(),
                [qi = q.id(), ki = k.id(), vi = v.id(), yi = y.id(), tq, tk, width, heads, dh, inv_scale,
                 probs](Tape& t) {
                  const T* gy = t.grad_or_null<T>(yi);
                  const T* qs = t.in<T>(qi);
                  const T* ks = t.in<T>(ki);
                  const T* vs = t.in<T>(vi);
                  T* gq = t.needs_grad(qi) ? t.grad_buffer<T>(qi) : nullptr;
                  T* gk = t.needs_grad(ki) ? t.grad_buffer<T>(ki) : nullptr;
                  T* gv = t.needs_grad(vi) ? t.grad_buffer<T>(vi) : nullptr;
                  Mat<T> dp(tq, tk);
                  for (std::size_t h = 0; h < heads; ++h) {
                    CStrided<T> gyh(gy + h * dh, tq, dh, Stride(width));
                    CStrided<T> qh(qs + h * dh, tq, dh, Stride(width));
                    CStrided<T> kh(ks + h * dh, tk, dh, Stride(width));
                    CStrided<T> vh(vs + h * dh, tk, dh, Stride(width));
                    CMap<T> p(probs->data() + h * tq * tk, tq, tk);
                    if (gv) MStrided<T>(gv + h * dh, tk, dh, Stride(width)).noalias() += p.transpose() * gyh;
                    dp.noalias() = gyh * vh.transpose();
                    for (std::size_t i = 0; i < tq; ++i) {
                      double dot = 0.0;
                      for (std::size_t j = 0; j < tk; ++j) dot += static_cast<double>(dp(i, j)) * p(i, j);
                      for (std::size_t j = 0; j < tk; ++j) {
                        dp(i, j) = static_cast<T>(p(i, j) * (dp(i, j) - dot) * inv_scale);
                      }
                    }
                    if (gq) MStrided<T>(gq + h * dh, tq, dh, Stride(width)).noalias() += dp * kh;
                    if (gk) MStrided<T>(gk + h * dh, tk, dh, Stride(width)).noalias() += dp.transpose() * qh;
                  }
                });
  });
  return y;
}

Var dropout(Var x, double p, Rng& rng) {
  if (p <= 0.0) return x;
  if (p >= 1.0) throw ArgumentError("dropout probability must be < 1");
  const std::size_t n = shape_numel(x.shape());
  std::vector<float> keep(n);
  const float s = static_cast<float>(1.0 / (1.0 - p));
  for (std::size_t i = 0; i < n; ++i) keep[i] = rng.uniform() < p ? 0.0f : s;
  Tape& tape = x.tape();
  return mul(x, tape.constant(x.shape(), keep));
}

}  // namespace dspg::numerics
