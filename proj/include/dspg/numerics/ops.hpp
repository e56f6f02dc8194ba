#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "dspg/numerics/random.hpp"
#include "dspg/numerics/tape.hpp"

// Differentiable primitives. Unless stated otherwise every op takes rank-2
// operands; the only broadcast supported is a trailing-axis bias (add_bias).
// Shape mismatches raise DimensionError naming both shapes.
namespace dspg::numerics {

Var matmul(Var a, Var b);  // [m,k] x [k,n]
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var x, double factor);
Var add_bias(Var x, Var bias);  // x[..., n] + bias[n]

Var relu(Var x);
Var sigmoid(Var x);
Var gelu(Var x);

Var softmax(Var x, std::size_t axis);
Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-5);

// Mean of -log softmax(logits[t])[targets[t]] over positions with mask[t] != 0.
// Returns a [1] tensor; zero (with zero gradients) when nothing is unmasked.
Var cross_entropy(Var logits, std::span<const int> targets, std::span<const std::uint8_t> mask);

Var concat_cols(Var a, Var b);  // [m,p] ++ [m,q] -> [m,p+q]
Var concat_rows(Var a, Var b);  // [p,n] ++ [q,n] -> [p+q,n]
Var slice_rows(Var x, std::size_t begin, std::size_t count);
Var gather_rows(Var table, std::span<const int> ids);
Var reshape(Var x, Shape shape);

// Geometric-vector helpers. A block of n 3-vectors with c channels is stored
// as [(n*3), c]: row 3*i + k holds spatial component k of every channel.
Var vector_norms(Var v);          // -> [n, c]
Var gate_vectors(Var v, Var gate);  // v[(n*3),c] scaled by gate[n,c]

Var group_mean(Var x, std::size_t group);   // [(n*g),c] -> [n,c]
Var repeat_rows(Var x, std::size_t times);  // [n,c] -> [(n*times),c]
// Column-wise max over each listed row group; ties resolve to the first
// listed row.
Var gather_max(Var x, const std::vector<std::vector<int>>& groups);
Var max_rows(Var x);                              // [n,c] -> [1,c]
Var broadcast_rows(Var x, std::size_t rows);      // [1,c] -> [rows,c]

Var sum(Var x);
Var mean(Var x);

struct AttentionMask {
  bool causal = false;
  // Rows/cols below this index see each other regardless of causality.
  std::size_t bidirectional_prefix = 0;
  bool allowed(std::size_t query, std::size_t key) const {
    if (!causal) return true;
    return key <= query || (query < bidirectional_prefix && key < bidirectional_prefix);
  }
};

// Scaled dot-product multi-head attention on pre-projected q, k, v [t,h].
Var attention(Var q, Var k, Var v, std::size_t heads, AttentionMask mask);

// Inverted dropout; identity when p == 0.
Var dropout(Var x, double p, Rng& rng);

}  // namespace dspg::numerics
