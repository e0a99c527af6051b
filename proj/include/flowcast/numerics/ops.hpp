#pragma once

#include <initializer_list>
#include <vector>

#include "flowcast/numerics/graph.hpp"

namespace flowcast::numerics {

// Elementwise; operands must have identical shapes.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var x, double factor);
Var add_scalar(Var x, double offset);
Var exp(Var x);
Var tanh(Var x);
Var relu(Var x);
Var square(Var x);

/// Sum of every element, as a rank-0 array.
Var sum(Var x);
/// Sum over the last axis: [N, D] -> [N].
Var sum_last(Var x);
Var mean(Var x);

/// x[N, in] * w[out, in]^T + b[out] -> [N, out].
Var affine(Var x, Var w, Var b);

/// Stride-1 1-D convolution with zero padding that preserves length.
/// x[N, Cin, L], w[Cout, Cin, K] with K odd, b[Cout] -> [N, Cout, L].
Var conv1d(Var x, Var w, Var b);

Var reshape(Var x, Shape shape);
Var slice(Var x, std::size_t axis, std::size_t begin, std::size_t end);
Var concat(const std::vector<Var>& parts, std::size_t axis);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }

}  // namespace flowcast::numerics
