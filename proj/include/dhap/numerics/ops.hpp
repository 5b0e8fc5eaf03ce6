#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dhap/numerics/tape.hpp"

// Differentiable primitives. All values are treated as matrices; a vector is
// a single row. Shape violations throw ShapeError.
namespace dhap::num {

/// Column mask shared by every row: 1 keeps the position, 0 removes it.
using Mask = std::vector<std::uint8_t>;

Var matmul(Var a, Var b);     // [m x k] * [k x n]
Var matmul_nt(Var a, Var b);  // [m x k] * [n x k]^T
/// x W^T + b, with x [n x in], W [out x in], b [1 x out] or invalid.
Var linear(Var x, Var w, Var b = {});

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var add_row(Var a, Var row);  // broadcasts a [1 x n] row over every row of a
Var scale(Var a, Real s);
Var one_minus(Var a);

Var tanh(Var a);
Var sigmoid(Var a);
Var relu(Var a);
Var log(Var a);
/// max(a, floor) elementwise; the gradient is zero where the floor binds.
Var clamp_min(Var a, Real floor);

/// Row-wise softmax. Masked columns get exactly zero. A row with no kept
/// column is an error.
Var softmax(Var logits, const Mask* mask = nullptr);
Var layer_norm(Var x, Var gain, Var bias, Real eps = Real(1e-5));
Var dropout(Var a, Real rate);

Var concat_cols(std::span<const Var> parts);
Var concat_cols(std::initializer_list<Var> parts);
Var slice_cols(Var a, std::size_t start, std::size_t len);
Var slice_rows(Var a, std::size_t start, std::size_t len);
Var stack_rows(std::span<const Var> rows);
Var sum_rows(Var a);   // [m x n] -> [1 x n]
Var mean_rows(Var a);  // [m x n] -> [1 x n]

/// Gathers rows of `table` by id.
Var embedding(Var table, std::span<const int> ids);

Var element(Var a, std::size_t r, std::size_t c);  // -> [1 x 1]
Var sum(Var a);                                     // -> [1 x 1]
/// Sum of the entries at the given flat indices -> [1 x 1].
Var sum_at(Var a, std::span<const std::size_t> indices);

}  // namespace dhap::num
