#pragma once

#include <string>

#include "dhap/numerics/ops.hpp"
#include "dhap/numerics/parameter.hpp"

namespace dhap::num {

/// Weights of a gated recurrent unit acting on [x; h].
struct GruParams {
  Parameter* w_update = nullptr;  // [hidden x (input + hidden)]
  Parameter* b_update = nullptr;
  Parameter* w_reset = nullptr;
  Parameter* b_reset = nullptr;
  Parameter* w_cand = nullptr;
  Parameter* b_cand = nullptr;

  static GruParams create(ParameterSet& set, const std::string& prefix, std::size_t input, std::size_t hidden,
                          Rng& rng);
  std::size_t hidden() const { return w_update->value.rows(); }
  std::size_t input() const { return w_update->value.cols() - hidden(); }
};

/// z = s(Wz[x;h]), r = s(Wr[x;h]), c = tanh(Wh[x; r*h]), h' = (1-z)*h + z*c.
Var gru_cell(Var x, Var h_prev, const GruParams& p);

/// Runs a GRU over the rows of `inputs` starting from `h0`; returns the
/// [steps x hidden] matrix of states. `reverse` walks the rows backwards but
/// still stores state i in row i.
Var gru_sequence(Var inputs, Var h0, const GruParams& p, bool reverse);

/// Additive (Bahdanau) scoring s_i = v^T tanh(Wq q + Wk k_i + b).
struct AttentionParams {
  Parameter* w_query = nullptr;  // [hidden x d_query]
  Parameter* w_key = nullptr;    // [hidden x d_key]
  Parameter* bias = nullptr;     // [hidden]
  Parameter* v = nullptr;        // [1 x hidden]

  static AttentionParams create(ParameterSet& set, const std::string& prefix, std::size_t d_query, std::size_t d_key,
                                std::size_t hidden, Rng& rng);
};

/// Keys projected once so each query costs one small affine map.
struct AttentionMemory {
  Var projected_keys;  // [n x hidden]
  Var values;          // [n x d_value]
  Mask mask;           // empty = all positions kept
};

AttentionMemory prepare_attention(Var keys, Var values, const AttentionParams& p, Mask mask = {});

struct AttentionResult {
  Var context;  // [1 x d_value]
  Var weights;  // [1 x n]
};

/// weights = softmax(scores) over unmasked keys, context = weights * values.
/// Throws when every key is masked.
AttentionResult additive_attention(Var query, const AttentionMemory& memory, const AttentionParams& p);
AttentionResult additive_attention(Var query, Var keys, Var values, const AttentionParams& p, Mask mask = {});

}  // namespace dhap::num
