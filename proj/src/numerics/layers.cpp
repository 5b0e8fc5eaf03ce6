#include "dhap/numerics/layers.hpp"

#include <vector>

namespace dhap::num {

GruParams GruParams::create(ParameterSet& set, const std::string& prefix, std::size_t input, std::size_t hidden,
                            Rng& rng) {
  GruParams p;
  const std::size_t width = input + hidden;
  p.w_update = &set.add(prefix + ".w_update", {hidden, width}, Init::kFanIn, rng);
  p.b_update = &set.add(prefix + ".b_update", {hidden}, Init::kZeros, rng);
  p.w_reset = &set.add(prefix + ".w_reset", {hidden, width}, Init::kFanIn, rng);
  p.b_reset = &set.add(prefix + ".b_reset", {hidden}, Init::kZeros, rng);
  p.w_cand = &set.add(prefix + ".w_cand", {hidden, width}, Init::kFanIn, rng);
  p.b_cand = &set.add(prefix + ".b_cand", {hidden}, Init::kZeros, rng);
  return p;
}

Var gru_cell(Var x, Var h_prev, const GruParams& p) {
  Tape& t = *x.tape;
  if (x.rows() != 1 || h_prev.rows() != 1) throw ShapeError("gru_cell: x and h must be single rows");
  if (x.cols() + h_prev.cols() != p.w_update->value.cols() || h_prev.cols() != p.hidden()) {
    throw ShapeError("gru_cell: input " + std::to_string(x.cols()) + " + hidden " + std::to_string(h_prev.cols()) +
                     " does not match weights " + shape_string(p.w_update->value.shape()));
  }
  Var xh = concat_cols({x, h_prev});
  Var z = sigmoid(linear(xh, t.param(*p.w_update), t.param(*p.b_update)));
  Var r = sigmoid(linear(xh, t.param(*p.w_reset), t.param(*p.b_reset)));
  Var cand = tanh(linear(concat_cols({x, mul(r, h_prev)}), t.param(*p.w_cand), t.param(*p.b_cand)));
  return add(mul(one_minus(z), h_prev), mul(z, cand));
}

Var gru_sequence(Var inputs, Var h0, const GruParams& p, bool reverse) {
  const std::size_t steps = inputs.rows();
  if (steps == 0) throw ShapeError("gru_sequence: empty input");
  std::vector<Var> states(steps);
  Var h = h0;
  for (std::size_t k = 0; k < steps; ++k) {
    const std::size_t i = reverse ? steps - 1 - k : k;
    h = gru_cell(slice_rows(inputs, i, 1), h, p);
    states[i] = h;
  }
  return stack_rows(states);
}

AttentionParams AttentionParams::create(ParameterSet& set, const std::string& prefix, std::size_t d_query,
                                        std::size_t d_key, std::size_t hidden, Rng& rng) {
  AttentionParams p;
  p.w_query = &set.add(prefix + ".w_query", {hidden, d_query}, Init::kFanIn, rng);
  p.w_key = &set.add(prefix + ".w_key", {hidden, d_key}, Init::kFanIn, rng);
  p.bias = &set.add(prefix + ".bias", {hidden}, Init::kZeros, rng);
  p.v = &set.add(prefix + ".v", {1, hidden}, Init::kFanIn, rng);
  return p;
}

AttentionMemory prepare_attention(Var keys, Var values, const AttentionParams& p, Mask mask) {
  if (keys.rows() != values.rows()) throw ShapeError("attention: key and value counts differ");
  if (!mask.empty() && mask.size() != keys.rows()) throw ShapeError("attention: mask length differs from key count");
  Tape& t = *keys.tape;
  return {linear(keys, t.param(*p.w_key)), values, std::move(mask)};
}

AttentionResult additive_attention(Var query, const AttentionMemory& memory, const AttentionParams& p) {
  Tape& t = *query.tape;
  Var q = linear(query, t.param(*p.w_query), t.param(*p.bias));
  Var hidden = tanh(add_row(memory.projected_keys, q));
  Var scores = matmul_nt(t.param(*p.v), hidden);  // [1 x n]
  Var weights = softmax(scores, memory.mask.empty() ? nullptr : &memory.mask);
  return {matmul(weights, memory.values), weights};
}

AttentionResult additive_attention(Var query, Var keys, Var values, const AttentionParams& p, Mask mask) {
  return additive_attention(query, prepare_attention(keys, values, p, std::move(mask)), p);
}

}  // namespace dhap::num
