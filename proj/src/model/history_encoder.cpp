#include "dhap/history_encoder.hpp"

#include <cmath>
#include <stdexcept>

namespace dhap {

using corpus::Vocabulary;
using num::Init;

HistorySequence pack_history(const std::vector<std::vector<TokenId>>& responses, std::size_t max_len) {
  // Walk newest to oldest, keeping whole responses while they fit.
  std::size_t used = 1;
  std::size_t first = responses.size();
  while (first > 0) {
    const std::size_t need = responses[first - 1].size() + 1;
    if (used + need > max_len) break;
    used += need;
    --first;
  }

  HistorySequence seq;
  seq.first_kept = first;
  seq.tokens.push_back(Vocabulary::kCls);
  seq.segments.push_back(0);
  for (std::size_t i = first; i < responses.size(); ++i) {
    const int segment = static_cast<int>((i - first) % 2);
    const std::size_t begin = seq.tokens.size();
    for (TokenId t : responses[i]) {
      seq.tokens.push_back(t);
      seq.segments.push_back(segment);
    }
    seq.spans.emplace_back(begin, seq.tokens.size());
    seq.tokens.push_back(Vocabulary::kSep);
    seq.segments.push_back(segment);
  }
  for (std::size_t p = 0; p < seq.tokens.size(); ++p) seq.positions.push_back(static_cast<int>(p));
  seq.attention_mask.assign(seq.tokens.size(), 1);
  return seq;
}

Var HistoryEncoding::response(std::size_t i) const {
  const auto [b, e] = spans.at(i);
  return num::slice_rows(contextual, b, e - b);
}

HistoryEncoder::HistoryEncoder(num::ParameterSet& params, const ModelConfig& config, num::Rng& rng)
    : config_(config) {
  const std::size_t d = config.d_transformer;
  token_table_ = &params.add("history.token_embedding", {config.vocab_size, d}, Init::kNormal, rng);
  segment_table_ = &params.add("history.segment_embedding", {2, d}, Init::kEmbedding, rng);
  position_table_ = &params.add("history.position_embedding", {config.max_positions, d}, Init::kEmbedding, rng);
  for (std::size_t l = 0; l < config.layers; ++l) {
    const std::string p = "history.layer" + std::to_string(l);
    const std::size_t ff = config.ffn_width();
    layers_.push_back(Layer{
        &params.add(p + ".w_query", {d, d}, Init::kFanIn, rng),
        &params.add(p + ".w_key", {d, d}, Init::kFanIn, rng),
        &params.add(p + ".w_value", {d, d}, Init::kFanIn, rng),
        &params.add(p + ".w_out", {d, d}, Init::kFanIn, rng),
        &params.add(p + ".ln1_gain", {d}, Init::kOnes, rng),
        &params.add(p + ".ln1_bias", {d}, Init::kZeros, rng),
        &params.add(p + ".ffn_w1", {ff, d}, Init::kFanIn, rng),
        &params.add(p + ".ffn_b1", {ff}, Init::kZeros, rng),
        &params.add(p + ".ffn_w2", {d, ff}, Init::kFanIn, rng),
        &params.add(p + ".ffn_b2", {d}, Init::kZeros, rng),
        &params.add(p + ".ln2_gain", {d}, Init::kOnes, rng),
        &params.add(p + ".ln2_bias", {d}, Init::kZeros, rng),
    });
  }
}

Var HistoryEncoder::embed(Tape& tape, const HistorySequence& seq) const {
  for (int p : seq.positions) {
    if (p < 0 || static_cast<std::size_t>(p) >= config_.max_positions) {
      throw std::out_of_range("position id " + std::to_string(p) + " exceeds the " +
                              std::to_string(config_.max_positions) + "-entry position table");
    }
  }
  Var tok = num::embedding(tape.param(*token_table_), seq.tokens);
  Var seg = num::embedding(tape.param(*segment_table_), seq.segments);
  Var pos = num::embedding(tape.param(*position_table_), seq.positions);
  return num::add(num::add(tok, seg), pos);
}

Var HistoryEncoder::layer(Tape& tape, Var x, const num::Mask& mask, std::size_t index,
                          std::vector<Var>* head_weights) const {
  const Layer& L = layers_.at(index);
  const std::size_t d = config_.d_transformer;
  const std::size_t h = config_.heads;
  if (d % h != 0) throw std::invalid_argument("d_transformer is not divisible by the head count");
  const std::size_t dh = d / h;
  const auto inv_scale = static_cast<num::Real>(1.0 / std::sqrt(static_cast<double>(dh)));

  Var q = num::linear(x, tape.param(*L.w_query));
  Var k = num::linear(x, tape.param(*L.w_key));
  Var v = num::linear(x, tape.param(*L.w_value));
  std::vector<Var> heads;
  for (std::size_t i = 0; i < h; ++i) {
    Var qi = num::slice_cols(q, i * dh, dh);
    Var ki = num::slice_cols(k, i * dh, dh);
    Var vi = num::slice_cols(v, i * dh, dh);
    Var weights = num::softmax(num::scale(num::matmul_nt(qi, ki), inv_scale), &mask);
    if (head_weights) head_weights->push_back(weights);
    heads.push_back(num::matmul(weights, vi));
  }
  Var attended = num::linear(num::concat_cols(heads), tape.param(*L.w_out));
  const auto rate = static_cast<num::Real>(config_.dropout);
  Var m = num::layer_norm(num::add(x, num::dropout(attended, rate)), tape.param(*L.ln1_gain), tape.param(*L.ln1_bias));
  Var ffn = num::linear(num::relu(num::linear(m, tape.param(*L.ffn_w1), tape.param(*L.ffn_b1))),
                        tape.param(*L.ffn_w2), tape.param(*L.ffn_b2));
  return num::layer_norm(num::add(m, num::dropout(ffn, rate)), tape.param(*L.ln2_gain), tape.param(*L.ln2_bias));
}

HistoryEncoding HistoryEncoder::encode(Tape& tape, const HistorySequence& seq) const {
  Var x = embed(tape, seq);
  for (std::size_t l = 0; l < layers_.size(); ++l) x = layer(tape, x, seq.attention_mask, l);
  return {num::slice_rows(x, 0, 1), x, seq.spans};
}

}  // namespace dhap
