#include "dhap/decoder.hpp"

#include <stdexcept>

namespace dhap {

using corpus::Vocabulary;
using num::Init;
using num::Real;

num::Mask generation_mask(std::size_t vocab_size) {
  num::Mask mask(vocab_size, 1);
  for (TokenId id : {Vocabulary::kPad, Vocabulary::kBos, Vocabulary::kCls, Vocabulary::kSep}) {
    if (static_cast<std::size_t>(id) < vocab_size) mask[static_cast<std::size_t>(id)] = 0;
  }
  return mask;
}

OutputHead::OutputHead(num::ParameterSet& params, const std::string& prefix, std::size_t features,
                       std::size_t hidden, std::size_t vocab, num::Rng& rng)
    : w1_(&params.add(prefix + ".w1", {hidden, features}, Init::kFanIn, rng)),
      b1_(&params.add(prefix + ".b1", {hidden}, Init::kZeros, rng)),
      w2_(&params.add(prefix + ".w2", {vocab, hidden}, Init::kFanIn, rng)),
      b2_(&params.add(prefix + ".b2", {vocab}, Init::kZeros, rng)),
      mask_(generation_mask(vocab)) {}

Var OutputHead::distribution(Tape& tape, Var features) const {
  Var o = num::tanh(num::linear(features, tape.param(*w1_), tape.param(*b1_)));
  return num::softmax(num::linear(o, tape.param(*w2_), tape.param(*b2_)), &mask_);
}

std::map<TokenId, Real> aggregate_copy(std::span<const Real> weights, std::span<const TokenId> tokens) {
  if (weights.size() != tokens.size()) throw std::invalid_argument("copy weights and tokens differ in length");
  std::map<TokenId, Real> out;
  for (std::size_t i = 0; i < weights.size(); ++i) out[tokens[i]] += weights[i];
  return out;
}

std::vector<Real> mix(double p_gen, double p_copy, const std::vector<Real>& general,
                      const std::map<TokenId, Real>& copy) {
  std::vector<Real> mixed(general.size());
  const auto pg = static_cast<Real>(p_gen);
  const auto pc = static_cast<Real>(p_copy);
  for (std::size_t y = 0; y < general.size(); ++y) mixed[y] = pg * general[y];
  for (const auto& [y, w] : copy) {
    if (y < 0 || static_cast<std::size_t>(y) >= mixed.size()) throw std::out_of_range("copy token outside vocabulary");
    mixed[static_cast<std::size_t>(y)] += pc * w;
  }
  return mixed;
}

PersonalizedDecoder::PersonalizedDecoder(num::ParameterSet& params, const ModelConfig& config,
                                         num::Parameter& word_embedding, num::Rng& rng)
    : config_(config), word_embedding_(&word_embedding) {
  const std::size_t dg = config.d_gru;
  const std::size_t feat = dg + 2 * dg + 2 * config.d_transformer;
  init_w_ = &params.add("decoder.init_w", {dg, 2 * dg}, Init::kFanIn, rng);
  init_b_ = &params.add("decoder.init_b", {dg}, Init::kZeros, rng);
  gru_ = num::GruParams::create(params, "decoder.gru", input_width(), dg, rng);
  switch_w_ = &params.add("decoder.switch_w", {2, feat}, Init::kFanIn, rng);
  switch_b_ = &params.add("decoder.switch_b", {2}, Init::kZeros, rng);
  head_ = OutputHead(params, "decoder.general", feat, feat, config.vocab_size, rng);
  copy_attention_ =
      num::AttentionParams::create(params, "decoder.copy_attention", 2 * dg, config.d_transformer,
                                   config.attention_width(), rng);
}

std::size_t PersonalizedDecoder::input_width() const {
  return config_.d_emb + 2 * config_.d_gru + 2 * config_.d_transformer;
}

Var PersonalizedDecoder::init(Tape& tape, const PostEncoding& post) const {
  return num::relu(num::linear(post.final_state, tape.param(*init_w_), tape.param(*init_b_)));
}

Var PersonalizedDecoder::step(Tape& tape, Var h_prev, TokenId y_prev, Var c_t, Var e_general, Var e_dynamic) const {
  const TokenId ids[1] = {y_prev};
  Var y = num::embedding(tape.param(*word_embedding_), ids);
  return num::gru_cell(num::concat_cols({y, c_t, e_general, e_dynamic}), h_prev, gru_);
}

Var PersonalizedDecoder::features(Var h, Var c_t, Var e_general, Var e_dynamic) {
  return num::concat_cols({h, c_t, e_general, e_dynamic});
}

SwitchProbs PersonalizedDecoder::mode_switch(Tape& tape, Var features, const Variant& variant, bool can_copy) const {
  auto constant = [&](Real v) { return tape.constant(num::Tensor({1, 1}, std::vector<Real>{v})); };
  if (!can_copy) return {constant(1), constant(0), false, true};
  switch (variant.kind) {
    case VariantKind::kFixedSwitch: {
      const auto pg = static_cast<Real>(variant.fixed_p_gen);
      return {constant(pg), constant(Real(1) - pg), pg == Real(0), pg == Real(1)};
    }
    case VariantKind::kNoGenerate:
      return {constant(0), constant(1), true, false};
    case VariantKind::kNoCopy:
      return {constant(1), constant(0), false, true};
    default:
      break;
  }
  // Two-way softmax written as a sigmoid of the logit gap; p_c = 1 - p_g.
  Var logits = num::linear(features, tape.param(*switch_w_), tape.param(*switch_b_));
  Var p_gen = num::sigmoid(num::sub(num::element(logits, 0, 0), num::element(logits, 0, 1)));
  return {p_gen, num::one_minus(p_gen), false, false};
}

num::AttentionMemory PersonalizedDecoder::prepare_copy(const HistoryMemory& memory) const {
  if (!memory.can_copy()) throw std::invalid_argument("copy store is empty");
  return num::prepare_attention(memory.copy_states, memory.copy_states, copy_attention_);
}

CopyAttention PersonalizedDecoder::copy_attention(Tape&, Var c_t, const num::AttentionMemory& prepared) const {
  return {num::additive_attention(c_t, prepared, copy_attention_).weights};
}

}  // namespace dhap
