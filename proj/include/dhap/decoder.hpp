#pragma once

#include <map>
#include <vector>

#include "dhap/history_memory.hpp"
#include "dhap/post_encoder.hpp"

namespace dhap {

/// Softmax over the vocabulary with PAD, BOS, CLS and SEP masked out.
num::Mask generation_mask(std::size_t vocab_size);

/// o_t = tanh(W1 f + b1); p(y | m_g) = softmax(W2 o_t + b2) over the generic vocabulary.
class OutputHead {
 public:
  OutputHead() = default;
  OutputHead(num::ParameterSet& params, const std::string& prefix, std::size_t features, std::size_t hidden,
             std::size_t vocab, num::Rng& rng);
  Var distribution(Tape& tape, Var features) const;

 private:
  num::Parameter *w1_ = nullptr, *b1_ = nullptr, *w2_ = nullptr, *b2_ = nullptr;
  num::Mask mask_;
};

/// Mode probabilities. `copy_off` / `gen_off` mark a probability that is a
/// structural zero (ablation or empty copy store) rather than a learned value.
struct SwitchProbs {
  Var p_gen;
  Var p_copy;
  bool gen_off = false;
  bool copy_off = false;
};

struct CopyAttention {
  Var weights;  // gamma_t over eligible history positions, [1 x m]
};

/// Plain-value view of one decoding step's distributions.
struct MixtureDistribution {
  double p_gen = 1.0;
  double p_copy = 0.0;
  std::vector<num::Real> general;
  std::map<TokenId, num::Real> copy;  // empty when copying is unavailable
  std::vector<num::Real> mixed;
};

/// Sums position weights per token id.
std::map<TokenId, num::Real> aggregate_copy(std::span<const num::Real> weights, std::span<const TokenId> tokens);
/// mixed[y] = p_g * general[y] + p_c * copy[y].
std::vector<num::Real> mix(double p_gen, double p_copy, const std::vector<num::Real>& general,
                           const std::map<TokenId, num::Real>& copy);

/// GRU decoder over [y_{t-1}; c_t; e^G; e^D_t] with the generate/copy switch.
class PersonalizedDecoder {
 public:
  PersonalizedDecoder(num::ParameterSet& params, const ModelConfig& config, num::Parameter& word_embedding,
                      num::Rng& rng);

  /// h^R_0 = ReLU(MLP(h^P_{L_X})).
  Var init(Tape& tape, const PostEncoding& post) const;
  /// h^R_t = GRU(h^R_{t-1}, [y_{t-1}; c_t; e^G; e^D_t]).
  Var step(Tape& tape, Var h_prev, TokenId y_prev, Var c_t, Var e_general, Var e_dynamic) const;

  /// [h^R_t; c_t; e^G; e^D_t]
  static Var features(Var h, Var c_t, Var e_general, Var e_dynamic);

  /// softmax(MLP(features)) over the two modes, then the variant's overrides.
  /// Without anything to copy the switch is forced to (1, 0).
  SwitchProbs mode_switch(Tape& tape, Var features, const Variant& variant, bool can_copy) const;
  Var general_dist(Tape& tape, Var features) const { return head_.distribution(tape, features); }
  /// Additive attention of c_t over every eligible historical response token.
  CopyAttention copy_attention(Tape& tape, Var c_t, const num::AttentionMemory& prepared) const;
  num::AttentionMemory prepare_copy(const HistoryMemory& memory) const;

  std::size_t input_width() const;

 private:
  ModelConfig config_;
  num::Parameter* word_embedding_;
  num::Parameter *init_w_, *init_b_;
  num::GruParams gru_;
  num::Parameter *switch_w_, *switch_b_;
  OutputHead head_;
  num::AttentionParams copy_attention_;
};

}  // namespace dhap
