#pragma once

#include <span>

#include "dhap/config.hpp"
#include "dhap/corpus.hpp"
#include "dhap/numerics/layers.hpp"

namespace dhap {

using corpus::TokenId;
using num::Tape;
using num::Var;

struct PostEncoding {
  Var states;       // [L_X x 2 d_G], forward || backward
  Var final_state;  // row L_X - 1
  std::size_t length = 0;
};

/// Bidirectional GRU over word embeddings, optionally started from a
/// personalized state, plus the decoder-side attention over its states.
class PostEncoder {
 public:
  PostEncoder(num::ParameterSet& params, const ModelConfig& config, num::Parameter& word_embedding, num::Rng& rng);

  /// ReLU(MLP(e^G)), shared by both directions.
  Var init_state(Tape& tape, Var general_profile) const;
  /// Fixed random state in [-0.1, 0.1] used when the personalized start is ablated.
  Var random_init_state(Tape& tape) const;
  Var zero_state(Tape& tape) const;

  /// Throws on an empty post.
  PostEncoding encode(Tape& tape, std::span<const TokenId> post, Var h0) const;

  num::AttentionMemory prepare_attention(const PostEncoding& enc) const;
  /// c_t = sum_i alpha_i h^P_i, queried by the decoder state.
  num::AttentionResult attend(Var decoder_state, const num::AttentionMemory& prepared) const;

  const num::GruParams& forward_gru() const { return forward_; }
  const num::GruParams& backward_gru() const { return backward_; }
  num::Parameter& word_embedding() const { return *word_embedding_; }
  std::size_t state_width() const { return 2 * config_.d_gru; }

 private:
  ModelConfig config_;
  num::Parameter* word_embedding_;
  num::GruParams forward_;
  num::GruParams backward_;
  num::Parameter* init_w_;
  num::Parameter* init_b_;
  num::Parameter* random_init_;
  num::AttentionParams attention_;
};

}  // namespace dhap
