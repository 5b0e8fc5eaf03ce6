#include "dhap/post_encoder.hpp"

#include <stdexcept>

namespace dhap {

using num::Init;

PostEncoder::PostEncoder(num::ParameterSet& params, const ModelConfig& config, num::Parameter& word_embedding,
                         num::Rng& rng)
    : config_(config), word_embedding_(&word_embedding) {
  const std::size_t dg = config.d_gru;
  forward_ = num::GruParams::create(params, "post.gru_forward", config.d_emb, dg, rng);
  backward_ = num::GruParams::create(params, "post.gru_backward", config.d_emb, dg, rng);
  init_w_ = &params.add("post.init_w", {dg, config.d_transformer}, Init::kFanIn, rng);
  init_b_ = &params.add("post.init_b", {dg}, Init::kZeros, rng);
  random_init_ = &params.add("post.random_init", {1, dg}, Init::kEmbedding, rng, /*trainable=*/false);
  attention_ = num::AttentionParams::create(params, "post.attention", dg, 2 * dg, config.attention_width(), rng);
}

Var PostEncoder::init_state(Tape& tape, Var general_profile) const {
  return num::relu(num::linear(general_profile, tape.param(*init_w_), tape.param(*init_b_)));
}

Var PostEncoder::random_init_state(Tape& tape) const { return tape.param(*random_init_); }

Var PostEncoder::zero_state(Tape& tape) const { return tape.constant(num::Tensor::zeros(1, config_.d_gru)); }

PostEncoding PostEncoder::encode(Tape& tape, std::span<const TokenId> post, Var h0) const {
  if (post.empty()) throw std::invalid_argument("cannot encode an empty post");
  Var x = num::embedding(tape.param(*word_embedding_), post);
  Var fwd = num::gru_sequence(x, h0, forward_, /*reverse=*/false);
  Var bwd = num::gru_sequence(x, h0, backward_, /*reverse=*/true);
  Var states = num::concat_cols({fwd, bwd});
  return {states, num::slice_rows(states, post.size() - 1, 1), post.size()};
}

num::AttentionMemory PostEncoder::prepare_attention(const PostEncoding& enc) const {
  return num::prepare_attention(enc.states, enc.states, attention_);
}

num::AttentionResult PostEncoder::attend(Var decoder_state, const num::AttentionMemory& prepared) const {
  return num::additive_attention(decoder_state, prepared, attention_);
}

}  // namespace dhap
