#pragma once

#include <vector>

#include "dhap/model.hpp"
#include "dhap/numerics/random.hpp"

namespace fixtures {

using dhap::TokenId;
using dhap::corpus::Vocabulary;

inline dhap::ModelConfig config(std::size_t vocab, const std::string& variant = "full", std::uint64_t seed = 1,
                                std::size_t width = 16) {
  dhap::ModelConfig c;
  c.vocab_size = vocab;
  c.d_emb = width;
  c.d_transformer = width;
  c.d_gru = width;
  c.heads = 2;
  c.layers = 1;
  c.variant = dhap::Variant::parse(variant);
  c.seed = seed;
  return c;
}

/// Ordinary ids, with an occasional UNK when allow_unk is set.
inline std::vector<TokenId> tokens(dhap::num::Rng& rng, std::size_t vocab, std::size_t len, bool allow_unk = false) {
  std::vector<TokenId> out;
  for (std::size_t i = 0; i < len; ++i) {
    if (allow_unk && rng.below(10) == 0) {
      out.push_back(Vocabulary::kUnk);
    } else {
      out.push_back(static_cast<TokenId>(Vocabulary::kNumSpecial + rng.below(vocab - Vocabulary::kNumSpecial)));
    }
  }
  return out;
}

inline dhap::ModelInput input(dhap::num::Rng& rng, std::size_t vocab, std::size_t n_history, bool allow_unk = false) {
  dhap::ModelInput in;
  in.post = tokens(rng, vocab, 2 + rng.below(4), allow_unk);
  for (std::size_t i = 0; i < n_history; ++i) {
    in.history_posts.push_back(tokens(rng, vocab, 2 + rng.below(3), allow_unk));
    in.history_responses.push_back(tokens(rng, vocab, 1 + rng.below(4), allow_unk));
  }
  return in;
}

inline dhap::ModelExample example(dhap::num::Rng& rng, std::size_t vocab, std::size_t n_history,
                                  std::size_t target_len = 4) {
  dhap::ModelExample ex{input(rng, vocab, n_history), tokens(rng, vocab, target_len)};
  ex.target.push_back(Vocabulary::kEos);
  return ex;
}

/// Ordinary ids present in the history responses.
inline std::vector<bool> personal_vocab(const dhap::ModelInput& in, std::size_t vocab) {
  std::vector<bool> mask(vocab, false);
  for (const auto& r : in.history_responses)
    for (TokenId t : r)
      if (!Vocabulary::is_special(t)) mask[static_cast<std::size_t>(t)] = true;
  return mask;
}

}  // namespace fixtures
