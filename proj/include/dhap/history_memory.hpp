#pragma once

#include <vector>

#include "dhap/history_encoder.hpp"
#include "dhap/post_encoder.hpp"

namespace dhap {

/// Key-value memory over the user's history: keys pool the BiGRU states of
/// each historical post, values pool the contextual vectors of the matching
/// response. Also keeps the token-level store the copy mode reads.
struct HistoryMemory {
  std::size_t size = 0;
  Var keys;    // [n x 2 d_G]
  Var values;  // [n x d_T]

  /// Response positions eligible for copying (specials and UNK excluded).
  std::vector<TokenId> copy_tokens;
  std::vector<std::size_t> copy_owner;  // response index of each position
  Var copy_states;                      // [m x d_T], invalid when m == 0

  bool empty() const { return size == 0; }
  bool can_copy() const { return !copy_tokens.empty(); }
};

struct DynamicProfile {
  Var vector;   // e^D_t, [1 x d_T]; zeros when the memory is empty
  Var weights;  // beta_t, [1 x n]; invalid when the memory is empty
  std::size_t step = 0;
};

class HistoryMemoryReader {
 public:
  HistoryMemoryReader(num::ParameterSet& params, const ModelConfig& config, num::Rng& rng);

  /// `posts[i]` must pair with response i of `encoding` (same order, same count).
  /// Historical posts run through the post encoder's BiGRU from a zero state.
  HistoryMemory build(Tape& tape, const std::vector<std::vector<TokenId>>& posts, const HistoryEncoding& encoding,
                      const HistorySequence& sequence, const PostEncoder& post_encoder) const;

  num::AttentionMemory prepare(const HistoryMemory& memory) const;

  /// e^D_t = sum_i beta_i v_i with beta from c_t against the keys. `prepared`
  /// may be null when the memory is empty.
  DynamicProfile dynamic_profile(Tape& tape, Var c_t, const HistoryMemory& memory,
                                 const num::AttentionMemory* prepared, std::size_t step) const;

 private:
  ModelConfig config_;
  num::AttentionParams attention_;
};

}  // namespace dhap
