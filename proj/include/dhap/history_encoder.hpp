#pragma once

#include <utility>
#include <vector>

#include "dhap/config.hpp"
#include "dhap/corpus.hpp"
#include "dhap/numerics/layers.hpp"

namespace dhap {

using corpus::TokenId;
using num::Tape;
using num::Var;

/// [CLS] R_1 [SEP] ... R_n [SEP] with segment, position and span bookkeeping.
struct HistorySequence {
  std::vector<TokenId> tokens;
  std::vector<int> segments;
  std::vector<int> positions;
  num::Mask attention_mask;
  /// Half-open [begin, end) of each kept response, excluding its SEP.
  std::vector<std::pair<std::size_t, std::size_t>> spans;
  /// Index (into the input list) of the oldest response that was kept.
  std::size_t first_kept = 0;

  std::size_t length() const { return tokens.size(); }
  std::size_t response_count() const { return spans.size(); }
};

/// Packs responses (oldest first). When the packed length would exceed
/// max_len, whole responses are dropped oldest-first; CLS always stays.
HistorySequence pack_history(const std::vector<std::vector<TokenId>>& responses, std::size_t max_len);

struct HistoryEncoding {
  Var general;     // e^G, [1 x d_T]
  Var contextual;  // every position of the packed sequence, [L x d_T]
  std::vector<std::pair<std::size_t, std::size_t>> spans;

  /// E^R rows of response i, [len_i x d_T].
  Var response(std::size_t i) const;
};

/// Transformer encoder over the user's historical responses.
class HistoryEncoder {
 public:
  HistoryEncoder(num::ParameterSet& params, const ModelConfig& config, num::Rng& rng);

  /// token + segment + position embeddings per row.
  Var embed(Tape& tape, const HistorySequence& seq) const;

  /// LN(M + D(FFN(M))) with M = LN(X + D(MS(X))). When `head_weights` is
  /// given it receives the per-head attention matrices.
  Var layer(Tape& tape, Var x, const num::Mask& mask, std::size_t index,
            std::vector<Var>* head_weights = nullptr) const;

  HistoryEncoding encode(Tape& tape, const HistorySequence& seq) const;

  num::Parameter& token_table() const { return *token_table_; }
  num::Parameter& segment_table() const { return *segment_table_; }
  num::Parameter& position_table() const { return *position_table_; }

 private:
  struct Layer {
    num::Parameter *w_query, *w_key, *w_value, *w_out;
    num::Parameter *ln1_gain, *ln1_bias;
    num::Parameter *ffn_w1, *ffn_b1, *ffn_w2, *ffn_b2;
    num::Parameter *ln2_gain, *ln2_bias;
  };

  ModelConfig config_;
  num::Parameter* token_table_;
  num::Parameter* segment_table_;
  num::Parameter* position_table_;
  std::vector<Layer> layers_;
};

}  // namespace dhap
