#include "dhap/history_memory.hpp"

#include <stdexcept>

namespace dhap {

HistoryMemoryReader::HistoryMemoryReader(num::ParameterSet& params, const ModelConfig& config, num::Rng& rng)
    : config_(config),
      attention_(num::AttentionParams::create(params, "memory.attention", 2 * config.d_gru, 2 * config.d_gru,
                                              config.attention_width(), rng)) {}

HistoryMemory HistoryMemoryReader::build(Tape& tape, const std::vector<std::vector<TokenId>>& posts,
                                         const HistoryEncoding& encoding, const HistorySequence& sequence,
                                         const PostEncoder& post_encoder) const {
  if (posts.size() != encoding.spans.size()) {
    throw std::invalid_argument("history memory: " + std::to_string(posts.size()) + " posts but " +
                                std::to_string(encoding.spans.size()) + " response slices");
  }
  HistoryMemory memory;
  memory.size = posts.size();
  if (posts.empty()) return memory;

  std::vector<Var> keys;
  std::vector<Var> values;
  for (std::size_t i = 0; i < posts.size(); ++i) {
    PostEncoding enc = post_encoder.encode(tape, posts[i], post_encoder.zero_state(tape));
    Var rows = encoding.response(i);
    if (config_.memory_pooling == Pooling::kMean) {
      keys.push_back(num::mean_rows(enc.states));
      values.push_back(num::mean_rows(rows));
    } else {
      keys.push_back(num::sum_rows(enc.states));
      values.push_back(num::sum_rows(rows));
    }
  }
  memory.keys = num::stack_rows(keys);
  memory.values = num::stack_rows(values);

  std::vector<int> positions;
  for (std::size_t i = 0; i < encoding.spans.size(); ++i) {
    const auto [b, e] = encoding.spans[i];
    for (std::size_t p = b; p < e; ++p) {
      const TokenId tok = sequence.tokens[p];
      if (corpus::Vocabulary::is_special(tok)) continue;
      positions.push_back(static_cast<int>(p));
      memory.copy_tokens.push_back(tok);
      memory.copy_owner.push_back(i);
    }
  }
  if (!positions.empty()) memory.copy_states = num::embedding(encoding.contextual, positions);
  return memory;
}

num::AttentionMemory HistoryMemoryReader::prepare(const HistoryMemory& memory) const {
  if (memory.empty()) throw std::invalid_argument("cannot prepare attention over an empty memory");
  return num::prepare_attention(memory.keys, memory.values, attention_);
}

DynamicProfile HistoryMemoryReader::dynamic_profile(Tape& tape, Var c_t, const HistoryMemory& memory,
                                                    const num::AttentionMemory* prepared, std::size_t step) const {
  if (memory.empty()) return {tape.constant(num::Tensor::zeros(1, config_.d_transformer)), {}, step};
  num::AttentionResult r = prepared ? num::additive_attention(c_t, *prepared, attention_)
                                    : num::additive_attention(c_t, memory.keys, memory.values, attention_);
  return {r.context, r.weights, step};
}

}  // namespace dhap
