#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <unordered_map>
#include <vector>

#include "dhap/decoder.hpp"
#include "dhap/history_encoder.hpp"
#include "dhap/history_memory.hpp"
#include "dhap/post_encoder.hpp"

namespace dhap {

/// Token ids for one query: the post plus the user's history (oldest first).
struct ModelInput {
  std::vector<TokenId> post;
  std::vector<std::vector<TokenId>> history_posts;
  std::vector<std::vector<TokenId>> history_responses;
};

struct ModelExample {
  ModelInput input;
  std::vector<TokenId> target;  // ends with EOS
};

ModelInput encode_input(const std::vector<std::string>& post, const std::vector<corpus::DialoguePair>& history,
                        const corpus::Vocabulary& vocab);
ModelExample encode_example(const corpus::TrainingExample& ex, const corpus::Vocabulary& vocab);

/// Everything one decoding step exposes, as plain values.
struct StepInfo {
  std::size_t step = 0;
  MixtureDistribution dist;
  std::vector<num::Real> post_weights;    // alpha_t over post positions
  std::vector<num::Real> memory_weights;  // beta_t over kept history pairs (empty without history)
  std::size_t memory_offset = 0;          // input index of the first kept history pair
  std::vector<num::Real> dynamic_fed;     // e^D_t as fed to the decoder
  std::vector<num::Real> general_fed;     // e^G as fed to the decoder
};

/// Mutable per-query decoding state over a read-only model.
class DecodingSession {
 public:
  virtual ~DecodingSession() = default;
  virtual std::unique_ptr<DecodingSession> clone() const = 0;
  /// Feeds the previous token (BOS first) and returns the next-token distribution.
  virtual StepInfo advance(TokenId previous) = 0;
  virtual std::size_t steps() const = 0;
};

/// Caches the history encoder output per history content. A changed history
/// hashes differently, so it is always re-encoded.
class ProfileCache {
 public:
  struct Entry {
    HistorySequence sequence;
    num::Tensor general;
    num::Tensor contextual;
  };

  static std::uint64_t key(const ModelInput& input);
  const Entry* find(std::uint64_t key) const;
  void put(std::uint64_t key, Entry entry);
  std::size_t encodings() const { return encodings_; }
  std::size_t hits() const { return hits_; }
  void clear() { entries_.clear(); }

 private:
  std::unordered_map<std::uint64_t, Entry> entries_;
  std::size_t encodings_ = 0;
  mutable std::size_t hits_ = 0;
};

class ResponseModel {
 public:
  virtual ~ResponseModel() = default;
  virtual const ModelConfig& config() const = 0;
  virtual num::ParameterSet& params() = 0;
  virtual const num::ParameterSet& params() const = 0;

  /// -sum_t log p(y_t | y_<t, X, H), teacher forced over the target (incl. EOS).
  virtual Var negative_log_likelihood(Tape& tape, const ModelExample& example) const = 0;
  virtual std::unique_ptr<DecodingSession> start(const ModelInput& input, ProfileCache* cache = nullptr) const = 0;
};

/// The personalized generator: history encoder, personalized post encoder,
/// history memory and the generate/copy decoder.
class DhapModel final : public ResponseModel {
 public:
  explicit DhapModel(const ModelConfig& config);

  const ModelConfig& config() const override { return config_; }
  num::ParameterSet& params() override { return params_; }
  const num::ParameterSet& params() const override { return params_; }

  Var negative_log_likelihood(Tape& tape, const ModelExample& example) const override;
  std::unique_ptr<DecodingSession> start(const ModelInput& input, ProfileCache* cache = nullptr) const override;

  const HistoryEncoder& history_encoder() const { return history_; }
  const PostEncoder& post_encoder() const { return post_; }
  const HistoryMemoryReader& memory_reader() const { return memory_; }
  const PersonalizedDecoder& decoder() const { return decoder_; }

  /// Encoder outputs for one input, as nodes on some tape.
  struct Encoded {
    HistorySequence sequence;
    Var general_fed;  // e^G or zeros
    PostEncoding post;
    num::AttentionMemory post_attention;
    HistoryMemory memory;
    std::optional<num::AttentionMemory> memory_attention;
    std::optional<num::AttentionMemory> copy_attention;
    Var zero_dynamic;
  };
  struct StepVars {
    Var state;
    Var context;  // c_t
    Var post_weights;
    DynamicProfile profile;
    Var dynamic_fed;
    SwitchProbs modes;
    Var general;
    Var copy_weights;  // invalid when nothing can be copied
  };

  Encoded encode(Tape& tape, const ModelInput& input, ProfileCache* cache = nullptr) const;
  Var initial_state(Tape& tape, const Encoded& enc) const;
  /// Attends with h_{t-1}, updates the state, then evaluates the switch and both distributions.
  StepVars step(Tape& tape, const Encoded& enc, Var h_prev, TokenId previous, std::size_t t) const;
  /// p(y) under the mixture as a [1 x 1] node.
  Var token_probability(const Encoded& enc, const StepVars& s, TokenId y) const;

 private:
  ModelConfig config_;
  num::ParameterSet params_;
  num::Rng init_rng_;
  num::Parameter* word_embedding_;
  HistoryEncoder history_;
  PostEncoder post_;
  HistoryMemoryReader memory_;
  PersonalizedDecoder decoder_;
};

/// GRU encoder-decoder with attention; no history, no profiles, no copying.
class Seq2SeqModel final : public ResponseModel {
 public:
  explicit Seq2SeqModel(const ModelConfig& config);

  const ModelConfig& config() const override { return config_; }
  num::ParameterSet& params() override { return params_; }
  const num::ParameterSet& params() const override { return params_; }

  Var negative_log_likelihood(Tape& tape, const ModelExample& example) const override;
  std::unique_ptr<DecodingSession> start(const ModelInput& input, ProfileCache* cache = nullptr) const override;

  struct StepVars {
    Var state;
    Var context;
    Var post_weights;
    Var general;
  };
  Var initial_state(Tape& tape, const PostEncoding& post) const;
  StepVars step(Tape& tape, const num::AttentionMemory& post_attention, Var h_prev, TokenId previous) const;

 private:
  ModelConfig config_;
  num::ParameterSet params_;
  num::Rng init_rng_;
  num::Parameter* word_embedding_;
  num::GruParams forward_, backward_;
  num::AttentionParams attention_;
  num::Parameter *init_w_, *init_b_;
  num::GruParams gru_;
  OutputHead head_;
};

/// DhapModel for every variant except seq2seqwa.
std::unique_ptr<ResponseModel> make_model(const ModelConfig& config);

}  // namespace dhap
