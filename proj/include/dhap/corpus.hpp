#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

namespace dhap::corpus {

using TokenId = int;

/// Lowercases, NFC-normalizes and splits on whitespace; every punctuation or
/// symbol code point becomes a token of its own.
std::vector<std::string> tokenize(std::string_view text);
std::string join_tokens(const std::vector<std::string>& tokens);

struct Utterance {
  std::string text;
  std::vector<std::string> tokens;
  std::int64_t timestamp = 0;
  std::string author;
};

struct DialoguePair {
  Utterance post;
  Utterance response;
};

/// One user's pairs, ascending by response timestamp. All responses are by user_id.
struct UserRecord {
  std::string user_id;
  std::vector<DialoguePair> history;
};

struct TrainingExample {
  std::string user_id;
  Utterance post;
  Utterance response;
  /// Most recent pairs strictly before the target, oldest first.
  std::vector<DialoguePair> history;
};

struct Split {
  std::vector<TrainingExample> train;
  std::vector<TrainingExample> valid;
  std::vector<TrainingExample> test;
};

class CorpusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct IngestOptions {
  std::size_t min_tokens = 2;
  std::size_t max_tokens = 100;
  /// Users need strictly more pairs than this.
  std::size_t min_pairs_exclusive = 10;
};

/// Reads the six-column TSV
///   post_text, post_user, post_ts, response_text, response_user, response_ts
/// groups pairs by responding user and sorts them by response time. Pairs with
/// an utterance outside the token-length bounds are dropped, then users with
/// too few pairs. Errors name the offending line.
std::vector<UserRecord> ingest(const std::filesystem::path& path, const IngestOptions& options = {});
std::vector<UserRecord> ingest(std::istream& in, const IngestOptions& options = {});
void write_tsv(std::ostream& out, const std::vector<UserRecord>& records);

/// One example per pair after the first; examples whose strictly-earlier
/// history would be empty are skipped.
std::vector<TrainingExample> make_examples(const UserRecord& record, std::size_t history_cap);

/// Per user, in time order: round(0.1m) targets each for valid and test at the
/// tail, the rest for train.
Split split_by_time(const std::vector<UserRecord>& records, std::size_t history_cap);

class Vocabulary {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kUnk = 1;
  static constexpr TokenId kBos = 2;
  static constexpr TokenId kEos = 3;
  static constexpr TokenId kCls = 4;
  static constexpr TokenId kSep = 5;
  static constexpr std::size_t kNumSpecial = 6;

  Vocabulary();

  /// Keeps the most frequent tokens of the training utterances up to `cap`
  /// ids in total (specials included); ties break lexicographically.
  static Vocabulary build(const std::vector<TrainingExample>& train, std::size_t cap);
  static Vocabulary from_tokens(const std::vector<std::string>& ordinary_tokens);
  static Vocabulary load(const std::filesystem::path& path);
  static Vocabulary read(std::istream& in);

  void save(const std::filesystem::path& path) const;
  void write(std::ostream& out) const;

  std::size_t size() const { return tokens_.size(); }
  TokenId id(const std::string& token) const;
  const std::string& token(TokenId id) const;
  bool contains(const std::string& token) const { return ids_.count(token) != 0; }
  static bool is_special(TokenId id) { return id >= 0 && static_cast<std::size_t>(id) < kNumSpecial; }

  std::vector<TokenId> encode(const std::vector<std::string>& tokens) const;
  /// Specials are dropped unless keep_special is set.
  std::vector<std::string> decode(const std::vector<TokenId>& ids, bool keep_special = false) const;

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  void append(const std::string& token);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> ids_;
};

/// Token ids, excluding specials and UNK, occurring in the history responses.
std::set<TokenId> personalized_vocab(const std::vector<DialoguePair>& history, const Vocabulary& vocab);

struct SynthOptions {
  std::size_t n_users = 10;
  std::size_t pairs_per_user = 12;
  std::size_t persona_tokens_per_user = 2;
  std::size_t shared_vocab_size = 60;
  std::uint64_t seed = 7;
};

/// Deterministic persona corpus. Posts come from a few templated topics (so
/// similar posts recur within a user's history); replies depend on the topic
/// and a detail word of the post; every reply of a user carries that user's
/// persona tokens, which no other user ever produces.
std::vector<UserRecord> synth_corpus(const SynthOptions& options);
/// The persona tokens owned by user index `u` in synth_corpus.
std::vector<std::string> synth_persona_tokens(std::size_t user, std::size_t count);

nlohmann::json to_json(const TrainingExample& ex);
TrainingExample example_from_json(const nlohmann::json& j);
void write_jsonl(const std::filesystem::path& path, const std::vector<TrainingExample>& examples);
std::vector<TrainingExample> read_jsonl(const std::filesystem::path& path);

}  // namespace dhap::corpus
