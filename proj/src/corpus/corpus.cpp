#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

#include "dhap/corpus.hpp"
#include "dhap/numerics/random.hpp"

namespace dhap::corpus {

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return fields;
}

std::int64_t parse_timestamp(const std::string& field, std::size_t line_no) {
  std::int64_t value = 0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || field.empty()) {
    throw CorpusError("line " + std::to_string(line_no) + ": timestamp '" + field + "' is not an integer");
  }
  return value;
}

Utterance make_utterance(const std::string& text, const std::string& author, std::int64_t ts) {
  Utterance u;
  u.tokens = tokenize(text);
  u.text = join_tokens(u.tokens);
  u.author = author;
  u.timestamp = ts;
  return u;
}

}  // namespace

std::vector<UserRecord> ingest(const std::filesystem::path& path, const IngestOptions& options) {
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open " + path.string());
  return ingest(in, options);
}

std::vector<UserRecord> ingest(std::istream& in, const IngestOptions& options) {
  std::map<std::string, std::vector<DialoguePair>> by_user;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 6) {
      throw CorpusError("line " + std::to_string(line_no) + ": expected 6 tab-separated fields, found " +
                        std::to_string(fields.size()));
    }
    const std::int64_t post_ts = parse_timestamp(fields[2], line_no);
    const std::int64_t resp_ts = parse_timestamp(fields[5], line_no);
    DialoguePair pair{make_utterance(fields[0], fields[1], post_ts), make_utterance(fields[3], fields[4], resp_ts)};
    auto in_bounds = [&](const Utterance& u) {
      return u.tokens.size() >= options.min_tokens && u.tokens.size() <= options.max_tokens;
    };
    if (!in_bounds(pair.post) || !in_bounds(pair.response)) continue;
    by_user[fields[4]].push_back(std::move(pair));
  }

  std::vector<UserRecord> records;
  for (auto& [user, pairs] : by_user) {
    if (pairs.size() <= options.min_pairs_exclusive) continue;
    std::stable_sort(pairs.begin(), pairs.end(), [](const DialoguePair& a, const DialoguePair& b) {
      return a.response.timestamp < b.response.timestamp;
    });
    records.push_back({user, std::move(pairs)});
  }
  return records;
}

void write_tsv(std::ostream& out, const std::vector<UserRecord>& records) {
  for (const auto& r : records) {
    for (const auto& p : r.history) {
      out << p.post.text << '\t' << p.post.author << '\t' << p.post.timestamp << '\t' << p.response.text << '\t'
          << r.user_id << '\t' << p.response.timestamp << '\n';
    }
  }
}

std::vector<TrainingExample> make_examples(const UserRecord& record, std::size_t history_cap) {
  std::vector<TrainingExample> out;
  const auto& pairs = record.history;
  for (std::size_t k = 1; k < pairs.size(); ++k) {
    const std::int64_t target_ts = pairs[k].response.timestamp;
    // Pairs before k are sorted by response time, so the strictly-earlier ones form a prefix.
    std::size_t end = k;
    while (end > 0 && pairs[end - 1].response.timestamp >= target_ts) --end;
    if (end == 0) continue;
    const std::size_t begin = end > history_cap ? end - history_cap : 0;
    TrainingExample ex;
    ex.user_id = record.user_id;
    ex.post = pairs[k].post;
    ex.response = pairs[k].response;
    ex.history.assign(pairs.begin() + static_cast<std::ptrdiff_t>(begin), pairs.begin() + static_cast<std::ptrdiff_t>(end));
    out.push_back(std::move(ex));
  }
  return out;
}

Split split_by_time(const std::vector<UserRecord>& records, std::size_t history_cap) {
  Split split;
  for (const auto& r : records) {
    auto examples = make_examples(r, history_cap);
    const std::size_t m = examples.size();
    const auto tail = static_cast<std::size_t>(std::llround(0.1 * static_cast<double>(m)));
    const std::size_t n_train = m - std::min(m, 2 * tail);
    const std::size_t n_valid = std::min(tail, m - n_train);
    for (std::size_t i = 0; i < m; ++i) {
      auto& bucket = i < n_train ? split.train : (i < n_train + n_valid ? split.valid : split.test);
      bucket.push_back(std::move(examples[i]));
    }
  }
  return split;
}

// Vocabulary ---------------------------------------------------------------

namespace {
const std::vector<std::string> kSpecialTokens = {"<pad>", "<unk>", "<s>", "</s>", "<cls>", "<sep>"};
}

Vocabulary::Vocabulary() {
  for (const auto& s : kSpecialTokens) append(s);
}

void Vocabulary::append(const std::string& token) {
  ids_.emplace(token, static_cast<TokenId>(tokens_.size()));
  tokens_.push_back(token);
}

Vocabulary Vocabulary::build(const std::vector<TrainingExample>& train, std::size_t cap) {
  if (train.empty()) throw CorpusError("cannot build a vocabulary from an empty training set");
  if (cap < kNumSpecial + 1) throw CorpusError("vocabulary cap must exceed the number of special tokens");
  // Count each distinct utterance once even though histories repeat earlier pairs.
  std::set<std::tuple<std::string, std::int64_t, std::string>> seen;
  std::map<std::string, std::size_t> counts;
  auto count = [&](const Utterance& u) {
    if (!seen.emplace(u.author, u.timestamp, u.text).second) return;
    for (const auto& t : u.tokens) ++counts[t];
  };
  for (const auto& ex : train) {
    count(ex.post);
    count(ex.response);
    for (const auto& p : ex.history) {
      count(p.post);
      count(p.response);
    }
  }
  Vocabulary v;
  for (const auto& s : kSpecialTokens) counts.erase(s);
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  for (const auto& [tok, n] : ranked) {
    if (v.size() >= cap) break;
    v.append(tok);
  }
  return v;
}

Vocabulary Vocabulary::from_tokens(const std::vector<std::string>& ordinary_tokens) {
  Vocabulary v;
  for (const auto& t : ordinary_tokens)
    if (!v.contains(t)) v.append(t);
  return v;
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open vocabulary " + path.string());
  return read(in);
}

Vocabulary Vocabulary::read(std::istream& in) {
  Vocabulary v;
  v.tokens_.clear();
  v.ids_.clear();
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab = line.rfind('\t');
    if (tab == std::string::npos) throw CorpusError("vocabulary line " + std::to_string(line_no) + " lacks a tab");
    const std::string token = line.substr(0, tab);
    const int id = std::stoi(line.substr(tab + 1));
    if (id != static_cast<int>(v.tokens_.size())) {
      throw CorpusError("vocabulary line " + std::to_string(line_no) + ": ids must be dense and ascending");
    }
    v.append(token);
  }
  for (std::size_t i = 0; i < kNumSpecial; ++i) {
    if (i >= v.tokens_.size() || v.tokens_[i] != kSpecialTokens[i]) {
      throw CorpusError("vocabulary file does not start with the special tokens");
    }
  }
  return v;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw CorpusError("cannot write " + path.string());
  write(out);
}

void Vocabulary::write(std::ostream& out) const {
  for (std::size_t i = 0; i < tokens_.size(); ++i) out << tokens_[i] << '\t' << i << '\n';
}

TokenId Vocabulary::id(const std::string& token) const {
  auto it = ids_.find(token);
  return it == ids_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw std::out_of_range("token id " + std::to_string(id) + " outside vocabulary");
  }
  return tokens_[static_cast<std::size_t>(id)];
}

std::vector<TokenId> Vocabulary::encode(const std::vector<std::string>& tokens) const {
  std::vector<TokenId> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(id(t));
  return ids;
}

std::vector<std::string> Vocabulary::decode(const std::vector<TokenId>& ids, bool keep_special) const {
  std::vector<std::string> out;
  for (TokenId id : ids) {
    if (!keep_special && is_special(id) && id != kUnk) continue;
    out.push_back(token(id));
  }
  return out;
}

std::set<TokenId> personalized_vocab(const std::vector<DialoguePair>& history, const Vocabulary& vocab) {
  std::set<TokenId> out;
  for (const auto& p : history)
    for (const auto& t : p.response.tokens) {
      const TokenId id = vocab.id(t);
      if (!Vocabulary::is_special(id)) out.insert(id);
    }
  return out;
}

// Synthetic corpus ---------------------------------------------------------

std::vector<std::string> synth_persona_tokens(std::size_t user, std::size_t count) {
  std::vector<std::string> out;
  for (std::size_t j = 0; j < count; ++j) out.push_back("u" + std::to_string(user) + "p" + std::to_string(j));
  return out;
}

std::vector<UserRecord> synth_corpus(const SynthOptions& o) {
  constexpr std::size_t kWordsPerTopic = 10;
  constexpr std::size_t kDetails = 3;
  const std::size_t shared = std::max<std::size_t>(o.shared_vocab_size, 1);
  const std::size_t n_topics = std::clamp<std::size_t>(shared / kWordsPerTopic, 2, 8);
  const std::size_t topic_words = n_topics * kWordsPerTopic;
  auto word = [&](std::size_t i) {
    std::string s = std::to_string(i % shared);
    return "w" + std::string(s.size() < 3 ? 3 - s.size() : 0, '0') + s;
  };

  num::Rng rng(num::mix_seed(o.seed, 0x5e57));
  std::vector<UserRecord> records;
  for (std::size_t u = 0; u < o.n_users; ++u) {
    UserRecord rec;
    rec.user_id = "user" + std::to_string(u);
    const auto persona = synth_persona_tokens(u, o.persona_tokens_per_user);
    for (std::size_t i = 0; i < o.pairs_per_user; ++i) {
      const std::size_t topic = static_cast<std::size_t>(rng.below(n_topics));
      const std::size_t detail = static_cast<std::size_t>(rng.below(kDetails));
      const std::size_t base = topic * kWordsPerTopic;
      std::vector<std::string> post{word(base), word(base + 1), word(base + 4 + detail)};
      if (shared > topic_words) post.push_back(word(topic_words + rng.below(shared - topic_words)));

      std::vector<std::string> reply{word(base + 2)};
      if (!persona.empty()) reply.push_back(persona[0]);
      reply.push_back(word(base + 7 + detail));
      for (std::size_t j = 1; j < persona.size(); ++j) reply.push_back(persona[j]);
      reply.push_back(word(base + 3));

      const std::int64_t ts = 1'600'000'000 + static_cast<std::int64_t>(i) * 3600 + static_cast<std::int64_t>(u);
      DialoguePair pair;
      pair.post = {join_tokens(post), post, ts, "poster" + std::to_string(rng.below(50))};
      pair.response = {join_tokens(reply), reply, ts + 60, rec.user_id};
      rec.history.push_back(std::move(pair));
    }
    records.push_back(std::move(rec));
  }
  return records;
}

// JSON lines -------------------------------------------------------------

nlohmann::json to_json(const TrainingExample& ex) {
  nlohmann::json history = nlohmann::json::array();
  for (const auto& p : ex.history) history.push_back({{"post", p.post.text}, {"response", p.response.text}});
  return {{"user", ex.user_id}, {"post", ex.post.text}, {"response", ex.response.text}, {"history", history}};
}

TrainingExample example_from_json(const nlohmann::json& j) {
  auto utt = [](const std::string& text, const std::string& author) {
    Utterance u;
    u.tokens = tokenize(text);
    u.text = join_tokens(u.tokens);
    u.author = author;
    return u;
  };
  TrainingExample ex;
  ex.user_id = j.at("user").get<std::string>();
  ex.post = utt(j.at("post").get<std::string>(), "");
  ex.response = utt(j.at("response").get<std::string>(), ex.user_id);
  for (const auto& h : j.at("history")) {
    ex.history.push_back({utt(h.at("post").get<std::string>(), ""), utt(h.at("response").get<std::string>(), ex.user_id)});
  }
  return ex;
}

void write_jsonl(const std::filesystem::path& path, const std::vector<TrainingExample>& examples) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw CorpusError("cannot write " + path.string());
  for (const auto& ex : examples) out << to_json(ex).dump() << '\n';
}

std::vector<TrainingExample> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open " + path.string());
  std::vector<TrainingExample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(example_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw CorpusError(path.string() + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace dhap::corpus
