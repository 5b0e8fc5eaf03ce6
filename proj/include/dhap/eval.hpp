#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

namespace dhap::eval {

using Sentence = std::vector<std::string>;

/// Sentence-level BLEU-n (n = 1 or 2) on the x100 scale: clipped n-gram
/// precisions combined by geometric mean, times the brevity penalty. A zero
/// precision is replaced by 1e-9.
double bleu(const Sentence& candidate, const Sentence& reference, int n);
/// Corpus BLEU: clipped counts and lengths summed over all pairs first.
double corpus_bleu(const std::vector<Sentence>& candidates, const std::vector<Sentence>& references, int n);

/// LCS-based F1 on the x100 scale.
double rouge_l(const Sentence& candidate, const Sentence& reference);

/// Distinct n-grams over all candidates divided by the total n-gram count.
double dist_n(const std::vector<Sentence>& candidates, int n);

/// Document frequency over utterances: idf(w) = max(0, ln(N / (1 + df(w)))).
class IdfTable {
 public:
  static IdfTable build(const std::vector<Sentence>& documents);
  static IdfTable load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  /// Unseen tokens get the weight of a token seen in exactly one document.
  double idf(const std::string& token) const;
  std::size_t documents() const { return documents_; }
  std::size_t df(const std::string& token) const;

 private:
  std::size_t documents_ = 0;
  std::map<std::string, std::size_t> df_;
};

/// Unigram F1 between the candidate and the concatenation of the history
/// responses, with clipped multiset counts. Returned as a fraction.
double persona_f1(const Sentence& candidate, const std::vector<Sentence>& history_responses);

/// max_j sum of idf over the distinct tokens shared by R_j and Y, over |Y|.
double persona_cover(const Sentence& candidate, const std::vector<Sentence>& history_responses, const IdfTable& idf);

class EmbeddingTable {
 public:
  /// Seeded random unit-norm vectors for the given tokens.
  static EmbeddingTable random(const std::vector<std::string>& tokens, std::size_t dim, std::uint64_t seed);
  /// Whitespace-separated `token v1 ... vd` lines.
  static EmbeddingTable load(const std::filesystem::path& path);

  const std::vector<double>* find(const std::string& token) const;
  std::size_t dim() const { return dim_; }
  std::size_t size() const { return vectors_.size(); }
  void set(const std::string& token, std::vector<double> v);

 private:
  std::size_t dim_ = 0;
  std::unordered_map<std::string, std::vector<double>> vectors_;
};

struct Similarity {
  double average = 0;
  double extrema = 0;
  double greedy = 0;
};

/// Out-of-vocabulary tokens are skipped; an empty side scores 0.
Similarity embedding_similarity(const Sentence& candidate, const Sentence& reference, const EmbeddingTable& table);

struct EvalItem {
  Sentence candidate;
  Sentence reference;
  std::vector<Sentence> history_responses;
};

struct MetricReport {
  double bleu1 = 0, bleu2 = 0, rouge_l = 0;
  double dist1 = 0, dist2 = 0;
  double emb_average = 0, emb_extrema = 0, emb_greedy = 0;
  double p_f1 = 0, p_cover = 0;
  std::size_t pairs = 0;

  nlohmann::json to_json() const;
  std::string to_text() const;
};

MetricReport evaluate(const std::vector<EvalItem>& items, const IdfTable& idf, const EmbeddingTable& embeddings);

struct BucketResult {
  std::size_t lo = 0, hi = 0;  // inclusive history-size range
  std::size_t pairs = 0;
  double bleu1 = 0;
};

/// Groups items by history size into consecutive ranges of `width` pairs
/// (0..w, w+1..2w, ...) and reports corpus BLEU-1 for each non-empty range.
std::vector<BucketResult> bucket_by_history(const std::vector<EvalItem>& items, std::size_t width);

struct BootstrapResult {
  double mean_difference = 0;  // mean(a) - mean(b)
  double p_value = 0;          // share of resamples where a does not beat b
  double ci_low = 0, ci_high = 0;
};

/// Paired bootstrap over per-example scores.
BootstrapResult paired_bootstrap(const std::vector<double>& a, const std::vector<double>& b, std::size_t samples = 1000,
                                 std::uint64_t seed = 1);

}  // namespace dhap::eval
