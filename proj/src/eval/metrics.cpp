#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <stdexcept>

#include "dhap/eval.hpp"
#include "dhap/numerics/random.hpp"

namespace dhap::eval {

namespace {

constexpr double kSmooth = 1e-9;

std::map<std::vector<std::string>, std::size_t> ngram_counts(const Sentence& s, int n) {
  std::map<std::vector<std::string>, std::size_t> counts;
  const auto k = static_cast<std::size_t>(n);
  for (std::size_t i = 0; i + k <= s.size(); ++i) ++counts[Sentence(s.begin() + i, s.begin() + i + k)];
  return counts;
}

struct NgramStats {
  double matches[2] = {0, 0};
  double totals[2] = {0, 0};
  double cand_len = 0;
  double ref_len = 0;
};

void accumulate(NgramStats& st, const Sentence& cand, const Sentence& ref, int n) {
  for (int k = 1; k <= n; ++k) {
    auto c = ngram_counts(cand, k);
    auto r = ngram_counts(ref, k);
    for (const auto& [g, cnt] : c) {
      auto it = r.find(g);
      if (it != r.end()) st.matches[k - 1] += static_cast<double>(std::min(cnt, it->second));
      st.totals[k - 1] += static_cast<double>(cnt);
    }
  }
  st.cand_len += static_cast<double>(cand.size());
  st.ref_len += static_cast<double>(ref.size());
}

double bleu_from(const NgramStats& st, int n) {
  if (st.cand_len == 0) return 0.0;
  double log_sum = 0;
  for (int k = 0; k < n; ++k) {
    const double p = (st.matches[k] > 0 && st.totals[k] > 0) ? st.matches[k] / st.totals[k] : kSmooth;
    log_sum += std::log(p);
  }
  const double bp = st.cand_len >= st.ref_len ? 1.0 : std::exp(1.0 - st.ref_len / st.cand_len);
  return 100.0 * bp * std::exp(log_sum / n);
}

void check_order(int n) {
  if (n != 1 && n != 2) throw std::invalid_argument("BLEU order must be 1 or 2");
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0 || nb == 0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::vector<const std::vector<double>*> lookup(const Sentence& s, const EmbeddingTable& table) {
  std::vector<const std::vector<double>*> out;
  for (const auto& w : s) {
    if (const auto* v = table.find(w)) out.push_back(v);
  }
  return out;
}

double greedy_direction(const std::vector<const std::vector<double>*>& from,
                        const std::vector<const std::vector<double>*>& to) {
  double total = 0;
  for (const auto* x : from) {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto* y : to) best = std::max(best, cosine(*x, *y));
    total += best;
  }
  return total / static_cast<double>(from.size());
}

}  // namespace

double bleu(const Sentence& candidate, const Sentence& reference, int n) {
  check_order(n);
  NgramStats st;
  accumulate(st, candidate, reference, n);
  return bleu_from(st, n);
}

double corpus_bleu(const std::vector<Sentence>& candidates, const std::vector<Sentence>& references, int n) {
  check_order(n);
  if (candidates.size() != references.size()) throw std::invalid_argument("candidate/reference count mismatch");
  NgramStats st;
  for (std::size_t i = 0; i < candidates.size(); ++i) accumulate(st, candidates[i], references[i], n);
  return bleu_from(st, n);
}

double rouge_l(const Sentence& candidate, const Sentence& reference) {
  if (candidate.empty() || reference.empty()) return 0.0;
  const std::size_t m = candidate.size(), k = reference.size();
  std::vector<std::size_t> prev(k + 1, 0), cur(k + 1, 0);
  for (std::size_t i = 1; i <= m; ++i) {
    for (std::size_t j = 1; j <= k; ++j) {
      cur[j] = candidate[i - 1] == reference[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  const double lcs = static_cast<double>(prev[k]);
  if (lcs == 0) return 0.0;
  const double p = lcs / static_cast<double>(m);
  const double r = lcs / static_cast<double>(k);
  return 100.0 * 2 * p * r / (p + r);
}

double dist_n(const std::vector<Sentence>& candidates, int n) {
  if (n < 1) throw std::invalid_argument("dist order must be positive");
  std::set<std::vector<std::string>> distinct;
  std::size_t total = 0;
  const auto k = static_cast<std::size_t>(n);
  for (const auto& s : candidates) {
    for (std::size_t i = 0; i + k <= s.size(); ++i) {
      distinct.insert(Sentence(s.begin() + i, s.begin() + i + k));
      ++total;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(distinct.size()) / static_cast<double>(total);
}

// ---------------------------------------------------------------------------

IdfTable IdfTable::build(const std::vector<Sentence>& documents) {
  if (documents.empty()) throw std::invalid_argument("IDF needs at least one document");
  IdfTable t;
  t.documents_ = documents.size();
  for (const auto& doc : documents) {
    for (const auto& w : std::set<std::string>(doc.begin(), doc.end())) ++t.df_[w];
  }
  return t;
}

std::size_t IdfTable::df(const std::string& token) const {
  auto it = df_.find(token);
  return it == df_.end() ? 0 : it->second;
}

double IdfTable::idf(const std::string& token) const {
  if (documents_ == 0) return 0.0;
  const std::size_t d = std::max<std::size_t>(df(token), 1);
  return std::max(0.0, std::log(static_cast<double>(documents_) / static_cast<double>(1 + d)));
}

void IdfTable::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "#documents\t" << documents_ << "\n";
  out << std::setprecision(17);
  for (const auto& [w, d] : df_) out << w << "\t" << d << "\t" << idf(w) << "\n";
}

IdfTable IdfTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  IdfTable t;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string word, df;
    if (!std::getline(fields, word, '\t') || !std::getline(fields, df, '\t')) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": malformed idf line");
    }
    if (word == "#documents") t.documents_ = std::stoull(df);
    else t.df_[word] = std::stoull(df);
  }
  if (t.documents_ == 0) throw std::runtime_error(path.string() + ": missing #documents header");
  return t;
}

double persona_f1(const Sentence& candidate, const std::vector<Sentence>& history_responses) {
  if (candidate.empty()) return 0.0;
  std::map<std::string, std::size_t> cand, hist;
  std::size_t hist_len = 0;
  for (const auto& w : candidate) ++cand[w];
  for (const auto& r : history_responses) {
    for (const auto& w : r) ++hist[w];
    hist_len += r.size();
  }
  std::size_t overlap = 0;
  for (const auto& [w, c] : cand) {
    auto it = hist.find(w);
    if (it != hist.end()) overlap += std::min(c, it->second);
  }
  if (overlap == 0) return 0.0;
  const double p = static_cast<double>(overlap) / static_cast<double>(candidate.size());
  const double r = static_cast<double>(overlap) / static_cast<double>(hist_len);
  return 2 * p * r / (p + r);
}

double persona_cover(const Sentence& candidate, const std::vector<Sentence>& history_responses, const IdfTable& idf) {
  if (candidate.empty() || history_responses.empty()) return 0.0;
  const std::set<std::string> cand(candidate.begin(), candidate.end());
  double best = 0;
  for (const auto& r : history_responses) {
    double s = 0;
    for (const auto& w : std::set<std::string>(r.begin(), r.end())) {
      if (cand.count(w)) s += idf.idf(w);
    }
    best = std::max(best, s);
  }
  return best / static_cast<double>(candidate.size());
}

// ---------------------------------------------------------------------------

EmbeddingTable EmbeddingTable::random(const std::vector<std::string>& tokens, std::size_t dim, std::uint64_t seed) {
  if (dim == 0) throw std::invalid_argument("embedding dimension must be positive");
  EmbeddingTable t;
  t.dim_ = dim;
  num::Rng rng(seed);
  for (const auto& w : tokens) {
    std::vector<double> v(dim);
    double norm = 0;
    while (norm == 0) {
      norm = 0;
      for (auto& x : v) {
        x = rng.normal();
        norm += x * x;
      }
    }
    norm = std::sqrt(norm);
    for (auto& x : v) x /= norm;
    t.vectors_[w] = std::move(v);
  }
  return t;
}

EmbeddingTable EmbeddingTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read embedding file " + path.string());
  EmbeddingTable t;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream fields(line);
    std::string word;
    if (!(fields >> word)) continue;
    std::vector<double> v;
    double x;
    while (fields >> x) v.push_back(x);
    if (!fields.eof()) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": non-numeric embedding value");
    }
    if (v.empty()) continue;  // header lines such as "<count> <dim>" have a single number
    if (t.dim_ == 0) t.dim_ = v.size();
    if (v.size() != t.dim_) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": expected " +
                               std::to_string(t.dim_) + " values, found " + std::to_string(v.size()));
    }
    t.vectors_[word] = std::move(v);
  }
  if (t.vectors_.empty()) throw std::runtime_error(path.string() + ": no embeddings found");
  return t;
}

const std::vector<double>* EmbeddingTable::find(const std::string& token) const {
  auto it = vectors_.find(token);
  return it == vectors_.end() ? nullptr : &it->second;
}

void EmbeddingTable::set(const std::string& token, std::vector<double> v) {
  if (dim_ == 0) dim_ = v.size();
  if (v.size() != dim_) throw std::invalid_argument("embedding dimension mismatch");
  vectors_[token] = std::move(v);
}

Similarity embedding_similarity(const Sentence& candidate, const Sentence& reference, const EmbeddingTable& table) {
  const auto c = lookup(candidate, table);
  const auto r = lookup(reference, table);
  if (c.empty() || r.empty()) return {};
  const std::size_t d = table.dim();

  auto mean = [d](const std::vector<const std::vector<double>*>& vs) {
    std::vector<double> m(d, 0.0);
    for (const auto* v : vs)
      for (std::size_t i = 0; i < d; ++i) m[i] += (*v)[i];
    for (auto& x : m) x /= static_cast<double>(vs.size());
    return m;
  };
  auto extrema = [d](const std::vector<const std::vector<double>*>& vs) {
    std::vector<double> e(d, 0.0);
    for (const auto* v : vs)
      for (std::size_t i = 0; i < d; ++i)
        if (std::abs((*v)[i]) > std::abs(e[i])) e[i] = (*v)[i];
    return e;
  };

  Similarity s;
  s.average = cosine(mean(c), mean(r));
  s.extrema = cosine(extrema(c), extrema(r));
  s.greedy = (greedy_direction(c, r) + greedy_direction(r, c)) / 2;
  return s;
}

// ---------------------------------------------------------------------------

MetricReport evaluate(const std::vector<EvalItem>& items, const IdfTable& idf, const EmbeddingTable& embeddings) {
  MetricReport rep;
  rep.pairs = items.size();
  if (items.empty()) return rep;
  std::vector<Sentence> cands, refs;
  for (const auto& it : items) {
    cands.push_back(it.candidate);
    refs.push_back(it.reference);
  }
  rep.bleu1 = corpus_bleu(cands, refs, 1);
  rep.bleu2 = corpus_bleu(cands, refs, 2);
  rep.dist1 = dist_n(cands, 1);
  rep.dist2 = dist_n(cands, 2);
  for (const auto& it : items) {
    rep.rouge_l += rouge_l(it.candidate, it.reference);
    Similarity s = embedding_similarity(it.candidate, it.reference, embeddings);
    rep.emb_average += s.average;
    rep.emb_extrema += s.extrema;
    rep.emb_greedy += s.greedy;
    rep.p_f1 += persona_f1(it.candidate, it.history_responses);
    rep.p_cover += persona_cover(it.candidate, it.history_responses, idf);
  }
  const auto n = static_cast<double>(items.size());
  for (double* f : {&rep.rouge_l, &rep.emb_average, &rep.emb_extrema, &rep.emb_greedy, &rep.p_f1, &rep.p_cover}) {
    *f /= n;
  }
  return rep;
}

nlohmann::json MetricReport::to_json() const {
  return {{"bleu1", bleu1},           {"bleu2", bleu2},         {"rougeL", rouge_l},
          {"dist1", dist1},           {"dist2", dist2},         {"emb_average", emb_average},
          {"emb_extrema", emb_extrema}, {"emb_greedy", emb_greedy}, {"p_f1", p_f1},
          {"p_cover", p_cover}};
}

std::string MetricReport::to_text() const {
  std::ostringstream out;
  out << std::fixed << std::setprecision(3);
  const std::pair<const char*, double> rows[] = {
      {"BLEU-1", bleu1},       {"BLEU-2", bleu2},       {"ROUGE-L", rouge_l},   {"Dist-1", dist1},
      {"Dist-2", dist2},       {"Emb-Average", emb_average}, {"Emb-Extrema", emb_extrema},
      {"Emb-Greedy", emb_greedy}, {"P-F1", p_f1},       {"P-Cover", p_cover}};
  for (const auto& [name, v] : rows) out << std::left << std::setw(14) << name << std::right << std::setw(10) << v << "\n";
  out << std::left << std::setw(14) << "pairs" << std::right << std::setw(10) << pairs << "\n";
  return out.str();
}

std::vector<BucketResult> bucket_by_history(const std::vector<EvalItem>& items, std::size_t width) {
  if (width == 0) throw std::invalid_argument("bucket width must be positive");
  std::map<std::size_t, std::pair<std::vector<Sentence>, std::vector<Sentence>>> groups;
  for (const auto& it : items) {
    const std::size_t n = it.history_responses.size();
    const std::size_t b = n == 0 ? 0 : (n - 1) / width;
    groups[b].first.push_back(it.candidate);
    groups[b].second.push_back(it.reference);
  }
  std::vector<BucketResult> out;
  for (const auto& [b, g] : groups) {
    BucketResult r;
    r.lo = b * width + 1;
    r.hi = (b + 1) * width;
    if (b == 0) r.lo = 0;
    r.pairs = g.first.size();
    r.bleu1 = corpus_bleu(g.first, g.second, 1);
    out.push_back(r);
  }
  return out;
}

BootstrapResult paired_bootstrap(const std::vector<double>& a, const std::vector<double>& b, std::size_t samples,
                                 std::uint64_t seed) {
  if (a.size() != b.size() || a.empty()) throw std::invalid_argument("bootstrap needs equal non-empty score lists");
  if (samples == 0) throw std::invalid_argument("bootstrap needs at least one resample");
  const std::size_t n = a.size();
  BootstrapResult res;
  for (std::size_t i = 0; i < n; ++i) res.mean_difference += a[i] - b[i];
  res.mean_difference /= static_cast<double>(n);

  num::Rng rng(seed);
  std::vector<double> diffs;
  diffs.reserve(samples);
  std::size_t not_better = 0;
  for (std::size_t s = 0; s < samples; ++s) {
    double d = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t k = rng.below(n);
      d += a[k] - b[k];
    }
    d /= static_cast<double>(n);
    if (d <= 0) ++not_better;
    diffs.push_back(d);
  }
  std::sort(diffs.begin(), diffs.end());
  res.p_value = static_cast<double>(not_better) / static_cast<double>(samples);
  res.ci_low = diffs[static_cast<std::size_t>(0.025 * static_cast<double>(samples - 1))];
  res.ci_high = diffs[static_cast<std::size_t>(0.975 * static_cast<double>(samples - 1))];
  return res;
}

}  // namespace dhap::eval
