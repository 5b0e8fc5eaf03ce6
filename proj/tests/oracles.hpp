#pragma once

// Slow, direct reference computations used to cross-check the library.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace oracle {

using Sentence = std::vector<std::string>;

inline std::vector<Sentence> ngrams(const Sentence& s, std::size_t n) {
  std::vector<Sentence> out;
  if (s.size() < n) return out;
  for (std::size_t i = 0; i + n <= s.size(); ++i) out.emplace_back(s.begin() + i, s.begin() + i + n);
  return out;
}

inline std::size_t count_in(const std::vector<Sentence>& list, const Sentence& g) {
  std::size_t c = 0;
  for (const auto& x : list) c += (x == g);
  return c;
}

struct BleuCounts {
  double match[2] = {0, 0};
  double total[2] = {0, 0};
  double c = 0, r = 0;
};

inline void bleu_counts(BleuCounts& b, const Sentence& cand, const Sentence& ref, int n) {
  for (int k = 1; k <= n; ++k) {
    auto cg = ngrams(cand, k);
    auto rg = ngrams(ref, k);
    std::vector<Sentence> seen;
    for (const auto& g : cg) {
      if (count_in(seen, g)) continue;
      seen.push_back(g);
      b.match[k - 1] += static_cast<double>(std::min(count_in(cg, g), count_in(rg, g)));
    }
    b.total[k - 1] += static_cast<double>(cg.size());
  }
  b.c += static_cast<double>(cand.size());
  b.r += static_cast<double>(ref.size());
}

inline double bleu_score(const BleuCounts& b, int n) {
  if (b.c == 0) return 0;
  double prod = 1;
  for (int k = 0; k < n; ++k) {
    double p = b.total[k] > 0 && b.match[k] > 0 ? b.match[k] / b.total[k] : 1e-9;
    prod *= p;
  }
  double geo = std::pow(prod, 1.0 / n);
  double bp = b.c >= b.r ? 1.0 : std::exp(1.0 - b.r / b.c);
  return 100.0 * bp * geo;
}

inline double bleu(const Sentence& cand, const Sentence& ref, int n) {
  BleuCounts b;
  bleu_counts(b, cand, ref, n);
  return bleu_score(b, n);
}

inline double corpus_bleu(const std::vector<Sentence>& cands, const std::vector<Sentence>& refs, int n) {
  BleuCounts b;
  for (std::size_t i = 0; i < cands.size(); ++i) bleu_counts(b, cands[i], refs[i], n);
  return bleu_score(b, n);
}

inline std::size_t lcs(const Sentence& a, const Sentence& b) {
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> memo;
  std::function<std::size_t(std::size_t, std::size_t)> go = [&](std::size_t i, std::size_t j) -> std::size_t {
    if (i == a.size() || j == b.size()) return 0;
    auto key = std::make_pair(i, j);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    std::size_t best = a[i] == b[j] ? 1 + go(i + 1, j + 1) : std::max(go(i + 1, j), go(i, j + 1));
    memo[key] = best;
    return best;
  };
  return go(0, 0);
}

inline double rouge_l(const Sentence& cand, const Sentence& ref) {
  if (cand.empty() || ref.empty()) return 0;
  double l = static_cast<double>(lcs(cand, ref));
  if (l == 0) return 0;
  double p = l / cand.size(), r = l / ref.size();
  return 100.0 * 2 * p * r / (p + r);
}

inline double dist(const std::vector<Sentence>& cands, int n) {
  std::vector<std::string> all;
  for (const auto& s : cands) {
    for (const auto& g : ngrams(s, static_cast<std::size_t>(n))) {
      std::string key;
      for (const auto& w : g) key += w + '\x1f';
      all.push_back(key);
    }
  }
  if (all.empty()) return 0;
  const double total = static_cast<double>(all.size());
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  return static_cast<double>(all.size()) / total;
}

inline double persona_f1(const Sentence& cand, const std::vector<Sentence>& history) {
  if (cand.empty()) return 0;
  std::vector<std::string> pool;
  for (const auto& r : history) pool.insert(pool.end(), r.begin(), r.end());
  const double hist_len = static_cast<double>(pool.size());
  double overlap = 0;
  for (const auto& w : cand) {
    auto it = std::find(pool.begin(), pool.end(), w);
    if (it != pool.end()) {
      pool.erase(it);
      overlap += 1;
    }
  }
  if (overlap == 0) return 0;
  double p = overlap / cand.size(), r = overlap / hist_len;
  return 2 * p * r / (p + r);
}

inline double idf(const std::vector<Sentence>& docs, const std::string& w) {
  double df = 0;
  for (const auto& d : docs) df += std::find(d.begin(), d.end(), w) != d.end() ? 1 : 0;
  if (df == 0) df = 1;
  return std::max(0.0, std::log(static_cast<double>(docs.size()) / (1 + df)));
}

inline double persona_cover(const Sentence& cand, const std::vector<Sentence>& history,
                            const std::vector<Sentence>& idf_docs) {
  if (cand.empty() || history.empty()) return 0;
  Sentence distinct = cand;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  double best = 0;
  for (const auto& r : history) {
    double s = 0;
    for (const auto& w : distinct) {
      if (std::find(r.begin(), r.end(), w) != r.end()) s += idf(idf_docs, w);
    }
    best = std::max(best, s);
  }
  return best / cand.size();
}

using Table = std::map<std::string, std::vector<double>>;

inline double cos(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0, x = 0, y = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    d += a[i] * b[i];
    x += a[i] * a[i];
    y += b[i] * b[i];
  }
  return (x == 0 || y == 0) ? 0 : d / std::sqrt(x * y);
}

struct Sim {
  double average = 0, extrema = 0, greedy = 0;
};

inline Sim similarity(const Sentence& cand, const Sentence& ref, const Table& table, std::size_t dim) {
  std::vector<std::vector<double>> c, r;
  for (const auto& w : cand)
    if (table.count(w)) c.push_back(table.at(w));
  for (const auto& w : ref)
    if (table.count(w)) r.push_back(table.at(w));
  if (c.empty() || r.empty()) return {};
  auto avg = [&](const std::vector<std::vector<double>>& vs) {
    std::vector<double> s(dim, 0);
    for (std::size_t i = 0; i < dim; ++i) {
      for (const auto& v : vs) s[i] += v[i];
      s[i] /= vs.size();
    }
    return s;
  };
  auto ext = [&](const std::vector<std::vector<double>>& vs) {
    std::vector<double> e(dim, 0);
    for (std::size_t i = 0; i < dim; ++i) {
      double mx = -1e300, mn = 1e300;
      for (const auto& v : vs) {
        mx = std::max(mx, v[i]);
        mn = std::min(mn, v[i]);
      }
      e[i] = std::abs(mn) > std::abs(mx) ? mn : mx;
    }
    return e;
  };
  auto greedy = [&](const std::vector<std::vector<double>>& a, const std::vector<std::vector<double>>& b) {
    double s = 0;
    for (const auto& x : a) {
      std::vector<double> sims;
      for (const auto& y : b) sims.push_back(cos(x, y));
      s += *std::max_element(sims.begin(), sims.end());
    }
    return s / a.size();
  };
  return {cos(avg(c), avg(r)), cos(ext(c), ext(r)), 0.5 * (greedy(c, r) + greedy(r, c))};
}

}  // namespace oracle
