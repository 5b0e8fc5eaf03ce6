#include "dhap/search.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dhap {

using corpus::Vocabulary;

TokenId argmax(const std::vector<num::Real>& dist) {
  if (dist.empty()) throw std::invalid_argument("argmax of an empty distribution");
  std::size_t best = 0;
  for (std::size_t i = 1; i < dist.size(); ++i) {
    if (dist[i] > dist[best]) best = i;
  }
  return static_cast<TokenId>(best);
}

DecodeResult greedy_decode(const ResponseModel& model, const ModelInput& input, std::size_t max_len,
                           ProfileCache* cache, bool keep_steps) {
  DecodeResult out;
  auto session = model.start(input, cache);
  TokenId previous = Vocabulary::kBos;
  for (std::size_t t = 0; t < max_len; ++t) {
    StepInfo info = session->advance(previous);
    const TokenId y = argmax(info.dist.mixed);
    out.log_prob += std::log(static_cast<double>(info.dist.mixed[static_cast<std::size_t>(y)]));
    out.tokens.push_back(y);
    if (keep_steps) out.steps.push_back(std::move(info));
    if (y == Vocabulary::kEos) break;
    previous = y;
  }
  return out;
}

namespace {

struct Hypothesis {
  std::vector<TokenId> tokens;
  double log_prob = 0.0;
  std::unique_ptr<DecodingSession> session;

  double score() const { return tokens.empty() ? 0.0 : log_prob / static_cast<double>(tokens.size()); }
};

struct Candidate {
  std::size_t parent;
  TokenId token;
  double log_prob;
  std::size_t length;
  double score() const { return log_prob / static_cast<double>(length); }
};

bool better(const std::vector<TokenId>& a_prefix, TokenId a_tok, double a_score, const std::vector<TokenId>& b_prefix,
            TokenId b_tok, double b_score) {
  if (a_score != b_score) return a_score > b_score;
  auto at = [](const std::vector<TokenId>& prefix, TokenId tok, std::size_t i) {
    return i < prefix.size() ? prefix[i] : tok;
  };
  const std::size_t na = a_prefix.size() + 1, nb = b_prefix.size() + 1;
  for (std::size_t i = 0; i < std::min(na, nb); ++i) {
    const TokenId x = at(a_prefix, a_tok, i), y = at(b_prefix, b_tok, i);
    if (x != y) return x < y;
  }
  return na < nb;
}

}  // namespace

DecodeResult beam_decode(const ResponseModel& model, const ModelInput& input, std::size_t beam, std::size_t max_len,
                         ProfileCache* cache) {
  if (beam == 0) throw std::invalid_argument("beam width must be positive");
  std::vector<Hypothesis> alive;
  alive.push_back({{}, 0.0, model.start(input, cache)});
  std::vector<Hypothesis> finished;

  for (std::size_t t = 0; t < max_len && !alive.empty(); ++t) {
    std::vector<Candidate> pool;
    for (std::size_t h = 0; h < alive.size(); ++h) {
      const TokenId previous = alive[h].tokens.empty() ? Vocabulary::kBos : alive[h].tokens.back();
      StepInfo info = alive[h].session->advance(previous);
      for (std::size_t y = 0; y < info.dist.mixed.size(); ++y) {
        const double p = static_cast<double>(info.dist.mixed[y]);
        if (p <= 0.0) continue;
        pool.push_back({h, static_cast<TokenId>(y), alive[h].log_prob + std::log(p), alive[h].tokens.size() + 1});
      }
    }
    auto order = [&](const Candidate& a, const Candidate& b) {
      return better(alive[a.parent].tokens, a.token, a.score(), alive[b.parent].tokens, b.token, b.score());
    };
    const std::size_t keep = std::min(beam, pool.size());
    std::partial_sort(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(keep), pool.end(), order);

    std::vector<Hypothesis> next;
    for (std::size_t i = 0; i < keep; ++i) {
      const Candidate& c = pool[i];
      Hypothesis h;
      h.tokens = alive[c.parent].tokens;
      h.tokens.push_back(c.token);
      h.log_prob = c.log_prob;
      if (c.token == Vocabulary::kEos) {
        finished.push_back(std::move(h));
      } else {
        h.session = alive[c.parent].session->clone();
        next.push_back(std::move(h));
      }
    }
    alive = std::move(next);
  }

  for (auto& h : alive) finished.push_back(std::move(h));
  if (finished.empty()) return {};
  auto best = std::min_element(finished.begin(), finished.end(), [](const Hypothesis& a, const Hypothesis& b) {
    if (a.score() != b.score()) return a.score() > b.score();
    return a.tokens < b.tokens;
  });
  DecodeResult out;
  out.tokens = best->tokens;
  out.log_prob = best->log_prob;
  return out;
}

DecodeResult decode(const ResponseModel& model, const ModelInput& input, const DecodeOptions& options,
                    ProfileCache* cache) {
  if (options.beam <= 1) return greedy_decode(model, input, options.max_len, cache, options.keep_steps);
  return beam_decode(model, input, options.beam, options.max_len, cache);
}

std::vector<TokenId> strip_eos(std::vector<TokenId> tokens) {
  if (!tokens.empty() && tokens.back() == Vocabulary::kEos) tokens.pop_back();
  return tokens;
}

}  // namespace dhap
