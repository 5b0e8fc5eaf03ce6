// Acceptance gate: one PASS/FAIL line per criterion.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "dhap/cli.hpp"
#include "dhap/eval.hpp"
#include "dhap/numerics/grad_check.hpp"
#include "dhap/search.hpp"
#include "dhap/trainer.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace dhap;
using corpus::Vocabulary;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::vector<ModelExample> encode_all(const std::vector<corpus::TrainingExample>& xs, const Vocabulary& v) {
  std::vector<ModelExample> out;
  for (const auto& x : xs) out.push_back(encode_example(x, v));
  return out;
}

double mean_loss(const ResponseModel& model, const std::vector<ModelExample>& xs, double eta) {
  double total = 0;
  for (const auto& x : xs) {
    num::Tape tape(false);
    total += static_cast<double>(example_loss(tape, model, x, eta).scalar());
  }
  return total / static_cast<double>(xs.size());
}

// 1 -------------------------------------------------------------------------
Outcome gradient_correctness() {
  const auto t0 = Clock::now();
  ModelConfig cfg = fixtures::config(50, "full", 3);
  DhapModel model(cfg);
  num::Rng rng(11);
  ModelExample ex = fixtures::example(rng, 50, 3);
  // Put a few response tokens into the target so the copy path carries gradient.
  ex.target[1] = ex.input.history_responses[0][0];
  ex.target[2] = ex.input.history_responses[2][0];
  num::GradCheckOptions opt;
  opt.eps = 1e-4;
  opt.tolerance = 1e-3;
  auto build = [&](num::Tape& tape) { return example_loss(tape, model, ex, 0.1); };
  num::GradCheckReport rep = num::grad_check(build, model.params().trainable(), opt);
  std::size_t checked = 0;
  for (const auto& e : rep.entries) checked += e.checked;
  const double secs = seconds_since(t0);
  std::ostringstream d;
  d << checked << " entries in " << rep.entries.size() << " tensors, max rel err " << rep.max_rel_error << ", "
    << secs << " s";
  return {rep.passed && rep.max_rel_error < 1e-3 && secs < 120, d.str()};
}

// 2 -------------------------------------------------------------------------
Outcome probability_invariants() {
  const char* variants[] = {"full", "wo-g", "wo-d", "wo-pc", "wo-gen", "wo-cop", "fix", "seq2seqwa"};
  num::Rng rng(2024);
  std::size_t steps = 0, violations = 0;
  std::string first;
  for (int draw = 0; draw < 1000; ++draw) {
    const std::size_t vocab = 12 + rng.below(40);
    const std::string variant = variants[rng.below(8)];
    ModelConfig cfg = fixtures::config(vocab, variant, 1000 + draw, 8);
    auto model = make_model(cfg);
    ModelInput in = fixtures::input(rng, vocab, rng.below(5), /*allow_unk=*/true);
    const auto personal = fixtures::personal_vocab(in, vocab);
    auto session = model->start(in);
    TokenId prev = Vocabulary::kBos;
    for (int t = 0; t < 6; ++t) {
      StepInfo s = session->advance(prev);
      ++steps;
      auto sum = [](const std::vector<num::Real>& v) {
        double a = 0;
        for (auto x : v) a += x;
        return a;
      };
      double copy_sum = 0;
      bool support_ok = true;
      for (const auto& [y, w] : s.dist.copy) {
        copy_sum += w;
        if (y < 0 || static_cast<std::size_t>(y) >= vocab || !personal[static_cast<std::size_t>(y)]) support_ok = false;
      }
      bool nonneg = true;
      for (auto x : s.dist.mixed) nonneg = nonneg && x >= 0;
      const bool ok = s.dist.p_gen + s.dist.p_copy == 1.0 && std::abs(sum(s.dist.general) - 1) <= 1e-6 &&
                      (s.dist.copy.empty() ? s.dist.p_copy == 0.0 : std::abs(copy_sum - 1) <= 1e-6) &&
                      std::abs(sum(s.dist.mixed) - 1) <= 1e-6 && support_ok && nonneg;
      if (!ok) {
        ++violations;
        if (first.empty()) first = " first at draw " + std::to_string(draw) + " (" + variant + ")";
      }
      prev = argmax(s.dist.mixed);
    }
  }
  return {violations == 0,
          std::to_string(steps) + " steps over 1000 draws, " + std::to_string(violations) + " violations" + first};
}

// 3 -------------------------------------------------------------------------
Outcome overfit() {
  const auto t0 = Clock::now();
  corpus::SynthOptions so;  // 10 users x 12 pairs, seed 7
  std::vector<corpus::TrainingExample> all;
  for (const auto& r : corpus::synth_corpus(so))
    for (auto& e : corpus::make_examples(r, 25)) all.push_back(std::move(e));
  Vocabulary vocab = Vocabulary::build(all, 512);
  auto data = encode_all(all, vocab);

  TrainConfig cfg = TrainConfig::desk();
  cfg.model.vocab_size = vocab.size();
  cfg.learning_rate = 1e-3;
  cfg.epochs = 1000;
  cfg.max_steps = 300;
  auto model = make_model(cfg.model);
  const double before = mean_loss(*model, data, cfg.eta);
  TrainOptions opt;
  opt.validate = false;
  TrainReport rep = train(*model, cfg, data, {}, vocab, opt);
  const double after = mean_loss(*model, data, cfg.eta);

  std::size_t hit = 0, total = 0;
  for (const auto& ex : data) {
    DecodeResult r = greedy_decode(*model, ex.input, cfg.decode_max_len);
    for (std::size_t i = 0; i < ex.target.size(); ++i) {
      ++total;
      hit += i < r.tokens.size() && r.tokens[i] == ex.target[i];
    }
  }
  const double drop = 1 - after / before;
  const double acc = static_cast<double>(hit) / static_cast<double>(total);
  const double secs = seconds_since(t0);
  std::ostringstream d;
  d << rep.step_losses.size() << " steps, loss " << before << " -> " << after << " (drop " << 100 * drop
    << "%), token accuracy " << 100 * acc << "%, " << secs << " s";
  return {rep.step_losses.size() <= 300 && drop >= 0.9 && acc >= 0.8 && secs < 300, d.str()};
}

// 4 -------------------------------------------------------------------------
Outcome personalization() {
  const auto t0 = Clock::now();
  corpus::SynthOptions so;
  so.n_users = 200;
  so.pairs_per_user = 12;
  corpus::Split split = corpus::split_by_time(corpus::synth_corpus(so), 25);
  Vocabulary vocab = Vocabulary::build(split.train, 512);
  auto train_set = encode_all(split.train, vocab);

  std::map<std::string, double> pf1;
  for (const std::string v : {"full", "wo-cop", "seq2seqwa"}) {
    TrainConfig cfg = TrainConfig::desk();
    cfg.model.vocab_size = vocab.size();
    cfg.model.variant = Variant::parse(v);
    cfg.epochs = 2;
    TrainOptions opt;
    opt.validate = false;
    auto model = make_model(cfg.model);
    train(*model, cfg, train_set, {}, vocab, opt);
    double total = 0;
    for (const auto& ex : split.test) {
      DecodeResult r = greedy_decode(*model, encode_input(ex.post.tokens, ex.history, vocab), cfg.decode_max_len);
      std::vector<eval::Sentence> hist;
      for (const auto& p : ex.history) hist.push_back(p.response.tokens);
      total += eval::persona_f1(vocab.decode(strip_eos(r.tokens)), hist);
    }
    pf1[v] = total / static_cast<double>(split.test.size());
  }
  const double r_cop = pf1["full"] / pf1["wo-cop"];
  const double r_s2s = pf1["full"] / pf1["seq2seqwa"];
  const double secs = seconds_since(t0);
  std::ostringstream d;
  d << "P-F1 full " << pf1["full"] << ", wo-cop " << pf1["wo-cop"] << " (x" << r_cop << "), seq2seqwa "
    << pf1["seq2seqwa"] << " (x" << r_s2s << "), " << secs << " s";
  return {r_cop >= 1.10 && r_s2s >= 1.10 && secs < 900, d.str()};
}

// 5 -------------------------------------------------------------------------
Outcome ablation_mechanics() {
  num::Rng rng(5);
  std::size_t fix_steps = 0, cop_steps = 0, d_steps = 0;
  bool fix_ok = true, cop_ok = true, d_ok = true;
  for (int draw = 0; draw < 20; ++draw) {
    ModelInput in = fixtures::input(rng, 40, 1 + rng.below(4));
    DhapModel fix(fixtures::config(40, "fix", 50 + draw));
    DhapModel wo_cop(fixtures::config(40, "wo-cop", 50 + draw));
    DhapModel wo_d(fixtures::config(40, "wo-d", 50 + draw));
    for (DhapModel* m : {&fix, &wo_cop, &wo_d}) {
      auto session = m->start(in);
      TokenId prev = Vocabulary::kBos;
      for (int t = 0; t < 8; ++t) {
        StepInfo s = session->advance(prev);
        if (m == &fix) {
          ++fix_steps;
          fix_ok = fix_ok && std::abs(s.dist.p_gen - 0.8) <= 1e-15 && std::abs(s.dist.p_copy - 0.2) <= 1e-15;
        } else if (m == &wo_cop) {
          ++cop_steps;
          cop_ok = cop_ok && s.dist.mixed == s.dist.general && s.dist.p_copy == 0.0;
        } else {
          ++d_steps;
          bool zero = !s.dynamic_fed.empty() && !s.memory_weights.empty();
          for (auto x : s.dynamic_fed) zero = zero && x == 0;
          d_ok = d_ok && zero;
        }
        prev = argmax(s.dist.mixed);
      }
    }
  }
  std::ostringstream d;
  d << "fix (0.8,0.2) on " << fix_steps << " steps: " << (fix_ok ? "yes" : "no") << "; wo-cop mixed==general on "
    << cop_steps << " steps: " << (cop_ok ? "yes" : "no") << "; wo-d zero e^D on " << d_steps
    << " steps: " << (d_ok ? "yes" : "no");
  return {fix_ok && cop_ok && d_ok, d.str()};
}

// 6 -------------------------------------------------------------------------
Outcome metric_oracles() {
  std::size_t checks = 0;
  double worst = 0;
  auto cmp = [&](double a, double b) {
    ++checks;
    worst = std::max(worst, std::abs(a - b));
  };
  // Hand cases.
  cmp(eval::bleu({"a", "b", "c"}, {"a", "c", "d"}, 1), 200.0 / 3);
  cmp(eval::dist_n({{"a", "a", "a"}}, 1), 1.0 / 3);
  cmp(eval::rouge_l({"a", "b", "c"}, {"b", "c", "d"}), 200.0 / 3);
  cmp(eval::rouge_l({"c", "b", "a"}, {"a", "b", "c"}), 100.0 / 3);
  cmp(eval::persona_f1({"a", "b"}, {{"a", "c"}}), 0.5);
  cmp(eval::bleu({"x", "y"}, {"x", "y"}, 2), 100.0);

  num::Rng rng(606);
  const std::vector<std::string> words = {"a", "b", "c", "d", "e", "f", "g", "h", "i", "j", "k", "l"};
  auto sentence = [&](std::size_t min_len) {
    eval::Sentence s;
    const std::size_t n = min_len + rng.below(7);
    for (std::size_t i = 0; i < n; ++i) s.push_back(words[rng.below(words.size())]);
    return s;
  };
  eval::EmbeddingTable table = eval::EmbeddingTable::random(words, 12, 99);
  oracle::Table plain;
  for (const auto& w : words) plain[w] = *table.find(w);

  for (int f = 0; f < 50; ++f) {
    std::vector<eval::Sentence> cands, refs, docs;
    for (int i = 0; i < 5; ++i) {
      cands.push_back(sentence(f % 5 == 0 ? 0 : 1));
      refs.push_back(sentence(1));
    }
    std::vector<eval::Sentence> history;
    for (std::size_t i = 0, n = 1 + rng.below(4); i < n; ++i) history.push_back(sentence(1));
    for (int i = 0; i < 8; ++i) docs.push_back(sentence(1));
    eval::IdfTable idf = eval::IdfTable::build(docs);
    for (int n = 1; n <= 2; ++n) {
      cmp(eval::corpus_bleu(cands, refs, n), oracle::corpus_bleu(cands, refs, n));
      cmp(eval::bleu(cands[0], refs[0], n), oracle::bleu(cands[0], refs[0], n));
      cmp(eval::dist_n(cands, n), oracle::dist(cands, n));
    }
    for (std::size_t i = 0; i < cands.size(); ++i) {
      cmp(eval::rouge_l(cands[i], refs[i]), oracle::rouge_l(cands[i], refs[i]));
      cmp(eval::persona_f1(cands[i], history), oracle::persona_f1(cands[i], history));
      cmp(eval::persona_cover(cands[i], history, idf), oracle::persona_cover(cands[i], history, docs));
      auto s = eval::embedding_similarity(cands[i], refs[i], table);
      auto o = oracle::similarity(cands[i], refs[i], plain, 12);
      cmp(s.average, o.average);
      cmp(s.extrema, o.extrema);
      cmp(s.greedy, o.greedy);
    }
  }
  std::ostringstream d;
  d << checks << " comparisons, max abs difference " << worst;
  return {worst <= 1e-9, d.str()};
}

// 7 -------------------------------------------------------------------------
Outcome determinism() {
  corpus::SynthOptions so;
  so.n_users = 12;
  corpus::Split split = corpus::split_by_time(corpus::synth_corpus(so), 25);
  Vocabulary vocab = Vocabulary::build(split.train, 512);
  auto tr = encode_all(split.train, vocab);
  auto va = encode_all(split.valid, vocab);
  TrainConfig cfg = TrainConfig::desk();
  cfg.model.vocab_size = vocab.size();
  cfg.epochs = 3;
  const fs::path dir = fs::temp_directory_path() / "dhap_acceptance_determinism";
  fs::remove_all(dir);

  std::vector<double> runs[2];
  TrainReport last;
  for (int k = 0; k < 2; ++k) {
    auto model = make_model(cfg.model);
    TrainOptions opt;
    opt.out_dir = dir / std::to_string(k);
    last = train(*model, cfg, tr, va, vocab, opt);
    runs[k] = last.step_losses;
  }
  const bool same = runs[0] == runs[1] && !runs[0].empty();
  LoadedModel loaded = load_model(last.best_checkpoint);
  const double reloaded = validation_bleu1(*loaded.model, va, loaded.vocab, cfg.decode_max_len);
  fs::remove_all(dir);
  std::ostringstream d;
  d << runs[0].size() << " steps, trajectories " << (same ? "identical" : "differ") << "; best valid BLEU-1 "
    << last.best_bleu1 << " reloaded " << reloaded;
  return {same && reloaded == last.best_bleu1, d.str()};
}

// 8 -------------------------------------------------------------------------
Outcome history_buckets() {
  const fs::path dir = fs::temp_directory_path() / "dhap_acceptance_buckets";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::ostringstream out, err;
  std::istringstream in;
  auto run = [&](std::vector<std::string> args) {
    std::vector<const char*> argv{"dhap"};
    for (const auto& a : args) argv.push_back(a.c_str());
    return cli::run(static_cast<int>(argv.size()), argv.data(), in, out, err);
  };
  const std::string tsv = (dir / "corpus.tsv").string(), data = (dir / "data").string();
  const std::string runs = (dir / "run").string(), report = (dir / "report.json").string();
  int code = run({"synth", "--out", tsv, "--users", "12", "--pairs", "16"});
  if (!code) code = run({"prepare", "--input", tsv, "--out", data});
  if (!code) code = run({"train", "--data", data, "--out", runs, "--epochs", "2"});
  if (!code)
    code = run({"evaluate", "--checkpoint", runs + "/best", "--data", data, "--split", "train", "--report", report,
                "--bucket-by-history", "4"});
  if (code) return {false, "command failed: " + err.str()};

  std::ifstream f(report);
  auto j = nlohmann::json::parse(f);
  const auto& buckets = j.at("buckets");
  bool monotone = buckets.size() >= 2;
  std::size_t pairs = 0;
  std::ostringstream d;
  d << buckets.size() << " buckets:";
  for (std::size_t i = 0; i < buckets.size(); ++i) {
    const auto lo = buckets[i].at("history_min").get<std::size_t>();
    const auto hi = buckets[i].at("history_max").get<std::size_t>();
    const double b = buckets[i].at("bleu1").get<double>();
    monotone = monotone && lo <= hi && std::isfinite(b) && b >= 0 && b <= 100;
    if (i > 0) monotone = monotone && lo > buckets[i - 1].at("history_max").get<std::size_t>();
    pairs += buckets[i].at("pairs").get<std::size_t>();
    d << " [" << lo << "-" << hi << "] " << b;
  }
  const bool complete = pairs == j.at("pairs").get<std::size_t>();
  fs::remove_all(dir);
  return {monotone && complete, d.str()};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  const Criterion criteria[] = {
      {"gradient correctness", gradient_correctness},
      {"probability invariants", probability_invariants},
      {"overfit memorization", overfit},
      {"personalization signal", personalization},
      {"ablation mechanics", ablation_mechanics},
      {"metric oracle equivalence", metric_oracles},
      {"determinism and persistence", determinism},
      {"history-length harness", history_buckets},
  };
  int failures = 0;
  int index = 0;
  for (const auto& c : criteria) {
    ++index;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << index << ". " << c.name << ": " << o.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
