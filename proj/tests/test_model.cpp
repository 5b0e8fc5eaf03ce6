#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "dhap/numerics/grad_check.hpp"
#include "dhap/search.hpp"
#include "fixtures.hpp"

using namespace dhap;
using corpus::Vocabulary;

namespace {

double total(const std::vector<num::Real>& v) {
  double s = 0;
  for (auto x : v) s += x;
  return s;
}

}  // namespace

TEST(PackHistory, LayoutAndSpans) {
  HistorySequence s = pack_history({{10, 11}, {12}}, 64);
  EXPECT_EQ(s.tokens, (std::vector<TokenId>{Vocabulary::kCls, 10, 11, Vocabulary::kSep, 12, Vocabulary::kSep}));
  ASSERT_EQ(s.spans.size(), 2u);
  EXPECT_EQ(s.spans[0], std::make_pair(std::size_t{1}, std::size_t{3}));
  EXPECT_EQ(s.spans[1], std::make_pair(std::size_t{4}, std::size_t{5}));
  EXPECT_EQ(s.first_kept, 0u);
  EXPECT_EQ(s.positions.back(), 5);
  EXPECT_NE(s.segments[1], s.segments[4]);
}

TEST(PackHistory, DropsOldestWhole) {
  HistorySequence s = pack_history({{10, 11, 12}, {13}, {14, 15}}, 6);
  EXPECT_EQ(s.first_kept, 1u);
  EXPECT_EQ(s.tokens, (std::vector<TokenId>{Vocabulary::kCls, 13, Vocabulary::kSep, 14, 15, Vocabulary::kSep}));
  HistorySequence empty = pack_history({}, 8);
  EXPECT_EQ(empty.tokens, std::vector<TokenId>{Vocabulary::kCls});
  EXPECT_EQ(empty.response_count(), 0u);
}

TEST(Encoders, Shapes) {
  ModelConfig cfg = fixtures::config(30);
  cfg.d_gru = 8;
  DhapModel model(cfg);
  num::Rng rng(1);
  ModelInput in = fixtures::input(rng, 30, 3);
  Tape tape(false);
  auto enc = model.encode(tape, in);
  EXPECT_EQ(enc.general_fed.cols(), 16u);
  EXPECT_EQ(enc.post.states.rows(), in.post.size());
  EXPECT_EQ(enc.post.states.cols(), 16u);
  EXPECT_EQ(enc.memory.size, 3u);
  EXPECT_EQ(enc.memory.keys.cols(), 16u);
  EXPECT_EQ(enc.memory.values.cols(), 16u);
  std::size_t tokens = 0;
  for (const auto& r : in.history_responses) tokens += r.size();
  EXPECT_EQ(enc.memory.copy_tokens.size(), tokens);
  EXPECT_EQ(enc.sequence.length(), tokens + 4);
  EXPECT_THROW(model.post_encoder().encode(tape, std::vector<TokenId>{}, enc.post.final_state), std::exception);
}

TEST(Memory, ValuesAreSumPooledContextualRows) {
  DhapModel model(fixtures::config(30));
  num::Rng rng(2);
  ModelInput in = fixtures::input(rng, 30, 2);
  Tape tape(false);
  auto enc = model.encode(tape, in);
  HistoryEncoding h = model.history_encoder().encode(tape, enc.sequence);
  for (std::size_t i = 0; i < 2; ++i) {
    const auto [b, e] = enc.sequence.spans[i];
    for (std::size_t c = 0; c < 16; ++c) {
      double s = 0;
      for (std::size_t r = b; r < e; ++r) s += h.contextual.value().at(r, c);
      EXPECT_NEAR(enc.memory.values.value().at(i, c), s, 1e-12);
    }
  }
}

TEST(Memory, UnkAndSpecialsAreNotCopyable) {
  DhapModel model(fixtures::config(30));
  ModelInput in;
  in.post = {7, 8};
  in.history_posts = {{9, 10}};
  in.history_responses = {{Vocabulary::kUnk, 11, Vocabulary::kUnk}};
  Tape tape(false);
  auto enc = model.encode(tape, in);
  EXPECT_EQ(enc.memory.copy_tokens, std::vector<TokenId>{11});
}

TEST(Decoder, AggregateCopyMatchesBruteForce) {
  num::Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t m = 1 + rng.below(12);
    std::vector<num::Real> w(m);
    std::vector<TokenId> ids(m);
    for (std::size_t i = 0; i < m; ++i) {
      w[i] = rng.uniform();
      ids[i] = static_cast<TokenId>(6 + rng.below(5));
    }
    auto agg = aggregate_copy(w, ids);
    for (TokenId y = 0; y < 12; ++y) {
      double expect = 0;
      for (std::size_t i = 0; i < m; ++i)
        if (ids[i] == y) expect += w[i];
      auto it = agg.find(y);
      EXPECT_NEAR(it == agg.end() ? 0.0 : it->second, expect, 1e-15);
      if (expect == 0) EXPECT_EQ(it, agg.end());
    }
  }
}

TEST(Decoder, MixIsConvexCombination) {
  std::vector<num::Real> gen{0.0, 0.5, 0.25, 0.25};
  std::map<TokenId, num::Real> copy{{1, 0.25}, {3, 0.75}};
  auto m = mix(0.6, 0.4, gen, copy);
  EXPECT_DOUBLE_EQ(m[1], 0.6 * 0.5 + 0.4 * 0.25);
  EXPECT_DOUBLE_EQ(m[2], 0.6 * 0.25);
  EXPECT_DOUBLE_EQ(m[3], 0.6 * 0.25 + 0.4 * 0.75);
  EXPECT_NEAR(total(m), 1.0, 1e-15);
}

TEST(Decoder, GenerationMaskKeepsEosUnkAndWords) {
  num::Mask m = generation_mask(8);
  EXPECT_EQ(m, (num::Mask{0, 1, 0, 1, 0, 0, 1, 1}));
}

TEST(Decoder, EmptyHistoryForcesGenerate) {
  DhapModel model(fixtures::config(20));
  ModelInput in;
  in.post = {7, 8, 9};
  auto s = model.start(in);
  StepInfo info = s->advance(Vocabulary::kBos);
  EXPECT_EQ(info.dist.p_gen, 1.0);
  EXPECT_EQ(info.dist.p_copy, 0.0);
  EXPECT_TRUE(info.dist.copy.empty());
  EXPECT_TRUE(info.memory_weights.empty());
  for (auto x : info.dynamic_fed) EXPECT_EQ(x, 0);
  EXPECT_EQ(info.dist.mixed, info.dist.general);
}

TEST(Variants, NoGenerateCopiesOnly) {
  DhapModel model(fixtures::config(30, "wo-gen"));
  num::Rng rng(4);
  auto s = model.start(fixtures::input(rng, 30, 3));
  StepInfo info = s->advance(Vocabulary::kBos);
  EXPECT_EQ(info.dist.p_gen, 0.0);
  EXPECT_EQ(info.dist.p_copy, 1.0);
  for (TokenId y = 0; y < 30; ++y) {
    auto it = info.dist.copy.find(y);
    EXPECT_DOUBLE_EQ(info.dist.mixed[static_cast<std::size_t>(y)], it == info.dist.copy.end() ? 0.0 : it->second);
  }
}

TEST(Variants, NoGeneralZerosTheProfile) {
  DhapModel model(fixtures::config(30, "wo-g"));
  num::Rng rng(5);
  auto s = model.start(fixtures::input(rng, 30, 2));
  StepInfo info = s->advance(Vocabulary::kBos);
  ASSERT_EQ(info.general_fed.size(), 16u);
  for (auto x : info.general_fed) EXPECT_EQ(x, 0);
  DhapModel full(fixtures::config(30, "full"));
  num::Rng rng2(5);
  StepInfo f = full.start(fixtures::input(rng2, 30, 2))->advance(Vocabulary::kBos);
  EXPECT_GT(*std::max_element(f.general_fed.begin(), f.general_fed.end(), [](double a, double b) {
    return std::abs(a) < std::abs(b);
  }), 0.0);
}

TEST(Variants, FixAcceptsCustomProbability) {
  DhapModel model(fixtures::config(30, "fix=0.3"));
  num::Rng rng(6);
  StepInfo info = model.start(fixtures::input(rng, 30, 2))->advance(Vocabulary::kBos);
  EXPECT_DOUBLE_EQ(info.dist.p_gen, 0.3);
  EXPECT_DOUBLE_EQ(info.dist.p_copy, 0.7);
  EXPECT_THROW(Variant::parse("nonsense"), std::invalid_argument);
}

TEST(Session, TeacherForcedNllMatchesSessionProbabilities) {
  for (const char* v : {"full", "seq2seqwa", "wo-gen", "fix"}) {
    auto model = make_model(fixtures::config(25, v, 8));
    num::Rng rng(7);
    ModelExample ex = fixtures::example(rng, 25, 3);
    ex.target[0] = ex.input.history_responses[0][0];
    Tape tape(false);
    const double nll = model->negative_log_likelihood(tape, ex).scalar();
    auto s = model->start(ex.input);
    double expect = 0;
    TokenId prev = Vocabulary::kBos;
    for (TokenId y : ex.target) {
      StepInfo info = s->advance(prev);
      double p = info.dist.mixed[static_cast<std::size_t>(y)];
      if (std::string(v) == "wo-gen") p = std::max(p, 1e-10);
      expect -= std::log(p);
      prev = y;
    }
    EXPECT_NEAR(nll, expect, 1e-9) << v;
  }
}

TEST(Search, BeamOfOneEqualsGreedy) {
  num::Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t vocab = 12 + rng.below(20);
    auto model = make_model(fixtures::config(vocab, trial % 5 == 0 ? "seq2seqwa" : "full", 100 + trial, 8));
    ModelInput in = fixtures::input(rng, vocab, rng.below(4));
    DecodeResult g = greedy_decode(*model, in, 8);
    DecodeResult b = beam_decode(*model, in, 1, 8);
    EXPECT_EQ(g.tokens, b.tokens) << "trial " << trial;
    EXPECT_NEAR(g.log_prob, b.log_prob, 1e-12);
  }
}

TEST(Search, MaxLenOneEmitsOneToken) {
  auto model = make_model(fixtures::config(20));
  num::Rng rng(9);
  ModelInput in = fixtures::input(rng, 20, 2);
  EXPECT_EQ(greedy_decode(*model, in, 1).tokens.size(), 1u);
  EXPECT_LE(beam_decode(*model, in, 3, 1).tokens.size(), 1u);
}

TEST(Search, WiderBeamNeverScoresWorse) {
  num::Rng rng(10);
  for (int trial = 0; trial < 20; ++trial) {
    auto model = make_model(fixtures::config(15, "full", 200 + trial, 8));
    ModelInput in = fixtures::input(rng, 15, 2);
    DecodeResult one = beam_decode(*model, in, 1, 4);
    DecodeResult four = beam_decode(*model, in, 4, 4);
    // Only comparable when both finished with EOS.
    if (!one.tokens.empty() && one.tokens.back() == Vocabulary::kEos && !four.tokens.empty() &&
        four.tokens.back() == Vocabulary::kEos) {
      EXPECT_GE(four.log_prob / four.tokens.size(), one.log_prob / one.tokens.size() - 1e-12);
    }
  }
}

TEST(Search, ArgmaxTiesGoToLowestId) {
  EXPECT_EQ(argmax({0.1, 0.4, 0.4, 0.1}), 1);
  EXPECT_EQ(strip_eos({7, Vocabulary::kEos}), std::vector<TokenId>{7});
}

TEST(ProfileCache, ReusesAndInvalidates) {
  DhapModel model(fixtures::config(30));
  num::Rng rng(11);
  ModelInput in = fixtures::input(rng, 30, 3);
  ProfileCache cache;
  DecodeResult first = greedy_decode(model, in, 6, &cache);
  EXPECT_EQ(cache.encodings(), 1u);
  ModelInput other_post = in;
  other_post.post = {9, 9, 9};
  greedy_decode(model, other_post, 6, &cache);
  EXPECT_EQ(cache.encodings(), 1u);
  EXPECT_GE(cache.hits(), 1u);
  EXPECT_EQ(greedy_decode(model, in, 6, &cache).tokens, first.tokens);
  EXPECT_EQ(greedy_decode(model, in, 6).tokens, first.tokens);

  ModelInput changed = in;
  changed.history_responses[1].push_back(12);
  EXPECT_NE(ProfileCache::key(changed), ProfileCache::key(in));
  greedy_decode(model, changed, 6, &cache);
  EXPECT_EQ(cache.encodings(), 2u);
}

TEST(Seq2Seq, IgnoresHistory) {
  auto model = make_model(fixtures::config(30, "seq2seqwa"));
  num::Rng rng(12);
  ModelInput in = fixtures::input(rng, 30, 4);
  ModelInput shuffled = in;
  std::reverse(shuffled.history_responses.begin(), shuffled.history_responses.end());
  shuffled.history_responses.pop_back();
  shuffled.history_posts.pop_back();
  EXPECT_EQ(greedy_decode(*model, in, 8).tokens, greedy_decode(*model, shuffled, 8).tokens);
  StepInfo info = model->start(in)->advance(Vocabulary::kBos);
  EXPECT_EQ(info.dist.p_copy, 0.0);
  EXPECT_EQ(model->params().find("history.token_embedding"), nullptr);
}

TEST(Gradients, ThreeStepRolloutMatchesFiniteDifferences) {
  for (const char* v : {"full", "wo-pc", "seq2seqwa"}) {
    ModelConfig cfg = fixtures::config(14, v, 3, 4);
    auto model = make_model(cfg);
    num::Rng rng(13);
    ModelExample ex = fixtures::example(rng, 14, 2, 2);
    ex.target[1] = ex.input.history_responses[1][0];
    num::GradCheckOptions opt;
    opt.tolerance = 1e-4;
    auto rep = num::grad_check([&](Tape& t) { return model->negative_log_likelihood(t, ex); },
                               model->params().trainable(), opt);
    EXPECT_TRUE(rep.passed) << v << " max rel error " << rep.max_rel_error;
  }
}

TEST(Gradients, DropoutIsReproducibleUnderASeed) {
  auto model = make_model(fixtures::config(20));
  num::Rng rng(14);
  ModelExample ex = fixtures::example(rng, 20, 2);
  auto run = [&](std::uint64_t seed) {
    Tape t;
    t.set_training(true);
    t.seed(seed);
    return model->negative_log_likelihood(t, ex).scalar();
  };
  EXPECT_EQ(run(5), run(5));
  EXPECT_NE(run(5), run(6));
}
