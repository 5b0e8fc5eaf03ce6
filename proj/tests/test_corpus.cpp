#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "dhap/corpus.hpp"

using namespace dhap::corpus;

namespace {

std::string line(const std::string& post, const std::string& user, int ts) {
  return post + "\tother\t" + std::to_string(ts) + "\treply words " + std::to_string(ts) + "\t" + user + "\t" +
         std::to_string(ts + 1) + "\n";
}

std::string user_lines(const std::string& user, int n, int start = 0) {
  std::string s;
  for (int i = 0; i < n; ++i) s += line("hello there", user, start + 10 * i);
  return s;
}

}  // namespace

TEST(Tokenize, LowercasesAndSplitsPunctuation) {
  EXPECT_EQ(tokenize("Hello, World!"), (std::vector<std::string>{"hello", ",", "world", "!"}));
  EXPECT_EQ(tokenize("  a \t b  "), (std::vector<std::string>{"a", "b"}));
  EXPECT_TRUE(tokenize("").empty());
  EXPECT_EQ(join_tokens({"a", "b"}), "a b");
}

TEST(Tokenize, NormalizesUnicode) {
  // Decomposed e + combining acute equals the precomposed form.
  EXPECT_EQ(tokenize("Cafe\xCC\x81"), tokenize("caf\xC3\xA9"));
}

TEST(Ingest, GroupsAndSortsByResponseTime) {
  std::string text;
  for (int i = 11; i >= 0; --i) text += line("hi there", "u1", 10 * i);
  std::istringstream in(text);
  auto records = ingest(in);
  ASSERT_EQ(records.size(), 1u);
  EXPECT_EQ(records[0].history.size(), 12u);
  for (std::size_t i = 1; i < 12; ++i)
    EXPECT_LT(records[0].history[i - 1].response.timestamp, records[0].history[i].response.timestamp);
  EXPECT_EQ(records[0].history[0].response.author, "u1");
}

TEST(Ingest, MoreThanTenPairsRequired) {
  std::istringstream in(user_lines("ten", 10) + user_lines("eleven", 11));
  auto records = ingest(in);
  ASSERT_EQ(records.size(), 1u);
  EXPECT_EQ(records[0].user_id, "eleven");
}

TEST(Ingest, ErrorsNameTheLine) {
  std::istringstream bad_fields(user_lines("u", 2) + "a\tb\t1\tc\td\n");
  try {
    ingest(bad_fields);
    FAIL() << "no error";
  } catch (const CorpusError& e) {
    EXPECT_NE(std::string(e.what()).find("3"), std::string::npos) << e.what();
  }
  std::istringstream bad_ts("hi there\tx\tnoon\treply now\tu\t5\n");
  EXPECT_THROW(ingest(bad_ts), CorpusError);
}

TEST(Ingest, RoundTripsThroughTsv) {
  std::istringstream in(user_lines("a", 12) + user_lines("b", 13, 5));
  auto records = ingest(in);
  std::ostringstream out;
  write_tsv(out, records);
  std::istringstream again(out.str());
  auto back = ingest(again);
  ASSERT_EQ(back.size(), records.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].user_id, records[i].user_id);
    EXPECT_EQ(back[i].history.size(), records[i].history.size());
  }
}

TEST(Examples, HistoryIsStrictlyEarlierAndCapped) {
  SynthOptions so;
  so.n_users = 1;
  so.pairs_per_user = 12;
  auto rec = synth_corpus(so)[0];
  auto xs = make_examples(rec, 5);
  ASSERT_EQ(xs.size(), 11u);
  for (const auto& x : xs) {
    EXPECT_LE(x.history.size(), 5u);
    EXPECT_FALSE(x.history.empty());
    for (const auto& p : x.history) EXPECT_LT(p.response.timestamp, x.response.timestamp);
  }
  EXPECT_EQ(xs.back().history.back().response.timestamp, rec.history[10].response.timestamp);
}

TEST(Split, EightOneOneAndTimeOrdered) {
  SynthOptions so;
  so.n_users = 3;
  so.pairs_per_user = 11;  // 10 usable targets
  Split s = split_by_time(synth_corpus(so), 25);
  EXPECT_EQ(s.train.size(), 24u);
  EXPECT_EQ(s.valid.size(), 3u);
  EXPECT_EQ(s.test.size(), 3u);

  so.pairs_per_user = 21;  // 20 usable targets
  s = split_by_time(synth_corpus(so), 25);
  EXPECT_EQ(s.train.size(), 48u);
  EXPECT_EQ(s.valid.size(), 6u);
  EXPECT_EQ(s.test.size(), 6u);
  for (const auto& t : s.test)
    for (const auto& r : s.train)
      if (r.user_id == t.user_id) EXPECT_GE(t.response.timestamp, r.response.timestamp);
}

TEST(Vocabulary, SpecialsFirstAndCapped) {
  SynthOptions so;
  Split s = split_by_time(synth_corpus(so), 25);
  Vocabulary v = Vocabulary::build(s.train, 30);
  EXPECT_EQ(v.size(), 30u);
  EXPECT_EQ(v.token(Vocabulary::kPad), "<pad>");
  EXPECT_EQ(v.id("definitely-not-there"), Vocabulary::kUnk);
  EXPECT_THROW(Vocabulary::build(s.train, Vocabulary::kNumSpecial), CorpusError);
  auto ids = v.encode({v.token(10), "zzz"});
  EXPECT_EQ(ids[0], 10);
  EXPECT_EQ(ids[1], Vocabulary::kUnk);
  EXPECT_EQ(v.decode({Vocabulary::kBos, 10, Vocabulary::kEos}), std::vector<std::string>{v.token(10)});
}

TEST(Vocabulary, FrequencyTiesBreakLexicographically) {
  TrainingExample ex;
  ex.post.tokens = {"b", "a", "c", "c"};
  ex.post.text = "b a c c";
  ex.response.tokens = {"b", "a"};
  ex.response.text = "b a";
  ex.response.timestamp = 1;
  Vocabulary v = Vocabulary::build({ex}, 9);
  EXPECT_EQ(v.token(6), "a");
  EXPECT_EQ(v.token(7), "b");
  EXPECT_EQ(v.token(8), "c");
}

TEST(Vocabulary, SaveLoadRoundTrip) {
  Vocabulary v = Vocabulary::from_tokens({"x", "y"});
  std::stringstream ss;
  v.write(ss);
  EXPECT_EQ(Vocabulary::read(ss), v);
}

TEST(Vocabulary, PersonalizedExcludesSpecialsAndUnk) {
  Vocabulary v = Vocabulary::from_tokens({"me", "you"});
  DialoguePair p;
  p.response.tokens = {"me", "unknown", "</s>"};
  auto set = personalized_vocab({p}, v);
  EXPECT_EQ(set, std::set<TokenId>{v.id("me")});
}

TEST(Synth, DeterministicAndPersonaTokensAreUnique) {
  SynthOptions so;
  so.n_users = 4;
  auto a = synth_corpus(so);
  auto b = synth_corpus(so);
  std::ostringstream ta, tb;
  write_tsv(ta, a);
  write_tsv(tb, b);
  EXPECT_EQ(ta.str(), tb.str());
  for (std::size_t u = 0; u < a.size(); ++u) {
    auto mine = synth_persona_tokens(u, so.persona_tokens_per_user);
    for (const auto& pair : a[u].history)
      for (const auto& tok : mine)
        EXPECT_NE(std::find(pair.response.tokens.begin(), pair.response.tokens.end(), tok),
                  pair.response.tokens.end());
    for (std::size_t w = 0; w < a.size(); ++w) {
      if (w == u) continue;
      for (const auto& pair : a[w].history)
        for (const auto& tok : mine)
          EXPECT_EQ(std::find(pair.response.tokens.begin(), pair.response.tokens.end(), tok),
                    pair.response.tokens.end());
    }
  }
  so.seed = 8;
  std::ostringstream tc;
  write_tsv(tc, synth_corpus(so));
  EXPECT_NE(tc.str(), ta.str());
}

TEST(Jsonl, RoundTrip) {
  SynthOptions so;
  so.n_users = 2;
  Split s = split_by_time(synth_corpus(so), 25);
  auto path = std::filesystem::temp_directory_path() / "dhap_examples.jsonl";
  write_jsonl(path, s.train);
  auto back = read_jsonl(path);
  ASSERT_EQ(back.size(), s.train.size());
  for (std::size_t i = 0; i < back.size(); ++i) EXPECT_EQ(to_json(back[i]), to_json(s.train[i]));
  std::filesystem::remove(path);
}
