#include "dhap/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <sstream>

namespace dhap::cli {

namespace fs = std::filesystem;
using corpus::TrainingExample;
using corpus::Vocabulary;
using nlohmann::json;

namespace {

class NumericFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void write_json(const fs::path& path, const json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return json::parse(in);
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

corpus::Utterance utterance(const std::string& text, const std::string& author) {
  corpus::Utterance u;
  u.tokens = corpus::tokenize(text);
  u.text = corpus::join_tokens(u.tokens);
  u.author = author;
  return u;
}

/// History file: one response per line, or `post<TAB>response`. A line
/// without a post gets a single-token placeholder post.
std::vector<corpus::DialoguePair> read_history_file(const fs::path& path) {
  std::vector<corpus::DialoguePair> history;
  for (const auto& line : read_lines(path)) {
    const auto tab = line.find('\t');
    std::string post = tab == std::string::npos ? "" : line.substr(0, tab);
    std::string response = tab == std::string::npos ? line : line.substr(tab + 1);
    corpus::DialoguePair pair{utterance(post, ""), utterance(response, "me")};
    if (pair.response.tokens.empty()) continue;
    if (pair.post.tokens.empty()) pair.post.tokens = {Vocabulary().token(Vocabulary::kUnk)};
    history.push_back(std::move(pair));
  }
  return history;
}

std::string join(const std::vector<std::string>& tokens) { return corpus::join_tokens(tokens); }

TrainConfig build_config(const std::string& config_file, const std::vector<std::string>& overrides,
                         const std::string& variant, std::optional<std::uint64_t> seed,
                         std::optional<std::size_t> epochs, std::optional<std::size_t> max_steps) {
  TrainConfig cfg = config_file.empty() ? TrainConfig::desk() : load_train_config(config_file);
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    cfg.set(trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
  }
  if (!variant.empty()) cfg.model.variant = Variant::parse(variant);
  if (seed) {
    cfg.seed = *seed;
    cfg.model.seed = *seed;
  }
  if (epochs) cfg.epochs = *epochs;
  if (max_steps) cfg.max_steps = *max_steps;
  return cfg;
}

std::vector<ModelExample> encode_all(const std::vector<TrainingExample>& examples, const Vocabulary& vocab) {
  std::vector<ModelExample> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) out.push_back(encode_example(ex, vocab));
  return out;
}

struct TrainOutcome {
  TrainReport report;
  fs::path best;
};

TrainOutcome run_training(const PreparedData& data, const TrainConfig& base, const fs::path& out_dir,
                          std::ostream& out) {
  TrainConfig cfg = base;
  cfg.model.vocab_size = data.vocab.size();
  auto model = make_model(cfg.model);
  TrainOptions options;
  options.out_dir = out_dir;
  options.on_epoch = [&](const EpochRecord& r) {
    out << "epoch " << r.epoch << "  steps " << r.steps << "  loss " << std::fixed << std::setprecision(4)
        << r.train_loss << "  valid BLEU-1 " << std::setprecision(3) << r.valid_bleu1 << std::endl;
    out.unsetf(std::ios::floatfield);
  };
  out << "training " << cfg.model.variant.tag() << " on " << data.train.size() << " examples ("
      << model->params().scalar_count() << " parameters)" << std::endl;
  TrainReport report = train(*model, cfg, encode_all(data.train, data.vocab), encode_all(data.valid, data.vocab),
                             data.vocab, options);
  save_model(out_dir / "last", *model, data.vocab, {{"steps", report.step_losses.size()}});
  write_json(out_dir / "train_report.json", report.to_json());

  json manifest;
  manifest["config"] = cfg.effective();
  manifest["seed"] = cfg.seed;
  manifest["corpus_hash"] = data.manifest.value("corpus_hash", "");
  manifest["checkpoints"] = {{"best", report.best_checkpoint}, {"last", (out_dir / "last").string()}};
  manifest["reports"] = {{"train", (out_dir / "train_report.json").string()}};
  write_json(out_dir / "manifest.json", manifest);

  if (report.diverged) throw NumericFailure("training diverged: " + report.error);
  out << "best epoch " << report.best_epoch << " (valid BLEU-1 " << report.best_bleu1 << ")" << std::endl;
  return {report, report.best_checkpoint.empty() ? out_dir / "last" : fs::path(report.best_checkpoint)};
}

json evaluation_json(const EvaluationOutput& ev, bool with_buckets) {
  json j;
  j["metrics"] = ev.report.to_json();
  j["pairs"] = ev.report.pairs;
  if (with_buckets) {
    json buckets = json::array();
    for (const auto& b : ev.buckets) {
      buckets.push_back({{"history_min", b.lo}, {"history_max", b.hi}, {"pairs", b.pairs}, {"bleu1", b.bleu1}});
    }
    j["buckets"] = buckets;
  }
  return j;
}

void write_dump(const fs::path& path, const std::vector<TrainingExample>& examples, const EvaluationOutput& ev) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "post\thistory_size\tcandidate\treference\n";
  for (std::size_t i = 0; i < examples.size(); ++i) {
    out << examples[i].post.text << '\t' << ev.history_sizes[i] << '\t' << join(ev.items[i].candidate) << '\t'
        << join(ev.items[i].reference) << '\n';
  }
}

void print_buckets(std::ostream& out, const std::vector<eval::BucketResult>& buckets) {
  out << "history  pairs  BLEU-1\n";
  for (const auto& b : buckets) {
    std::ostringstream range;
    range << b.lo << "-" << b.hi;
    out << std::left << std::setw(9) << range.str() << std::right << std::setw(5) << b.pairs << "  " << std::fixed
        << std::setprecision(3) << b.bleu1 << "\n";
    out.unsetf(std::ios::floatfield);
  }
}

eval::EmbeddingTable embeddings_for(const std::string& path, const Vocabulary& vocab, std::uint64_t seed) {
  if (!path.empty()) {
    if (!fs::exists(path)) throw std::runtime_error("embedding file not found: " + path);
    return eval::EmbeddingTable::load(path);
  }
  return default_embeddings(vocab, seed);
}

// --- commands --------------------------------------------------------------

struct Options {
  std::uint64_t seed = 1;
  bool seed_given = false;
  // prepare / synth
  std::string input, out;
  std::size_t vocab_cap = 512, history_cap = 25;
  std::size_t users = 10, pairs = 12, persona = 2, shared_vocab = 60;
  // train / sweep
  std::string data, config, variant;
  std::vector<std::string> overrides;
  std::vector<std::string> variants;
  std::optional<std::size_t> epochs, max_steps;
  // evaluate / generate / chat
  std::string checkpoint, split = "test", report, dump, embeddings, post, history;
  std::size_t beam = 1, max_len = 30, bucket = 0;
};

int cmd_prepare(const Options& o, std::ostream& out) {
  if (!fs::exists(o.input)) throw std::runtime_error("input not found: " + o.input);
  auto records = corpus::ingest(o.input);
  prepare_data(records, o.out, o.vocab_cap, o.history_cap, file_hash(o.input), o.seed);
  PreparedData data = load_prepared(o.out);
  out << "users " << records.size() << "  train " << data.train.size() << "  valid " << data.valid.size()
      << "  test " << data.test.size() << "  vocab " << data.vocab.size() << "\n";
  return kOk;
}

int cmd_synth(const Options& o, std::ostream& out) {
  corpus::SynthOptions so;
  so.n_users = o.users;
  so.pairs_per_user = o.pairs;
  so.persona_tokens_per_user = o.persona;
  so.shared_vocab_size = o.shared_vocab;
  so.seed = o.seed_given ? o.seed : 7;
  auto records = corpus::synth_corpus(so);
  fs::path path(o.out);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream file(path);
  if (!file) throw std::runtime_error("cannot write " + o.out);
  corpus::write_tsv(file, records);
  out << "wrote " << records.size() << " users x " << o.pairs << " pairs to " << o.out << "\n";
  return kOk;
}

int cmd_train(const Options& o, std::ostream& out) {
  PreparedData data = load_prepared(o.data);
  TrainConfig cfg = build_config(o.config, o.overrides, o.variant, o.seed_given ? std::optional(o.seed) : std::nullopt,
                                 o.epochs, o.max_steps);
  run_training(data, cfg, o.out, out);
  return kOk;
}

int cmd_sweep(const Options& o, std::ostream& out) {
  PreparedData data = load_prepared(o.data);
  std::vector<std::string> variants = o.variants;
  if (variants.empty()) variants = {"full", "wo-g", "wo-d", "wo-pc", "wo-gen", "wo-cop", "fix", "seq2seqwa"};
  const auto idf = data.idf;
  const auto embeddings = embeddings_for(o.embeddings, data.vocab, o.seed);
  json table = json::object();
  for (const auto& v : variants) {
    TrainConfig cfg = build_config(o.config, o.overrides, v, o.seed_given ? std::optional(o.seed) : std::nullopt,
                                   o.epochs, o.max_steps);
    const fs::path dir = fs::path(o.out) / cfg.model.variant.tag();
    TrainOutcome trained = run_training(data, cfg, dir, out);
    LoadedModel loaded = load_model(trained.best);
    EvaluationOutput ev = evaluate_split(*loaded.model, loaded.vocab, data.split(o.split), idf, embeddings,
                                         {o.max_len, o.beam, false}, o.bucket);
    table[cfg.model.variant.tag()] = evaluation_json(ev, o.bucket > 0);
    write_dump(dir / (o.split + "_generations.tsv"), data.split(o.split), ev);
  }
  write_json(fs::path(o.out) / "sweep.json", table);
  out << std::left << std::setw(12) << "variant";
  const char* names[] = {"bleu1", "bleu2", "rougeL", "dist1", "dist2", "p_f1", "p_cover"};
  for (const char* n : names) out << std::right << std::setw(9) << n;
  out << "\n";
  for (const auto& [tag, row] : table.items()) {
    out << std::left << std::setw(12) << tag;
    for (const char* n : names) {
      out << std::right << std::setw(9) << std::fixed << std::setprecision(3) << row["metrics"][n].get<double>();
    }
    out << "\n";
    out.unsetf(std::ios::floatfield);
  }
  return kOk;
}

int cmd_evaluate(const Options& o, std::ostream& out) {
  LoadedModel loaded = load_model(o.checkpoint);
  PreparedData data = load_prepared(o.data);
  if (!(loaded.vocab == data.vocab)) throw std::runtime_error("checkpoint vocabulary differs from the data directory's");
  const auto embeddings = embeddings_for(o.embeddings, data.vocab, o.seed);
  const auto& examples = data.split(o.split);
  EvaluationOutput ev =
      evaluate_split(*loaded.model, loaded.vocab, examples, data.idf, embeddings, {o.max_len, o.beam, false}, o.bucket);

  json report = evaluation_json(ev, o.bucket > 0);
  report["split"] = o.split;
  report["checkpoint"] = o.checkpoint;
  report["variant"] = loaded.model->config().variant.tag();
  report["decode"] = {{"beam", o.beam}, {"max_len", o.max_len}};
  report["embeddings"] = o.embeddings.empty() ? "random:" + std::to_string(o.seed) : o.embeddings;
  write_json(o.report, report);
  const fs::path dump = o.dump.empty() ? fs::path(o.report).replace_extension(".generations.tsv") : fs::path(o.dump);
  write_dump(dump, examples, ev);

  out << ev.report.to_text();
  if (o.bucket > 0) print_buckets(out, ev.buckets);
  return kOk;
}

int cmd_generate(const Options& o, std::ostream& out) {
  LoadedModel loaded = load_model(o.checkpoint);
  std::vector<corpus::DialoguePair> history;
  if (!o.history.empty()) history = read_history_file(o.history);
  ModelInput input = encode_input(corpus::tokenize(o.post), history, loaded.vocab);
  if (input.post.empty()) throw std::invalid_argument("--post is empty after tokenization");
  DecodeResult r = decode(*loaded.model, input, {o.max_len, o.beam, false});
  out << join(loaded.vocab.decode(strip_eos(r.tokens))) << "\n";
  return kOk;
}

int cmd_chat(const Options& o, std::istream& in, std::ostream& out, std::ostream& err) {
  LoadedModel loaded = load_model(o.checkpoint);
  std::vector<corpus::DialoguePair> history = read_history_file(o.history);
  if (history.empty()) err << "warning: the history file has no responses; copying is disabled\n";
  ProfileCache cache;
  std::string line;
  out << "> " << std::flush;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line == ":quit") return kOk;
    const auto tokens = corpus::tokenize(line);
    if (tokens.empty()) {
      out << "> " << std::flush;
      continue;
    }
    ModelInput input = encode_input(tokens, history, loaded.vocab);
    DecodeResult r = greedy_decode(*loaded.model, input, o.max_len, &cache, /*keep_steps=*/true);
    out << join(loaded.vocab.decode(strip_eos(r.tokens))) << "\n";
    std::vector<double> attention;
    std::size_t offset = 0;
    for (std::size_t t = 0; t < r.steps.size(); ++t) {
      const StepInfo& s = r.steps[t];
      out << "  step " << t << "  p_g " << std::fixed << std::setprecision(4) << s.dist.p_gen << "  p_c "
          << s.dist.p_copy << "  " << loaded.vocab.token(r.tokens[t]) << "\n";
      out.unsetf(std::ios::floatfield);
      if (attention.empty()) attention.assign(s.memory_weights.size(), 0.0);
      for (std::size_t i = 0; i < s.memory_weights.size(); ++i) attention[i] += s.memory_weights[i];
      offset = s.memory_offset;
    }
    if (!attention.empty()) {
      std::vector<std::size_t> order(attention.size());
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return attention[a] > attention[b]; });
      out << "  attended history:\n";
      for (std::size_t k = 0; k < std::min<std::size_t>(3, order.size()); ++k) {
        const std::size_t i = order[k];
        out << "    " << std::fixed << std::setprecision(3) << attention[i] / static_cast<double>(r.steps.size())
            << "  " << history[offset + i].response.text << "\n";
        out.unsetf(std::ios::floatfield);
      }
    }
    out << "> " << std::flush;
  }
  return kOk;
}

}  // namespace

// ---------------------------------------------------------------------------

const std::vector<TrainingExample>& PreparedData::split(const std::string& name) const {
  if (name == "train") return train;
  if (name == "valid") return valid;
  if (name == "test") return test;
  throw std::invalid_argument("unknown split '" + name + "' (expected train, valid or test)");
}

std::string file_hash(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ull;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ull;
    }
  }
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << h;
  return out.str();
}

void prepare_data(const std::vector<corpus::UserRecord>& records, const fs::path& out, std::size_t vocab_cap,
                  std::size_t history_cap, const std::string& corpus_hash, std::uint64_t seed) {
  corpus::Split split = corpus::split_by_time(records, history_cap);
  if (split.train.empty()) throw corpus::CorpusError("no training examples after filtering");
  Vocabulary vocab = Vocabulary::build(split.train, vocab_cap);
  std::vector<eval::Sentence> documents;
  for (const auto& ex : split.train) {
    documents.push_back(ex.post.tokens);
    documents.push_back(ex.response.tokens);
  }
  eval::IdfTable idf = eval::IdfTable::build(documents);

  fs::create_directories(out);
  corpus::write_jsonl(out / "train.jsonl", split.train);
  corpus::write_jsonl(out / "valid.jsonl", split.valid);
  corpus::write_jsonl(out / "test.jsonl", split.test);
  vocab.save(out / "vocab.tsv");
  idf.save(out / "idf.tsv");
  json manifest = {{"corpus_hash", corpus_hash},
                   {"seed", seed},
                   {"vocab_cap", vocab_cap},
                   {"history_cap", history_cap},
                   {"users", records.size()},
                   {"counts", {{"train", split.train.size()}, {"valid", split.valid.size()}, {"test", split.test.size()}}},
                   {"vocab_size", vocab.size()},
                   {"files", {"train.jsonl", "valid.jsonl", "test.jsonl", "vocab.tsv", "idf.tsv"}}};
  write_json(out / "manifest.json", manifest);
}

PreparedData load_prepared(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw std::runtime_error("data directory not found: " + dir.string());
  PreparedData d;
  d.train = corpus::read_jsonl(dir / "train.jsonl");
  d.valid = corpus::read_jsonl(dir / "valid.jsonl");
  d.test = corpus::read_jsonl(dir / "test.jsonl");
  d.vocab = Vocabulary::load(dir / "vocab.tsv");
  d.idf = eval::IdfTable::load(dir / "idf.tsv");
  d.manifest = read_json(dir / "manifest.json");
  return d;
}

eval::EmbeddingTable default_embeddings(const Vocabulary& vocab, std::uint64_t seed, std::size_t dim) {
  std::vector<std::string> tokens;
  for (std::size_t i = Vocabulary::kNumSpecial; i < vocab.size(); ++i) tokens.push_back(vocab.token(static_cast<TokenId>(i)));
  return eval::EmbeddingTable::random(tokens, dim, seed);
}

EvaluationOutput evaluate_split(const ResponseModel& model, const Vocabulary& vocab,
                                const std::vector<TrainingExample>& examples, const eval::IdfTable& idf,
                                const eval::EmbeddingTable& embeddings, const DecodeOptions& options,
                                std::size_t bucket_width) {
  EvaluationOutput ev;
  ProfileCache cache;
  for (const auto& ex : examples) {
    ModelInput input = encode_input(ex.post.tokens, ex.history, vocab);
    DecodeResult r = decode(model, input, options, &cache);
    eval::EvalItem item;
    item.candidate = vocab.decode(strip_eos(r.tokens));
    item.reference = ex.response.tokens;
    for (const auto& p : ex.history) item.history_responses.push_back(p.response.tokens);
    ev.history_sizes.push_back(ex.history.size());
    ev.items.push_back(std::move(item));
  }
  ev.report = eval::evaluate(ev.items, idf, embeddings);
  if (bucket_width > 0) ev.buckets = eval::bucket_by_history(ev.items, bucket_width);
  return ev;
}

int run(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Personalized response generation from implicit user profiles"};
  app.name("dhap");
  app.require_subcommand(1);
  Options o;

  auto seed_flag = [&](CLI::App* sub) {
    sub->add_option("--seed", o.seed, "Random seed")->each([&](const std::string&) { o.seed_given = true; });
  };

  auto* prepare = app.add_subcommand("prepare", "Split a TSV corpus and build vocabulary and IDF tables");
  prepare->add_option("--input", o.input, "Six-column TSV corpus")->required();
  prepare->add_option("--out", o.out, "Output directory")->required();
  prepare->add_option("--vocab-cap", o.vocab_cap, "Vocabulary size including specials");
  prepare->add_option("--history-cap", o.history_cap, "History pairs kept per example");
  seed_flag(prepare);

  auto* synth = app.add_subcommand("synth", "Write a synthetic persona corpus as TSV");
  synth->add_option("--out", o.out, "Output TSV path")->required();
  synth->add_option("--users", o.users, "Number of users");
  synth->add_option("--pairs", o.pairs, "Pairs per user");
  synth->add_option("--persona", o.persona, "Persona tokens per user");
  synth->add_option("--shared-vocab", o.shared_vocab, "Shared word count");
  seed_flag(synth);

  auto* train_cmd = app.add_subcommand("train", "Train one model variant");
  auto* sweep = app.add_subcommand("sweep", "Train and evaluate several variants");
  for (auto* sub : {train_cmd, sweep}) {
    sub->add_option("--data", o.data, "Prepared data directory")->required();
    sub->add_option("--out", o.out, "Output directory")->required();
    sub->add_option("--config", o.config, "key = value config file");
    sub->add_option("--set", o.overrides, "Config override key=value (repeatable)");
    sub->add_option("--epochs", o.epochs, "Epoch count");
    sub->add_option("--max-steps", o.max_steps, "Optimizer step cap");
    seed_flag(sub);
  }
  train_cmd->add_option("--variant", o.variant, "full, wo-g, wo-d, wo-pc, wo-gen, wo-cop, fix[=p], seq2seqwa");
  sweep->add_option("--variants", o.variants, "Variants to run (default: all)")->delimiter(',');
  sweep->add_option("--split", o.split, "Split to evaluate");
  sweep->add_option("--embeddings", o.embeddings, "Embedding text file for similarity metrics");
  sweep->add_option("--bucket-by-history", o.bucket, "Report BLEU-1 per history-size range of this width");

  auto* evaluate = app.add_subcommand("evaluate", "Decode a split and compute all metrics");
  evaluate->add_option("--checkpoint", o.checkpoint, "Checkpoint directory")->required();
  evaluate->add_option("--data", o.data, "Prepared data directory")->required();
  evaluate->add_option("--split", o.split, "train, valid or test");
  evaluate->add_option("--report", o.report, "Report JSON path")->required();
  evaluate->add_option("--dump", o.dump, "Generation dump TSV path");
  evaluate->add_option("--embeddings", o.embeddings, "Embedding text file for similarity metrics");
  evaluate->add_option("--bucket-by-history", o.bucket, "Report BLEU-1 per history-size range of this width");
  seed_flag(evaluate);

  auto* generate = app.add_subcommand("generate", "Generate one response");
  generate->add_option("--checkpoint", o.checkpoint, "Checkpoint directory")->required();
  generate->add_option("--post", o.post, "Input post")->required();
  generate->add_option("--history", o.history, "History file (response or post<TAB>response per line)");
  seed_flag(generate);

  auto* chat = app.add_subcommand("chat", "Interactive generation against a fixed user history");
  chat->add_option("--checkpoint", o.checkpoint, "Checkpoint directory")->required();
  chat->add_option("--user-history", o.history, "History file (response or post<TAB>response per line)")->required();
  seed_flag(chat);

  for (auto* sub : {evaluate, generate, chat, sweep}) {
    sub->add_option("--max-len", o.max_len, "Maximum response length");
    if (sub != chat) sub->add_option("--beam", o.beam, "Beam width (1 = greedy)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*prepare) return cmd_prepare(o, out);
    if (*synth) return cmd_synth(o, out);
    if (*train_cmd) return cmd_train(o, out);
    if (*sweep) return cmd_sweep(o, out);
    if (*evaluate) return cmd_evaluate(o, out);
    if (*generate) return cmd_generate(o, out);
    if (*chat) return cmd_chat(o, in, out, err);
  } catch (const NumericFailure& e) {
    err << "error: " << e.what() << "\n";
    return kNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}

}  // namespace dhap::cli
