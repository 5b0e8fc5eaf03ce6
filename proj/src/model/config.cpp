#include "dhap/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dhap {

namespace {

std::string normalize_tag(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s.compare(i, 4, "w/o ") == 0) {
      out += "wo-";
      i += 3;
    } else if (s[i] == '_' || s[i] == ' ') {
      out += '-';
    } else {
      out += s[i];
    }
  }
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::size_t to_size(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long long x = std::stoll(v, &pos);
    if (pos != v.size() || x < 0) throw std::invalid_argument(v);
    return static_cast<std::size_t>(x);
  } catch (const std::exception&) {
    throw std::invalid_argument("config key '" + key + "' expects a non-negative integer, got '" + v + "'");
  }
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw std::invalid_argument("config key '" + key + "' expects a number, got '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("config key '" + key + "' expects a boolean, got '" + v + "'");
}

template <typename T>
std::string str(T v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

Variant Variant::parse(const std::string& raw) {
  const std::string tag = normalize_tag(raw);
  Variant v;
  if (tag == "full" || tag == "dhap") {
    v.kind = VariantKind::kFull;
  } else if (tag == "wo-g") {
    v.kind = VariantKind::kNoGeneralProfile;
  } else if (tag == "wo-d") {
    v.kind = VariantKind::kNoDynamicProfile;
  } else if (tag == "wo-pc") {
    v.kind = VariantKind::kNoPersonalizedInit;
  } else if (tag == "wo-gen") {
    v.kind = VariantKind::kNoGenerate;
  } else if (tag == "wo-cop") {
    v.kind = VariantKind::kNoCopy;
  } else if (tag == "fix" || tag.rfind("fix=", 0) == 0) {
    v.kind = VariantKind::kFixedSwitch;
    if (tag.size() > 4) v.fixed_p_gen = to_double("variant", tag.substr(4));
    if (v.fixed_p_gen < 0.0 || v.fixed_p_gen > 1.0) {
      throw std::invalid_argument("fixed general-decoding probability must lie in [0, 1]");
    }
  } else if (tag == "seq2seqwa" || tag == "seq2seq") {
    v.kind = VariantKind::kSeq2Seq;
  } else {
    throw std::invalid_argument("unknown variant tag: " + raw);
  }
  return v;
}

std::string Variant::tag() const {
  switch (kind) {
    case VariantKind::kFull: return "full";
    case VariantKind::kNoGeneralProfile: return "wo-g";
    case VariantKind::kNoDynamicProfile: return "wo-d";
    case VariantKind::kNoPersonalizedInit: return "wo-pc";
    case VariantKind::kNoGenerate: return "wo-gen";
    case VariantKind::kNoCopy: return "wo-cop";
    case VariantKind::kFixedSwitch: return fixed_p_gen == 0.8 ? "fix" : "fix=" + str(fixed_p_gen);
    case VariantKind::kSeq2Seq: return "seq2seqwa";
  }
  return "full";
}

void ModelConfig::validate() const {
  if (vocab_size <= 6) throw std::invalid_argument("vocab_size must exceed the special tokens");
  if (!d_emb || !d_transformer || !d_gru || !heads || !layers || !max_positions) {
    throw std::invalid_argument("model dimensions must be positive");
  }
  if (d_transformer % heads != 0) {
    throw std::invalid_argument("d_transformer (" + str(d_transformer) + ") is not divisible by heads (" + str(heads) + ")");
  }
  if (dropout < 0.0 || dropout >= 1.0) throw std::invalid_argument("dropout must lie in [0, 1)");
}

nlohmann::json to_json(const ModelConfig& c) {
  return {{"vocab_size", c.vocab_size},
          {"d_emb", c.d_emb},
          {"d_transformer", c.d_transformer},
          {"d_gru", c.d_gru},
          {"heads", c.heads},
          {"layers", c.layers},
          {"d_ff", c.d_ff},
          {"d_attention", c.d_attention},
          {"max_positions", c.max_positions},
          {"dropout", c.dropout},
          {"memory_pooling", c.memory_pooling == Pooling::kSum ? "sum" : "mean"},
          {"variant", c.variant.tag()},
          {"seed", c.seed}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.vocab_size = j.at("vocab_size").get<std::size_t>();
  c.d_emb = j.at("d_emb").get<std::size_t>();
  c.d_transformer = j.at("d_transformer").get<std::size_t>();
  c.d_gru = j.at("d_gru").get<std::size_t>();
  c.heads = j.at("heads").get<std::size_t>();
  c.layers = j.at("layers").get<std::size_t>();
  c.d_ff = j.at("d_ff").get<std::size_t>();
  c.d_attention = j.at("d_attention").get<std::size_t>();
  c.max_positions = j.at("max_positions").get<std::size_t>();
  c.dropout = j.at("dropout").get<double>();
  c.memory_pooling = j.at("memory_pooling").get<std::string>() == "mean" ? Pooling::kMean : Pooling::kSum;
  c.variant = Variant::parse(j.at("variant").get<std::string>());
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

TrainConfig TrainConfig::desk() { return TrainConfig{}; }

TrainConfig TrainConfig::full_scale() {
  TrainConfig c;
  c.model.d_emb = 256;
  c.model.d_transformer = 256;
  c.model.heads = 8;
  c.model.layers = 6;
  c.model.d_gru = 512;
  c.model.max_positions = 512;
  c.batch_size = 256;
  c.epochs = 10;
  c.vocab_cap = 40000;
  c.history_cap = 25;
  c.learning_rate = 1e-3;
  return c;
}

void TrainConfig::set(const std::string& key, const std::string& value) {
  if (key == "learning_rate" || key == "lr") learning_rate = to_double(key, value);
  else if (key == "batch_size") batch_size = to_size(key, value);
  else if (key == "epochs") epochs = to_size(key, value);
  else if (key == "max_steps") max_steps = to_size(key, value);
  else if (key == "eta") eta = to_double(key, value);
  else if (key == "history_cap") history_cap = to_size(key, value);
  else if (key == "vocab_cap") vocab_cap = to_size(key, value);
  else if (key == "adam_beta1") adam_beta1 = to_double(key, value);
  else if (key == "adam_beta2") adam_beta2 = to_double(key, value);
  else if (key == "adam_eps") adam_eps = to_double(key, value);
  else if (key == "clip_norm") clip_norm = to_double(key, value);
  else if (key == "decode_max_len") decode_max_len = to_size(key, value);
  else if (key == "seed") { seed = to_size(key, value); model.seed = seed; }
  else if (key == "shuffle") shuffle = to_bool(key, value);
  else if (key == "d_emb") model.d_emb = to_size(key, value);
  else if (key == "d_transformer" || key == "d_t") model.d_transformer = to_size(key, value);
  else if (key == "d_gru" || key == "d_g") model.d_gru = to_size(key, value);
  else if (key == "heads") model.heads = to_size(key, value);
  else if (key == "layers") model.layers = to_size(key, value);
  else if (key == "d_ff") model.d_ff = to_size(key, value);
  else if (key == "d_attention") model.d_attention = to_size(key, value);
  else if (key == "max_positions") model.max_positions = to_size(key, value);
  else if (key == "dropout") model.dropout = to_double(key, value);
  else if (key == "memory_pooling") {
    if (value == "sum") model.memory_pooling = Pooling::kSum;
    else if (value == "mean") model.memory_pooling = Pooling::kMean;
    else throw std::invalid_argument("memory_pooling must be sum or mean");
  } else if (key == "variant") model.variant = Variant::parse(value);
  else if (key == "preset") {
    if (value == "full") *this = full_scale();
    else if (value == "desk") *this = desk();
    else throw std::invalid_argument("preset must be desk or full");
  } else {
    throw std::invalid_argument("unknown config key: " + key);
  }
}

std::map<std::string, std::string> TrainConfig::effective() const {
  return {{"learning_rate", str(learning_rate)},
          {"batch_size", str(batch_size)},
          {"epochs", str(epochs)},
          {"max_steps", str(max_steps)},
          {"eta", str(eta)},
          {"history_cap", str(history_cap)},
          {"vocab_cap", str(vocab_cap)},
          {"adam_beta1", str(adam_beta1)},
          {"adam_beta2", str(adam_beta2)},
          {"adam_eps", str(adam_eps)},
          {"clip_norm", str(clip_norm)},
          {"decode_max_len", str(decode_max_len)},
          {"seed", str(seed)},
          {"shuffle", shuffle ? "true" : "false"},
          {"d_emb", str(model.d_emb)},
          {"d_transformer", str(model.d_transformer)},
          {"d_gru", str(model.d_gru)},
          {"heads", str(model.heads)},
          {"layers", str(model.layers)},
          {"d_ff", str(model.d_ff)},
          {"d_attention", str(model.d_attention)},
          {"max_positions", str(model.max_positions)},
          {"dropout", str(model.dropout)},
          {"memory_pooling", model.memory_pooling == Pooling::kSum ? "sum" : "mean"},
          {"variant", model.variant.tag()}};
}

TrainConfig parse_train_config(const std::string& text, TrainConfig base) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + str(line_no) + ": expected 'key = value'");
    }
    base.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return base;
}

TrainConfig load_train_config(const std::string& path, TrainConfig base) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_train_config(ss.str(), std::move(base));
}

}  // namespace dhap
