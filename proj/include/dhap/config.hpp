#pragma once

#include <cstdint>
#include <map>
#include <string>

#include <nlohmann/json.hpp>

namespace dhap {

/// Model variants: the full model, its ablations, and the attention seq2seq
/// baseline.
enum class VariantKind {
  kFull,
  kNoGeneralProfile,    // w/o G: e^G zeroed in the decoder, post encoder randomly initialized
  kNoDynamicProfile,    // w/o D: e^D_t zeroed
  kNoPersonalizedInit,  // w/o PC: post encoder randomly initialized only
  kNoGenerate,          // w/o GEN: p_g = 0
  kNoCopy,              // w/o COP: p_c = 0
  kFixedSwitch,         // FIX: (p_g, p_c) = (fixed, 1 - fixed)
  kSeq2Seq,             // Seq2SeqWA baseline
};

struct Variant {
  VariantKind kind = VariantKind::kFull;
  double fixed_p_gen = 0.8;

  /// Accepts full, wo-g, wo-d, wo-pc, wo-gen, wo-cop, fix, fix=<p>, seq2seqwa
  /// (underscores and the "w/o " spelling are accepted too).
  static Variant parse(const std::string& tag);
  std::string tag() const;

  bool zero_general() const { return kind == VariantKind::kNoGeneralProfile; }
  bool zero_dynamic() const { return kind == VariantKind::kNoDynamicProfile; }
  bool random_post_init() const {
    return kind == VariantKind::kNoGeneralProfile || kind == VariantKind::kNoPersonalizedInit;
  }
};

enum class Pooling { kSum, kMean };

struct ModelConfig {
  std::size_t vocab_size = 0;
  std::size_t d_emb = 16;
  std::size_t d_transformer = 16;
  std::size_t d_gru = 16;
  std::size_t heads = 2;
  std::size_t layers = 1;
  std::size_t d_ff = 0;         // 0 -> 4 * d_transformer
  std::size_t d_attention = 0;  // 0 -> d_gru
  std::size_t max_positions = 64;
  double dropout = 0.1;
  Pooling memory_pooling = Pooling::kSum;
  Variant variant;
  std::uint64_t seed = 1;

  std::size_t ffn_width() const { return d_ff ? d_ff : 4 * d_transformer; }
  std::size_t attention_width() const { return d_attention ? d_attention : d_gru; }
  /// Throws std::invalid_argument on inconsistent dimensions.
  void validate() const;
};

nlohmann::json to_json(const ModelConfig& c);
ModelConfig model_config_from_json(const nlohmann::json& j);

/// Training-side settings plus the model dimensions.
struct TrainConfig {
  ModelConfig model;
  double learning_rate = 1e-3;
  std::size_t batch_size = 8;
  std::size_t epochs = 10;
  std::size_t max_steps = 0;  // 0 = no step cap
  double eta = 0.1;
  std::size_t history_cap = 25;
  std::size_t vocab_cap = 512;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double clip_norm = 5.0;
  std::size_t decode_max_len = 30;
  std::uint64_t seed = 1;
  bool shuffle = true;

  /// Small dimensions for desk-scale runs.
  static TrainConfig desk();
  /// Full-size dimensions: 6-layer 256-d Transformer, 512-d GRUs, batch 256.
  static TrainConfig full_scale();

  /// Applies one `key = value` setting. Unknown keys throw.
  void set(const std::string& key, const std::string& value);
  std::map<std::string, std::string> effective() const;
};

/// Parses a flat `key = value` file (`#` starts a comment) on top of `base`.
TrainConfig load_train_config(const std::string& path, TrainConfig base = TrainConfig::desk());
TrainConfig parse_train_config(const std::string& text, TrainConfig base = TrainConfig::desk());

}  // namespace dhap
