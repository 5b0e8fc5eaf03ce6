#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dhap/corpus.hpp"
#include "dhap/eval.hpp"
#include "dhap/trainer.hpp"

namespace dhap::cli {

enum ExitCode { kOk = 0, kUsage = 1, kNumeric = 2 };

/// Output of `dhap prepare`.
struct PreparedData {
  std::vector<corpus::TrainingExample> train, valid, test;
  corpus::Vocabulary vocab;
  eval::IdfTable idf;
  nlohmann::json manifest;

  const std::vector<corpus::TrainingExample>& split(const std::string& name) const;
};

void prepare_data(const std::vector<corpus::UserRecord>& records, const std::filesystem::path& out,
                  std::size_t vocab_cap, std::size_t history_cap, const std::string& corpus_hash,
                  std::uint64_t seed);
PreparedData load_prepared(const std::filesystem::path& dir);

/// Hex FNV-1a digest of a file's bytes.
std::string file_hash(const std::filesystem::path& path);

struct EvaluationOutput {
  eval::MetricReport report;
  std::vector<eval::BucketResult> buckets;
  std::vector<eval::EvalItem> items;
  std::vector<std::size_t> history_sizes;
};

/// Decodes every example of a split and scores it.
EvaluationOutput evaluate_split(const ResponseModel& model, const corpus::Vocabulary& vocab,
                                const std::vector<corpus::TrainingExample>& examples, const eval::IdfTable& idf,
                                const eval::EmbeddingTable& embeddings, const DecodeOptions& decode,
                                std::size_t bucket_width);

/// Random unit-norm table over the vocabulary's ordinary tokens.
eval::EmbeddingTable default_embeddings(const corpus::Vocabulary& vocab, std::uint64_t seed, std::size_t dim = 64);

/// Entry point of the `dhap` tool. Returns the process exit code.
int run(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace dhap::cli
