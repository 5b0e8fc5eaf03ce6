#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dhap/model.hpp"
#include "dhap/search.hpp"

namespace dhap {

/// -sum_t log p(y_t | y_<t, X, H) - eta * L_Y. The length term is constant
/// for a fixed target, so it shifts the loss without changing any gradient.
Var example_loss(Tape& tape, const ResponseModel& model, const ModelExample& example, double eta);

class Adam {
 public:
  Adam(num::ParameterSet& params, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
  /// Updates trainable parameters from their accumulated gradients.
  void step();
  std::size_t steps() const { return t_; }

 private:
  std::vector<num::Parameter*> params_;
  std::vector<std::vector<double>> m_, v_;
  double lr_, beta1_, beta2_, eps_;
  std::size_t t_ = 0;
};

/// Rescales all trainable gradients so their global L2 norm is at most
/// max_norm. Returns the norm before clipping.
double clip_gradients(num::ParameterSet& params, double max_norm);

struct EpochRecord {
  std::size_t epoch = 0;
  std::size_t steps = 0;  // optimizer steps completed at the end of the epoch
  double train_loss = 0;  // mean per-example loss over the epoch
  double valid_bleu1 = 0;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  std::vector<double> step_losses;  // mean batch loss per optimizer step
  std::size_t best_epoch = 0;
  double best_bleu1 = 0;
  std::string best_checkpoint;
  bool diverged = false;
  std::string error;

  nlohmann::json to_json() const;
};

struct TrainOptions {
  std::filesystem::path out_dir;  // empty: no checkpoints
  bool validate = true;
  std::function<void(const EpochRecord&)> on_epoch;
};

/// Greedy-decodes every example and scores corpus BLEU-1 against its target.
double validation_bleu1(const ResponseModel& model, const std::vector<ModelExample>& examples,
                        const corpus::Vocabulary& vocab, std::size_t max_len);

/// Mean teacher-forced loss, shuffled batches, Adam with global-norm clipping.
/// After each epoch the validation set is greedy-decoded and the checkpoint
/// with the best BLEU-1 so far is kept under out_dir/best.
TrainReport train(ResponseModel& model, const TrainConfig& config, const std::vector<ModelExample>& train_set,
                  const std::vector<ModelExample>& valid_set, const corpus::Vocabulary& vocab,
                  const TrainOptions& options = {});

void save_model(const std::filesystem::path& dir, const ResponseModel& model, const corpus::Vocabulary& vocab,
                const nlohmann::json& extra = nlohmann::json::object());

struct LoadedModel {
  std::unique_ptr<ResponseModel> model;
  corpus::Vocabulary vocab;
  nlohmann::json metadata;
};
LoadedModel load_model(const std::filesystem::path& dir);

}  // namespace dhap
