#include "dhap/trainer.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "dhap/eval.hpp"
#include "dhap/numerics/checkpoint.hpp"

namespace dhap {

using corpus::Vocabulary;
using num::Real;

Var example_loss(Tape& tape, const ResponseModel& model, const ModelExample& example, double eta) {
  Var nll = model.negative_log_likelihood(tape, example);
  const double penalty = eta * static_cast<double>(example.target.size());
  return num::add(nll, tape.constant(num::Tensor({1, 1}, std::vector<Real>{static_cast<Real>(-penalty)})));
}

Adam::Adam(num::ParameterSet& params, double lr, double beta1, double beta2, double eps)
    : params_(params.trainable()), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (auto* p : params_) {
    m_.emplace_back(p->value.size(), 0.0);
    v_.emplace_back(p->value.size(), 0.0);
  }
}

void Adam::step() {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    num::Parameter& p = *params_[k];
    if (p.grad.size() != p.value.size()) continue;  // never touched by a backward pass
    auto w = p.value.values();
    auto g = p.grad.values();
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double gi = static_cast<double>(g[i]);
      m[i] = beta1_ * m[i] + (1 - beta1_) * gi;
      v[i] = beta2_ * v[i] + (1 - beta2_) * gi * gi;
      const double update = lr_ * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
      w[i] = static_cast<Real>(static_cast<double>(w[i]) - update);
    }
  }
}

double clip_gradients(num::ParameterSet& params, double max_norm) {
  double sq = 0;
  for (auto* p : params.trainable()) {
    for (Real g : p->grad.values()) sq += static_cast<double>(g) * static_cast<double>(g);
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0 && norm > max_norm) {
    const double s = max_norm / norm;
    for (auto* p : params.trainable()) {
      for (Real& g : p->grad.values()) g = static_cast<Real>(static_cast<double>(g) * s);
    }
  }
  return norm;
}

nlohmann::json TrainReport::to_json() const {
  nlohmann::json epochs_json = nlohmann::json::array();
  for (const auto& e : epochs) {
    epochs_json.push_back(
        {{"epoch", e.epoch}, {"steps", e.steps}, {"train_loss", e.train_loss}, {"valid_bleu1", e.valid_bleu1}});
  }
  return {{"epochs", epochs_json},   {"step_losses", step_losses},       {"best_epoch", best_epoch},
          {"best_bleu1", best_bleu1}, {"best_checkpoint", best_checkpoint}, {"diverged", diverged},
          {"error", error}};
}

double validation_bleu1(const ResponseModel& model, const std::vector<ModelExample>& examples,
                        const Vocabulary& vocab, std::size_t max_len) {
  std::vector<eval::Sentence> cands, refs;
  for (const auto& ex : examples) {
    DecodeResult r = greedy_decode(model, ex.input, max_len);
    cands.push_back(vocab.decode(strip_eos(r.tokens)));
    refs.push_back(vocab.decode(strip_eos(ex.target)));
  }
  if (cands.empty()) return 0.0;
  return eval::corpus_bleu(cands, refs, 1);
}

TrainReport train(ResponseModel& model, const TrainConfig& config, const std::vector<ModelExample>& train_set,
                  const std::vector<ModelExample>& valid_set, const Vocabulary& vocab, const TrainOptions& options) {
  if (train_set.empty()) throw std::invalid_argument("training set is empty");
  if (options.validate && valid_set.empty()) throw std::invalid_argument("validation set is empty");
  if (config.batch_size == 0) throw std::invalid_argument("batch size must be positive");

  TrainReport report;
  num::ParameterSet& params = model.params();
  Adam adam(params, config.learning_rate, config.adam_beta1, config.adam_beta2, config.adam_eps);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  bool have_best = false;
  std::size_t step = 0;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    if (config.shuffle) {
      num::Rng rng(num::mix_seed(config.seed, epoch));
      for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    }
    double epoch_loss = 0;
    std::size_t epoch_examples = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      if (config.max_steps && step >= config.max_steps) break;
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      const auto batch = static_cast<Real>(end - begin);
      params.zero_grad();
      double batch_loss = 0;
      for (std::size_t i = begin; i < end; ++i) {
        Tape tape(true);
        tape.set_training(true);
        tape.seed(num::mix_seed(num::mix_seed(config.seed, step), i - begin));
        Var loss = example_loss(tape, model, train_set[order[i]], config.eta);
        batch_loss += static_cast<double>(loss.scalar());
        tape.backward(loss, Real(1) / batch);
      }
      batch_loss /= static_cast<double>(end - begin);
      if (!std::isfinite(batch_loss)) {
        report.diverged = true;
        report.error = "non-finite loss at step " + std::to_string(step + 1);
        return report;
      }
      clip_gradients(params, config.clip_norm);
      adam.step();
      ++step;
      report.step_losses.push_back(batch_loss);
      epoch_loss += batch_loss * static_cast<double>(end - begin);
      epoch_examples += end - begin;
    }
    if (epoch_examples == 0) break;

    EpochRecord rec;
    rec.epoch = epoch;
    rec.steps = step;
    rec.train_loss = epoch_loss / static_cast<double>(epoch_examples);
    if (options.validate) rec.valid_bleu1 = validation_bleu1(model, valid_set, vocab, config.decode_max_len);
    report.epochs.push_back(rec);
    if (!have_best || rec.valid_bleu1 > report.best_bleu1) {
      have_best = true;
      report.best_epoch = epoch;
      report.best_bleu1 = rec.valid_bleu1;
      if (!options.out_dir.empty()) {
        const auto dir = options.out_dir / "best";
        save_model(dir, model, vocab, {{"epoch", epoch}, {"valid_bleu1", rec.valid_bleu1}});
        report.best_checkpoint = dir.string();
      }
    }
    if (options.on_epoch) options.on_epoch(rec);
    if (config.max_steps && step >= config.max_steps) break;
  }
  return report;
}

void save_model(const std::filesystem::path& dir, const ResponseModel& model, const Vocabulary& vocab,
                const nlohmann::json& extra) {
  nlohmann::json meta = {{"model", to_json(model.config())}, {"extra", extra}};
  num::save_checkpoint(dir, model.params(), meta);
  vocab.save(dir / "vocab.tsv");
}

LoadedModel load_model(const std::filesystem::path& dir) {
  LoadedModel out;
  out.metadata = num::read_checkpoint_metadata(dir);
  out.model = make_model(model_config_from_json(out.metadata.at("model")));
  num::load_checkpoint(dir, out.model->params());
  out.vocab = Vocabulary::load(dir / "vocab.tsv");
  if (out.vocab.size() != out.model->config().vocab_size) {
    throw std::runtime_error("checkpoint vocabulary has " + std::to_string(out.vocab.size()) +
                             " entries but the model expects " + std::to_string(out.model->config().vocab_size));
  }
  return out;
}

}  // namespace dhap
