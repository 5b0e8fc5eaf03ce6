#include "dhap/numerics/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace dhap::num {

namespace {

double evaluate(const LossBuilder& build) {
  Tape tape(false);
  return static_cast<double>(build(tape).scalar());
}

}  // namespace

GradCheckReport grad_check(const LossBuilder& build, const std::vector<Parameter*>& params,
                           const GradCheckOptions& options) {
  for (Parameter* p : params) p->grad.fill(Real(0));
  {
    Tape tape(true);
    Var loss = build(tape);
    tape.backward(loss);
  }

  GradCheckReport report;
  report.tolerance = options.tolerance;
  Rng rng(options.sample_seed);
  for (Parameter* p : params) {
    GradCheckEntry entry;
    entry.name = p->name;
    std::vector<std::size_t> indices(p->value.size());
    std::iota(indices.begin(), indices.end(), std::size_t{0});
    if (options.max_entries_per_param != 0 && indices.size() > options.max_entries_per_param) {
      for (std::size_t i = 0; i < options.max_entries_per_param; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(indices.size() - i));
        std::swap(indices[i], indices[j]);
      }
      indices.resize(options.max_entries_per_param);
    }
    for (std::size_t k : indices) {
      const Real saved = p->value[k];
      p->value[k] = static_cast<Real>(saved + options.eps);
      const double up = evaluate(build);
      p->value[k] = static_cast<Real>(saved - options.eps);
      const double down = evaluate(build);
      p->value[k] = saved;
      const double numeric = (up - down) / (2.0 * options.eps);
      const double analytic = static_cast<double>(p->grad[k]);
      const double abs_err = std::abs(analytic - numeric);
      const double denom = std::max({std::abs(analytic), std::abs(numeric), options.abs_floor});
      entry.max_abs_error = std::max(entry.max_abs_error, abs_err);
      entry.max_rel_error = std::max(entry.max_rel_error, abs_err / denom);
      ++entry.checked;
    }
    report.max_rel_error = std::max(report.max_rel_error, entry.max_rel_error);
    report.entries.push_back(std::move(entry));
  }
  report.passed = report.max_rel_error <= options.tolerance;
  return report;
}

}  // namespace dhap::num
