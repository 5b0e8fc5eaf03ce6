#pragma once

#include <functional>
#include <string>
#include <vector>

#include "dhap/numerics/tape.hpp"

namespace dhap::num {

struct GradCheckEntry {
  std::string name;
  std::size_t checked = 0;
  double max_rel_error = 0;
  double max_abs_error = 0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_rel_error = 0;
  double tolerance = 0;
  bool passed = false;
};

struct GradCheckOptions {
  double eps = 1e-4;
  double tolerance = 1e-6;
  /// Denominator floor for the relative error |a - n| / max(|a|, |n|, floor).
  double abs_floor = 1e-6;
  /// 0 checks every entry; otherwise a seeded sample of this many per tensor.
  std::size_t max_entries_per_param = 0;
  std::uint64_t sample_seed = 0;
};

/// Builds a fresh scalar loss on the given tape. Must be deterministic.
using LossBuilder = std::function<Var(Tape&)>;

/// Compares reverse-mode gradients against central differences for every
/// entry of every listed parameter. Parameter gradients are overwritten.
GradCheckReport grad_check(const LossBuilder& build, const std::vector<Parameter*>& params,
                           const GradCheckOptions& options = {});

}  // namespace dhap::num
