#pragma once

#include <vector>

#include "dhap/model.hpp"

namespace dhap {

struct DecodeOptions {
  std::size_t max_len = 30;
  std::size_t beam = 1;  // 1 = greedy
  bool keep_steps = false;
};

struct DecodeResult {
  std::vector<TokenId> tokens;  // includes the final EOS when one was produced
  double log_prob = 0.0;
  std::vector<StepInfo> steps;  // greedy with keep_steps only
};

/// Highest-probability id; ties go to the lowest id.
TokenId argmax(const std::vector<num::Real>& dist);

DecodeResult greedy_decode(const ResponseModel& model, const ModelInput& input, std::size_t max_len,
                           ProfileCache* cache = nullptr, bool keep_steps = false);

/// Beam search scored by sum(log p) / length; equal scores prefer the
/// lexicographically smaller token sequence.
DecodeResult beam_decode(const ResponseModel& model, const ModelInput& input, std::size_t beam, std::size_t max_len,
                         ProfileCache* cache = nullptr);

DecodeResult decode(const ResponseModel& model, const ModelInput& input, const DecodeOptions& options,
                    ProfileCache* cache = nullptr);

/// Drops the trailing EOS, if any.
std::vector<TokenId> strip_eos(std::vector<TokenId> tokens);

}  // namespace dhap
