#pragma once

#include <filesystem>

#include <nlohmann/json.hpp>

#include "dhap/numerics/parameter.hpp"

namespace dhap::num {

/// A checkpoint is a directory holding `manifest.json` (name, shape, dtype and
/// byte offset per parameter, plus caller metadata) and `params.bin`, the
/// little-endian concatenation of every parameter.
void save_checkpoint(const std::filesystem::path& dir, const ParameterSet& params, const nlohmann::json& metadata);

/// Reads only the manifest's metadata block.
nlohmann::json read_checkpoint_metadata(const std::filesystem::path& dir);

/// Loads values into an already-constructed set. Every parameter of the set
/// must appear with an identical shape and dtype.
void load_checkpoint(const std::filesystem::path& dir, ParameterSet& params);

}  // namespace dhap::num
