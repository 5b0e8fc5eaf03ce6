#include "dhap/numerics/checkpoint.hpp"

#include <bit>
#include <fstream>
#include <stdexcept>

namespace dhap::num {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr const char* kDtype = sizeof(Real) == 8 ? "f64" : "f32";

nlohmann::json read_manifest(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw std::runtime_error("cannot open checkpoint manifest in " + dir.string());
  return nlohmann::json::parse(in);
}

}  // namespace

void save_checkpoint(const std::filesystem::path& dir, const ParameterSet& params, const nlohmann::json& metadata) {
  std::filesystem::create_directories(dir);
  nlohmann::json manifest;
  manifest["format"] = "dhap-checkpoint-1";
  manifest["metadata"] = metadata;
  nlohmann::json entries = nlohmann::json::array();
  std::ofstream blob(dir / "params.bin", std::ios::binary | std::ios::trunc);
  if (!blob) throw std::runtime_error("cannot write " + (dir / "params.bin").string());
  std::uint64_t offset = 0;
  for (const Parameter* p : params.all()) {
    const auto bytes = p->value.size() * sizeof(Real);
    entries.push_back({{"name", p->name},
                       {"shape", p->value.shape()},
                       {"dtype", kDtype},
                       {"offset", offset},
                       {"trainable", p->trainable}});
    blob.write(reinterpret_cast<const char*>(p->value.data()), static_cast<std::streamsize>(bytes));
    offset += bytes;
  }
  manifest["parameters"] = std::move(entries);
  manifest["total_bytes"] = offset;
  std::ofstream out(dir / "manifest.json", std::ios::trunc);
  out << manifest.dump(2) << '\n';
}

nlohmann::json read_checkpoint_metadata(const std::filesystem::path& dir) { return read_manifest(dir).at("metadata"); }

void load_checkpoint(const std::filesystem::path& dir, ParameterSet& params) {
  const nlohmann::json manifest = read_manifest(dir);
  std::ifstream blob(dir / "params.bin", std::ios::binary);
  if (!blob) throw std::runtime_error("cannot open " + (dir / "params.bin").string());
  std::map<std::string, const nlohmann::json*> by_name;
  for (const auto& e : manifest.at("parameters")) by_name[e.at("name").get<std::string>()] = &e;
  for (Parameter* p : params.all()) {
    auto it = by_name.find(p->name);
    if (it == by_name.end()) throw std::runtime_error("checkpoint lacks parameter " + p->name);
    const nlohmann::json& e = *it->second;
    if (e.at("dtype").get<std::string>() != kDtype) {
      throw std::runtime_error("checkpoint dtype " + e.at("dtype").get<std::string>() + " differs from build dtype");
    }
    const auto shape = e.at("shape").get<Shape>();
    if (shape != p->value.shape()) {
      throw std::runtime_error("checkpoint shape " + shape_string(shape) + " for " + p->name + " differs from " +
                               shape_string(p->value.shape()));
    }
    blob.seekg(static_cast<std::streamoff>(e.at("offset").get<std::uint64_t>()));
    blob.read(reinterpret_cast<char*>(p->value.data()), static_cast<std::streamsize>(p->value.size() * sizeof(Real)));
    if (!blob) throw std::runtime_error("truncated checkpoint blob at " + p->name);
  }
}

}  // namespace dhap::num
