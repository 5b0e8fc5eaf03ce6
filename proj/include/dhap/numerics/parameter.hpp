#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "dhap/numerics/random.hpp"
#include "dhap/numerics/tensor.hpp"

namespace dhap::num {

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  bool trainable = true;
};

enum class Init {
  kZeros,
  kOnes,
  kFanIn,      // U[-1/sqrt(cols), 1/sqrt(cols)]
  kEmbedding,  // U[-0.1, 0.1]
  kNormal,     // N(0, 1)
};

/// Owns the parameters of one model. Addresses are stable for the lifetime of
/// the set; names are unique.
class ParameterSet {
 public:
  Parameter& add(const std::string& name, Shape shape, Init init, Rng& rng, bool trainable = true);

  Parameter& get(const std::string& name);
  const Parameter& get(const std::string& name) const;
  Parameter* find(const std::string& name);
  const Parameter* find(const std::string& name) const;

  const std::vector<Parameter*>& all() const { return order_; }
  std::vector<Parameter*> trainable() const;

  void zero_grad();
  std::size_t scalar_count() const;

 private:
  std::vector<std::unique_ptr<Parameter>> owned_;
  std::vector<Parameter*> order_;
  std::map<std::string, Parameter*> by_name_;
};

}  // namespace dhap::num
