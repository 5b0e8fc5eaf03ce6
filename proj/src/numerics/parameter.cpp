#include "dhap/numerics/parameter.hpp"

#include <cmath>
#include <stdexcept>

namespace dhap::num {

Parameter& ParameterSet::add(const std::string& name, Shape shape, Init init, Rng& rng, bool trainable) {
  if (by_name_.count(name)) throw std::invalid_argument("duplicate parameter name: " + name);
  auto p = std::make_unique<Parameter>();
  p->name = name;
  p->value = Tensor(shape);
  p->grad = Tensor(shape);
  p->trainable = trainable;
  switch (init) {
    case Init::kZeros:
      break;
    case Init::kOnes:
      p->value.fill(Real(1));
      break;
    case Init::kFanIn: {
      const double bound = 1.0 / std::sqrt(static_cast<double>(p->value.cols()));
      for (auto& v : p->value.values()) v = static_cast<Real>(rng.uniform(-bound, bound));
      break;
    }
    case Init::kEmbedding:
      for (auto& v : p->value.values()) v = static_cast<Real>(rng.uniform(-0.1, 0.1));
      break;
    case Init::kNormal:
      for (auto& v : p->value.values()) v = static_cast<Real>(rng.normal());
      break;
  }
  Parameter* raw = p.get();
  owned_.push_back(std::move(p));
  order_.push_back(raw);
  by_name_[name] = raw;
  return *raw;
}

Parameter& ParameterSet::get(const std::string& name) {
  if (auto* p = find(name)) return *p;
  throw std::out_of_range("unknown parameter: " + name);
}

const Parameter& ParameterSet::get(const std::string& name) const {
  if (auto* p = find(name)) return *p;
  throw std::out_of_range("unknown parameter: " + name);
}

Parameter* ParameterSet::find(const std::string& name) {
  auto it = by_name_.find(name);
  return it == by_name_.end() ? nullptr : it->second;
}

const Parameter* ParameterSet::find(const std::string& name) const {
  auto it = by_name_.find(name);
  return it == by_name_.end() ? nullptr : it->second;
}

std::vector<Parameter*> ParameterSet::trainable() const {
  std::vector<Parameter*> out;
  for (auto* p : order_)
    if (p->trainable) out.push_back(p);
  return out;
}

void ParameterSet::zero_grad() {
  for (auto* p : order_) p->grad.fill(Real(0));
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (auto* p : order_) n += p->value.size();
  return n;
}

}  // namespace dhap::num
