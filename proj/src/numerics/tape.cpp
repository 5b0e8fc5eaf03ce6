#include "dhap/numerics/tape.hpp"

#include <stdexcept>

namespace dhap::num {

const Tensor& Var::value() const { return tape->value(id); }

Real Var::scalar() const {
  const Tensor& v = value();
  if (v.size() != 1) throw ShapeError("scalar() on tensor of shape " + shape_string(v.shape()));
  return v[0];
}

Var Tape::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return {this, static_cast<std::int32_t>(nodes_.size() - 1)};
}

Var Tape::param(Parameter& p) {
  if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) return {this, it->second};
  Node n;
  n.value = p.value;
  n.param = &p;
  n.requires_grad = recording_ && p.trainable;
  nodes_.push_back(std::move(n));
  auto id = static_cast<std::int32_t>(nodes_.size() - 1);
  param_nodes_[&p] = id;
  return {this, id};
}

Var Tape::record(Tensor value, std::initializer_list<Var> inputs, BackwardFn fn) {
  bool needs = false;
  if (recording_) {
    for (const Var& v : inputs) needs = needs || requires_grad(v.id);
  }
  Node n;
  n.value = std::move(value);
  n.requires_grad = needs;
  if (needs) n.backward = std::move(fn);
  nodes_.push_back(std::move(n));
  return {this, static_cast<std::int32_t>(nodes_.size() - 1)};
}

Var Tape::record(Tensor value, const std::vector<Var>& inputs, BackwardFn fn) {
  bool needs = false;
  if (recording_) {
    for (const Var& v : inputs) needs = needs || requires_grad(v.id);
  }
  Node n;
  n.value = std::move(value);
  n.requires_grad = needs;
  if (needs) n.backward = std::move(fn);
  nodes_.push_back(std::move(n));
  return {this, static_cast<std::int32_t>(nodes_.size() - 1)};
}

Tensor& Tape::grad(std::int32_t id) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  if (n.grad.size() != n.value.size()) n.grad = Tensor(n.value.shape());
  return n.grad;
}

void Tape::backward(Var loss, Real seed) {
  if (loss.tape != this) throw std::invalid_argument("backward: variable belongs to another tape");
  if (value(loss.id).size() != 1) {
    throw ShapeError("backward requires a scalar loss, got " + shape_string(value(loss.id).shape()));
  }
  if (!recording_) throw std::logic_error("backward on a tape that does not record gradients");
  grad(loss.id)[0] += seed;
  for (std::int32_t i = loss.id; i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (!n.requires_grad || n.grad.empty()) continue;
    if (n.backward) n.backward(*this, i);
    if (n.param != nullptr) {
      Tensor& dst = n.param->grad;
      if (dst.size() != n.grad.size()) dst = Tensor(n.param->value.shape());
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += n.grad[k];
    }
  }
}

}  // namespace dhap::num
