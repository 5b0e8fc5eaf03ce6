#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <unordered_map>
#include <vector>

#include "dhap/numerics/parameter.hpp"
#include "dhap/numerics/random.hpp"
#include "dhap/numerics/tensor.hpp"

namespace dhap::num {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; only valid while the
/// owning tape is alive.
struct Var {
  Tape* tape = nullptr;
  std::int32_t id = -1;

  bool valid() const { return tape != nullptr && id >= 0; }
  const Tensor& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  Real scalar() const;
};

/// Reverse-mode recorder. Every operation appends one node holding its output
/// and a closure that pushes the output gradient into its inputs. backward()
/// walks the nodes in reverse construction order, once each.
///
/// A tape built with record_gradients=false stores values only (inference).
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::int32_t self)>;

  explicit Tape(bool record_gradients = true) : recording_(record_gradients) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return recording_; }

  /// Dropout is active only in training mode.
  bool training() const { return training_; }
  void set_training(bool on) { training_ = on; }
  Rng& rng() { return rng_; }
  void seed(std::uint64_t s) { rng_ = Rng(s); }

  Var constant(Tensor value);
  /// Leaf bound to a parameter. Repeated calls for the same parameter return
  /// the same node so its gradient is accumulated once.
  Var param(Parameter& p);

  /// Appends a node computed from `inputs`. The closure is kept only when at
  /// least one input carries a gradient.
  Var record(Tensor value, std::initializer_list<Var> inputs, BackwardFn fn);
  Var record(Tensor value, const std::vector<Var>& inputs, BackwardFn fn);

  const Tensor& value(std::int32_t id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  bool requires_grad(std::int32_t id) const { return nodes_[static_cast<std::size_t>(id)].requires_grad; }
  /// Gradient buffer of a node, allocated as zeros on first access.
  Tensor& grad(std::int32_t id);

  /// Seeds d(loss)/d(loss) = seed and propagates. Parameter gradients are
  /// added to Parameter::grad (so several tapes can accumulate a batch).
  void backward(Var loss, Real seed = Real(1));

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    BackwardFn backward;
    Parameter* param = nullptr;
    bool requires_grad = false;
  };

  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, std::int32_t> param_nodes_;
  bool recording_;
  bool training_ = false;
  Rng rng_;
};

}  // namespace dhap::num
