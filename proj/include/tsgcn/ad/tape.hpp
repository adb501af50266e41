#pragma once

#include <algorithm>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "tsgcn/ad/tensor.hpp"

namespace tsgcn::ad {

struct Node {
  Tensor value;
  std::vector<double> grad;  // empty until first accumulation
  bool requires_grad = false;

  std::vector<double>& ensure_grad() {
    if (grad.size() != value.numel()) grad.assign(value.numel(), 0.0);
    return grad;
  }
};

/// Shared handle to a tensor that may take part in differentiation.
/// Copies alias the same node, so parameters are held by value everywhere.
class Var {
 public:
  Var() = default;

  static Var leaf(Tensor value, bool requires_grad) {
    Var v;
    v.node_ = std::make_shared<Node>();
    v.node_->value = std::move(value);
    v.node_->requires_grad = requires_grad;
    return v;
  }
  static Var constant(Tensor value) { return leaf(std::move(value), false); }

  bool defined() const noexcept { return static_cast<bool>(node_); }
  const Tensor& value() const { return node_->value; }
  /// Direct write access, for optimizers and checkpoint loading. Never call on a
  /// node that a live tape still references.
  Tensor& mutable_value() { return node_->value; }
  const Shape& shape() const { return node_->value.shape; }
  std::size_t numel() const { return node_->value.numel(); }

  bool requires_grad() const { return node_ && node_->requires_grad; }
  bool has_grad() const { return !node_->grad.empty(); }
  std::span<const double> grad() const { return node_->grad; }
  std::span<double> mutable_grad() { return node_->ensure_grad(); }
  void zero_grad() { std::fill(node_->grad.begin(), node_->grad.end(), 0.0); }

  /// Gradient buffer of this var if it participates in differentiation, else nullptr.
  std::vector<double>* grad_sink() const {
    return node_->requires_grad ? &node_->ensure_grad() : nullptr;
  }

  const Node* node() const noexcept { return node_.get(); }

 private:
  friend class Tape;
  std::shared_ptr<Node> node_;
};

/// Records differentiable operations in execution order; `backward` replays the
/// recorded rules in reverse and accumulates into leaf gradients. A tape is
/// single-use: after one backward pass it is consumed.
class Tape {
 public:
  enum class Mode { record, inference };

  /// A rule receives the gradient of its output and the output value itself,
  /// so ops such as softmax need not keep a second copy of their result.
  using BackwardRule = std::function<void(std::span<const double> grad_out, const Tensor& out)>;

  explicit Tape(Mode mode = Mode::record) : mode_(mode) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const noexcept { return mode_ == Mode::record; }
  std::size_t size() const noexcept { return records_.size(); }
  bool consumed() const noexcept { return consumed_; }

  /// Wraps an op result. `inputs` decide whether the result is differentiable;
  /// `make_rule` is only invoked when a rule actually has to be stored.
  template <typename MakeRule>
  Var emit(const char* op, Tensor value, std::initializer_list<const Var*> inputs,
           MakeRule&& make_rule) {
    if (!value.all_finite())
      throw NumericError(std::string("non-finite value produced by ") + op);
    const bool needs_grad =
        recording() && std::any_of(inputs.begin(), inputs.end(),
                                   [](const Var* v) { return v->requires_grad(); });
    return finish(std::move(value), needs_grad, [&] { return wrap(make_rule()); });
  }

  /// Same as `emit` for ops with a variable number of inputs.
  template <typename MakeRule>
  Var emit_many(const char* op, Tensor value, const std::vector<Var>& inputs,
                MakeRule&& make_rule) {
    if (!value.all_finite())
      throw NumericError(std::string("non-finite value produced by ") + op);
    const bool needs_grad =
        recording() &&
        std::any_of(inputs.begin(), inputs.end(), [](const Var& v) { return v.requires_grad(); });
    return finish(std::move(value), needs_grad, [&] { return wrap(make_rule()); });
  }

  void backward(const Var& loss) {
    if (consumed_) throw ContractError("backward called twice on the same tape");
    require(loss.defined() && loss.numel() == 1,
            "backward needs a scalar loss, got shape " +
                (loss.defined() ? shape_string(loss.shape()) : std::string("<undefined>")));
    const auto it = std::find_if(records_.rbegin(), records_.rend(),
                                 [&](const Record& r) { return r.output == loss.node_; });
    require(it != records_.rend(), "loss was not produced through this tape");

    consumed_ = true;
    loss.node_->ensure_grad()[0] += 1.0;
    for (auto r = records_.rbegin(); r != records_.rend(); ++r) {
      if (!r->output->grad.empty()) r->backward(r->output->grad, r->output->value);
      // Intermediate results are never leaves, so their storage can go now.
      r->backward = nullptr;
      std::vector<double>().swap(r->output->grad);
      r->output.reset();
    }
    records_.clear();
  }

 private:
  struct Record {
    std::shared_ptr<Node> output;
    BackwardRule backward;
  };

  template <typename Rule>
  static BackwardRule wrap(Rule rule) {
    if constexpr (std::is_invocable_v<Rule&, std::span<const double>, const Tensor&>)
      return BackwardRule(std::move(rule));
    else
      return [rule = std::move(rule)](std::span<const double> g, const Tensor&) mutable { rule(g); };
  }

  template <typename Factory>
  Var finish(Tensor value, bool needs_grad, Factory&& factory) {
    if (needs_grad && consumed_) throw ContractError("recording onto a consumed tape");
    Var out = Var::leaf(std::move(value), needs_grad);
    if (needs_grad) records_.push_back({out.node_, factory()});
    return out;
  }

  Mode mode_;
  bool consumed_ = false;
  std::vector<Record> records_;
};

}  // namespace tsgcn::ad
