#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "tsgcn/ad/tape.hpp"

namespace tsgcn::ad {

/// Moment buffers and hyperparameters of an Adam optimizer. Buffers are stored
/// in parameter order so they can be checkpointed next to the parameters.
struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t step = 0;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
};

class Adam {
 public:
  explicit Adam(std::vector<Var> params) : params_(std::move(params)) { reset(); }

  void reset() {
    state_ = AdamState{};
    for (const auto& p : params_) {
      state_.first_moment.emplace_back(p.numel(), 0.0);
      state_.second_moment.emplace_back(p.numel(), 0.0);
    }
  }

  /// One bias-corrected update from the gradients currently held by the
  /// parameters. Parameters without a gradient buffer are treated as g = 0.
  void step(double lr) {
    ++state_.step;
    const double t = static_cast<double>(state_.step);
    const double c1 = 1.0 - std::pow(state_.beta1, t);
    const double c2 = 1.0 - std::pow(state_.beta2, t);
    for (std::size_t k = 0; k < params_.size(); ++k) {
      Var& p = params_[k];
      auto& m = state_.first_moment[k];
      auto& v = state_.second_moment[k];
      auto& value = p.mutable_value().data;
      const bool has_grad = p.has_grad();
      for (std::size_t i = 0; i < value.size(); ++i) {
        const double g = has_grad ? p.grad()[i] : 0.0;
        m[i] = state_.beta1 * m[i] + (1.0 - state_.beta1) * g;
        v[i] = state_.beta2 * v[i] + (1.0 - state_.beta2) * g * g;
        const double m_hat = m[i] / c1;
        const double v_hat = v[i] / c2;
        value[i] -= lr * m_hat / (std::sqrt(v_hat) + state_.eps);
      }
    }
  }

  void zero_grad() {
    for (auto& p : params_) p.zero_grad();
  }

  const AdamState& state() const noexcept { return state_; }

  void set_state(AdamState state) {
    require(state.first_moment.size() == params_.size() &&
                state.second_moment.size() == params_.size(),
            "adam: state has the wrong number of slots");
    for (std::size_t k = 0; k < params_.size(); ++k)
      require(state.first_moment[k].size() == params_[k].numel() &&
                  state.second_moment[k].size() == params_[k].numel(),
              "adam: moment buffer size mismatch at slot " + std::to_string(k));
    state_ = std::move(state);
  }

  const std::vector<Var>& params() const noexcept { return params_; }

 private:
  std::vector<Var> params_;
  AdamState state_;
};

}  // namespace tsgcn::ad
