#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "tsgcn/ad/ops.hpp"
#include "tsgcn/util/rng.hpp"

namespace tsgcn::nn {

/// Every learnable tensor and batch-norm buffer of a model, by name, in
/// creation order. Parameter handles alias the stored nodes.
class ParamStore {
 public:
  ad::Var& add(const std::string& name, ad::Tensor value) {
    require(!index_.count(name), "duplicate parameter name " + name);
    index_[name] = params_.size();
    params_.emplace_back(name, ad::Var::leaf(std::move(value), true));
    return params_.back().second;
  }

  ad::BatchNormStats& add_stats(const std::string& name, std::size_t channels) {
    require(!stats_.count(name), "duplicate batch-norm name " + name);
    stats_order_.push_back(name);
    return stats_.emplace(name, ad::BatchNormStats(channels)).first->second;
  }

  const ad::Var& param(const std::string& name) const {
    auto it = index_.find(name);
    require(it != index_.end(), "unknown parameter " + name);
    return params_[it->second].second;
  }
  ad::Var& param(const std::string& name) {
    auto it = index_.find(name);
    require(it != index_.end(), "unknown parameter " + name);
    return params_[it->second].second;
  }
  bool has(const std::string& name) const { return index_.count(name) != 0; }

  ad::BatchNormStats& stats(const std::string& name) {
    auto it = stats_.find(name);
    require(it != stats_.end(), "unknown batch-norm layer " + name);
    return it->second;
  }
  const ad::BatchNormStats& stats(const std::string& name) const {
    auto it = stats_.find(name);
    require(it != stats_.end(), "unknown batch-norm layer " + name);
    return it->second;
  }

  const std::vector<std::pair<std::string, ad::Var>>& named_params() const { return params_; }
  const std::vector<std::string>& stats_names() const { return stats_order_; }

  std::vector<ad::Var> vars() const {
    std::vector<ad::Var> out;
    for (const auto& [name, v] : params_) out.push_back(v);
    return out;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& [name, v] : params_) n += v.numel();
    return n;
  }

  void zero_grad() {
    for (auto& [name, v] : params_) v.zero_grad();
  }

  /// Deep copy of all values and statistics.
  struct Snapshot {
    std::vector<std::vector<double>> values;
    std::map<std::string, ad::BatchNormStats> stats;
  };

  Snapshot snapshot() const {
    Snapshot s;
    for (const auto& [name, v] : params_) s.values.push_back(v.value().data);
    s.stats = stats_;
    return s;
  }

  void restore(const Snapshot& s) {
    require(s.values.size() == params_.size(), "snapshot does not match the parameter set");
    for (std::size_t i = 0; i < params_.size(); ++i) {
      require(s.values[i].size() == params_[i].second.numel(),
              "snapshot size mismatch for " + params_[i].first);
      params_[i].second.mutable_value().data = s.values[i];
    }
    // Assign in place: modules hold references to the stored statistics.
    for (auto& [name, st] : stats_) st = s.stats.at(name);
  }

 private:
  std::vector<std::pair<std::string, ad::Var>> params_;
  std::map<std::string, std::size_t> index_;
  std::map<std::string, ad::BatchNormStats> stats_;
  std::vector<std::string> stats_order_;
};

/// Weights uniform in +-sqrt(1 / fan_in).
inline ad::Tensor uniform_weight(Rng& rng, std::size_t fan_in, std::size_t fan_out) {
  ad::Tensor w({fan_in, fan_out});
  const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
  for (auto& x : w.data) x = rng.uniform(-bound, bound);
  return w;
}

}  // namespace tsgcn::nn
