#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "tsgcn/ad/tape.hpp"

namespace tsgcn::ad {

struct GradcheckOptions {
  double step = 1e-5;
  /// 0 checks every entry; otherwise this many entries per tensor, sampled.
  std::size_t max_entries = 0;
  std::uint64_t seed = 7;
  /// Gradients whose analytic and numeric norms are both below this are
  /// considered equal (both zero up to finite-difference noise).
  double zero_floor = 1e-7;
  /// Up to this many tenfold step reductions per entry. A difference quotient
  /// is accepted once it agrees with the one at the next smaller step; a
  /// disagreement means a kink (LeakyReLU, max) lies inside the bracket.
  int refinements = 0;
  double agreement = 1e-6;
};

struct GradcheckEntry {
  std::string name;
  std::size_t checked = 0;
  double rel_error = 0.0;
  double analytic_norm = 0.0;
};

struct GradcheckReport {
  std::vector<GradcheckEntry> entries;

  double max_rel_error() const {
    double worst = 0.0;
    for (const auto& e : entries) worst = std::max(worst, e.rel_error);
    return worst;
  }
  bool passed(double tol) const { return max_rel_error() < tol; }
};

using LossFn = std::function<Var(Tape&)>;

/// Compares reverse-mode gradients of `loss_fn` against central differences.
/// `loss_fn` must be a pure function of the listed leaves.
inline GradcheckReport gradcheck(const LossFn& loss_fn,
                                 std::vector<std::pair<std::string, Var>> leaves,
                                 GradcheckOptions opt = {}) {
  for (auto& [name, v] : leaves) v.zero_grad();
  {
    Tape tape;
    Var loss = loss_fn(tape);
    tape.backward(loss);
  }

  auto evaluate = [&] {
    Tape tape(Tape::Mode::inference);
    return loss_fn(tape).value().data[0];
  };

  std::mt19937_64 rng(opt.seed);
  GradcheckReport report;
  for (auto& [name, v] : leaves) {
    const std::size_t n = v.numel();
    std::vector<std::size_t> picks(n);
    std::iota(picks.begin(), picks.end(), std::size_t{0});
    if (opt.max_entries != 0 && opt.max_entries < n) {
      std::shuffle(picks.begin(), picks.end(), rng);
      picks.resize(opt.max_entries);
      std::sort(picks.begin(), picks.end());
    }
    std::vector<double> analytic(picks.size(), 0.0);
    if (v.has_grad())
      for (std::size_t k = 0; k < picks.size(); ++k) analytic[k] = v.grad()[picks[k]];

    double diff2 = 0.0, a2 = 0.0, n2 = 0.0;
    auto& data = v.mutable_value().data;
    for (std::size_t k = 0; k < picks.size(); ++k) {
      const double saved = data[picks[k]];
      auto quotient = [&](double h) {
        data[picks[k]] = saved + h;
        const double up = evaluate();
        data[picks[k]] = saved - h;
        const double down = evaluate();
        data[picks[k]] = saved;
        return (up - down) / (2.0 * h);
      };
      double h = opt.step;
      double numeric = quotient(h);
      for (int r = 0; r < opt.refinements; ++r) {
        const double finer = quotient(h / 10.0);
        const bool agree = std::abs(numeric - finer) <=
                           opt.agreement * (std::abs(numeric) + std::abs(finer)) + 1e-9;
        if (agree) break;
        numeric = finer;
        h /= 10.0;
      }
      diff2 += (analytic[k] - numeric) * (analytic[k] - numeric);
      a2 += analytic[k] * analytic[k];
      n2 += numeric * numeric;
    }
    const double scale = std::max(std::sqrt(a2), std::sqrt(n2));
    GradcheckEntry entry{name, picks.size(), 0.0, std::sqrt(a2)};
    entry.rel_error = scale < opt.zero_floor ? 0.0 : std::sqrt(diff2) / scale;
    report.entries.push_back(entry);
  }
  return report;
}

}  // namespace tsgcn::ad
