#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "tsgcn/ad/tape.hpp"
#include "tsgcn/util/rng.hpp"

namespace tsgcn::test_util {

inline ad::Tensor random_tensor(Rng& rng, ad::Shape shape, double lo = -1.0, double hi = 1.0) {
  ad::Tensor t(std::move(shape));
  for (auto& x : t.data) x = rng.uniform(lo, hi);
  return t;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return INFINITY;
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

inline double max_abs_diff(const ad::Tensor& a, const ad::Tensor& b) {
  if (a.shape != b.shape) return INFINITY;
  return max_abs_diff(a.data, b.data);
}

/// Central difference of a scalar function of one tensor entry.
template <typename F>
double central_difference(F&& f, std::vector<double>& data, std::size_t i, double h = 1e-5) {
  const double saved = data[i];
  data[i] = saved + h;
  const double up = f();
  data[i] = saved - h;
  const double down = f();
  data[i] = saved;
  return (up - down) / (2.0 * h);
}

}  // namespace tsgcn::test_util
