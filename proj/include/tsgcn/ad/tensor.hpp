#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "tsgcn/util/error.hpp"

namespace tsgcn::ad {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

inline std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

/// Dense row-major array of doubles. The last dimension is the channel
/// dimension; every leading dimension is treated as a batch of rows by the ops.
struct Tensor {
  Shape shape;
  std::vector<double> data;

  Tensor() = default;

  explicit Tensor(Shape s, double fill = 0.0) : shape(std::move(s)), data(shape_numel(shape), fill) {}

  Tensor(Shape s, std::vector<double> values) : shape(std::move(s)), data(std::move(values)) {
    require(data.size() == shape_numel(shape),
            "tensor data length " + std::to_string(data.size()) + " does not match shape " +
                shape_string(shape));
  }

  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
    return Tensor({rows, cols}, std::move(values));
  }

  std::size_t numel() const noexcept { return data.size(); }
  std::size_t rank() const noexcept { return shape.size(); }
  std::size_t dim(std::size_t i) const { return shape.at(i); }

  /// Size of the last dimension (1 for scalars).
  std::size_t channels() const noexcept { return shape.empty() ? 1 : shape.back(); }
  std::size_t rows() const noexcept { return channels() == 0 ? 0 : numel() / channels(); }

  double& operator()(std::size_t r, std::size_t c) { return data[r * channels() + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * channels() + c]; }

  double& operator()(std::size_t i, std::size_t j, std::size_t c) {
    return data[(i * shape[1] + j) * shape[2] + c];
  }
  double operator()(std::size_t i, std::size_t j, std::size_t c) const {
    return data[(i * shape[1] + j) * shape[2] + c];
  }

  std::span<double> row(std::size_t r) { return {data.data() + r * channels(), channels()}; }
  std::span<const double> row(std::size_t r) const {
    return {data.data() + r * channels(), channels()};
  }

  bool all_finite() const noexcept {
    for (double v : data)
      if (!std::isfinite(v)) return false;
    return true;
  }
};

}  // namespace tsgcn::ad
