#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "tsgcn/ad/tensor.hpp"
#include "tsgcn/knn/kd_tree.hpp"
#include "tsgcn/util/threads.hpp"

namespace tsgcn::knn {

/// K nearest neighbors of every cell, self excluded. Row i lists its neighbors
/// by ascending distance, ties broken by ascending index.
struct KnnGraph {
  std::size_t cells = 0;
  std::size_t k = 0;
  std::vector<std::uint32_t> indices;  // cells x k

  std::span<const std::uint32_t> row(std::size_t i) const { return {indices.data() + i * k, k}; }
  std::uint32_t at(std::size_t i, std::size_t j) const { return indices[i * k + j]; }

  friend bool operator==(const KnnGraph&, const KnnGraph&) = default;
};

enum class KnnMethod {
  brute_force,  // reference: full sort of all pairwise distances per row
  pruned_scan,  // linear scan with partial-distance early exit
  kd_tree,
  automatic,    // kd_tree for low dimension, brute_force otherwise
};

inline constexpr std::size_t kKdTreeMaxDims = 16;
inline constexpr std::size_t kPruneBlock = 32;  // dimensions between early-exit checks

namespace detail {

inline void check_inputs(const ad::Tensor& features, std::size_t k) {
  require(features.rank() == 2, "build_knn: features must be M x d, got " +
                                    ad::shape_string(features.shape));
  const std::size_t m = features.dim(0);
  require(k >= 1 && k < m, "build_knn: need 1 <= K < M, got K=" + std::to_string(k) +
                               " M=" + std::to_string(m));
  require(features.all_finite(), "build_knn: non-finite feature");
}

template <typename RowFn>
void for_rows(std::size_t m, RowFn&& fn) {
  const std::size_t workers = std::min<std::size_t>(worker_threads(), std::max<std::size_t>(m / 64, 1));
  if (workers <= 1) {
    for (std::size_t i = 0; i < m; ++i) fn(i);
    return;
  }
  // Rows are independent; each thread owns a contiguous block of output rows.
  std::vector<std::thread> pool;
  const std::size_t chunk = (m + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t i = w * chunk; i < std::min(m, (w + 1) * chunk); ++i) fn(i);
    });
  for (auto& t : pool) t.join();
}

}  // namespace detail

/// O(M^2 d) reference: every pairwise distance, then a partial sort.
inline KnnGraph build_knn_brute_force(const ad::Tensor& features, std::size_t k) {
  detail::check_inputs(features, k);
  const std::size_t m = features.dim(0), d = features.dim(1);
  KnnGraph g{m, k, std::vector<std::uint32_t>(m * k)};
  detail::for_rows(m, [&](std::size_t i) {
    std::vector<Neighbor> all;
    all.reserve(m - 1);
    for (std::size_t j = 0; j < m; ++j)
      if (j != i)
        all.push_back({squared_distance(features.data.data() + i * d,
                                        features.data.data() + j * d, d),
                       static_cast<std::uint32_t>(j)});
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end());
    for (std::size_t j = 0; j < k; ++j) g.indices[i * k + j] = all[j].index;
  });
  return g;
}

namespace detail {

inline KnnGraph pruned_scan(const ad::Tensor& features, std::size_t k) {
  const std::size_t m = features.dim(0), d = features.dim(1);
  const double* x = features.data.data();
  KnnGraph g{m, k, std::vector<std::uint32_t>(m * k)};
  for_rows(m, [&](std::size_t i) {
    BestK best(k);
    const double* q = x + i * d;
    for (std::size_t j = 0; j < m; ++j) {
      if (j == i) continue;
      const double* p = x + j * d;
      const double bound = best.worst();
      // Check the running total every block; a prefix total above the current
      // worst can only grow, so the candidate can never be accepted.
      DistanceLanes acc;
      std::size_t c = 0;
      while (c < d) {
        const std::size_t end = std::min(d, c + kPruneBlock);
        acc.add(q, p, c, end);
        c = end;
        if (c < d && acc.total() > bound) break;
      }
      const double s = acc.total();
      if (c == d) best.offer({s, static_cast<std::uint32_t>(j)});
    }
    const auto& items = best.items();
    for (std::size_t j = 0; j < k; ++j) g.indices[i * k + j] = items[j].index;
  });
  return g;
}

inline KnnGraph kd_tree(const ad::Tensor& features, std::size_t k) {
  const std::size_t m = features.dim(0), d = features.dim(1);
  const KdTree tree(features.data, d);
  KnnGraph g{m, k, std::vector<std::uint32_t>(m * k)};
  for_rows(m, [&](std::size_t i) {
    const auto items = tree.nearest(features.data.data() + i * d, k, i);
    for (std::size_t j = 0; j < k; ++j) g.indices[i * k + j] = items[j].index;
  });
  return g;
}

}  // namespace detail

/// Euclidean KNN graph over the rows of `features`. Every method returns the
/// same graph as build_knn_brute_force, including tie order.
inline KnnGraph build_knn(const ad::Tensor& features, std::size_t k,
                          KnnMethod method = KnnMethod::automatic) {
  detail::check_inputs(features, k);
  if (method == KnnMethod::automatic)
    method = features.dim(1) <= kKdTreeMaxDims ? KnnMethod::kd_tree : KnnMethod::brute_force;
  switch (method) {
    case KnnMethod::brute_force:
      return build_knn_brute_force(features, k);
    case KnnMethod::pruned_scan:
      return detail::pruned_scan(features, k);
    case KnnMethod::kd_tree:
    case KnnMethod::automatic:
      break;
  }
  return detail::kd_tree(features, k);
}

/// Debug dump: one line per cell, K space-separated neighbor indices.
inline void write_knn_dump(const std::filesystem::path& path, const KnnGraph& g) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  for (std::size_t i = 0; i < g.cells; ++i) {
    for (std::size_t j = 0; j < g.k; ++j) out << (j ? " " : "") << g.at(i, j);
    out << '\n';
  }
}

}  // namespace tsgcn::knn
