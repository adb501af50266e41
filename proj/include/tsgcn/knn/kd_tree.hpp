#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

namespace tsgcn::knn {

inline constexpr std::size_t kDistanceLanes = 8;

/// Lane-wise accumulator of a squared distance: dimension c adds into lane
/// c % 8, and `total` combines the lanes in a fixed tree. The fixed order
/// makes the result bit-identical wherever it is computed, and the lanes
/// vectorize. Every search path uses it, so distances and tie-breaks agree
/// exactly with the brute-force oracle.
struct DistanceLanes {
  double lane[kDistanceLanes] = {};

  void add(const double* a, const double* b, std::size_t begin, std::size_t end) {
    std::size_t c = begin;
    for (; c + kDistanceLanes <= end; c += kDistanceLanes)
      for (std::size_t l = 0; l < kDistanceLanes; ++l) {
        const double t = a[c + l] - b[c + l];
        lane[l] += t * t;
      }
    for (; c < end; ++c) {
      const double t = a[c] - b[c];
      lane[c % kDistanceLanes] += t * t;
    }
  }

  /// Rounding is monotone and every term is non-negative, so a total taken
  /// over a prefix of the dimensions never exceeds the final total.
  double total() const {
    return ((lane[0] + lane[1]) + (lane[2] + lane[3])) + ((lane[4] + lane[5]) + (lane[6] + lane[7]));
  }
};

/// Squared Euclidean distance (see DistanceLanes for the summation order).
inline double squared_distance(const double* a, const double* b, std::size_t d) {
  DistanceLanes acc;
  acc.add(a, b, 0, d);
  return acc.total();
}

struct Neighbor {
  double dist2;
  std::uint32_t index;

  friend bool operator<(const Neighbor& a, const Neighbor& b) {
    return a.dist2 < b.dist2 || (a.dist2 == b.dist2 && a.index < b.index);
  }
};

/// The k best candidates seen so far, kept sorted by (distance, index).
class BestK {
 public:
  explicit BestK(std::size_t k) : k_(k) { items_.reserve(k + 1); }

  bool full() const noexcept { return items_.size() == k_; }
  double worst() const noexcept {
    return full() ? items_.back().dist2 : std::numeric_limits<double>::infinity();
  }

  void offer(const Neighbor& n) {
    if (full() && !(n < items_.back())) return;
    auto pos = std::upper_bound(items_.begin(), items_.end(), n);
    items_.insert(pos, n);
    if (items_.size() > k_) items_.pop_back();
  }

  const std::vector<Neighbor>& items() const noexcept { return items_; }

 private:
  std::size_t k_;
  std::vector<Neighbor> items_;
};

/// Exact k-d tree over the rows of an n x d row-major matrix. The tree keeps a
/// pointer to the caller's data, which must outlive it.
class KdTree {
 public:
  KdTree(std::span<const double> points, std::size_t dims, std::size_t leaf_size = 12)
      : points_(points.data()), dims_(dims), leaf_size_(std::max<std::size_t>(leaf_size, 1)) {
    const std::size_t n = dims == 0 ? 0 : points.size() / dims;
    order_.resize(n);
    std::iota(order_.begin(), order_.end(), std::uint32_t{0});
    if (n > 0) build(0, n);
  }

  std::size_t size() const noexcept { return order_.size(); }

  /// k nearest rows to `query`, ascending by (distance, index). `exclude`
  /// removes one row index from consideration (pass size() to exclude none).
  std::vector<Neighbor> nearest(const double* query, std::size_t k, std::size_t exclude) const {
    BestK best(k);
    if (!nodes_.empty()) search(0, query, exclude, best);
    return best.items();
  }

 private:
  struct NodeInfo {
    std::uint32_t begin, end;  // range in order_
    std::int32_t left = -1, right = -1;
    std::uint32_t split_dim = 0;
    double split = 0.0;
  };

  const double* row(std::uint32_t i) const { return points_ + static_cast<std::size_t>(i) * dims_; }

  std::int32_t build(std::size_t begin, std::size_t end) {
    const auto id = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back({static_cast<std::uint32_t>(begin), static_cast<std::uint32_t>(end)});
    if (end - begin <= leaf_size_) return id;

    std::size_t best_dim = 0;
    double best_spread = -1.0;
    for (std::size_t k = 0; k < dims_; ++k) {
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (std::size_t i = begin; i < end; ++i) {
        const double v = row(order_[i])[k];
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      if (hi - lo > best_spread) {
        best_spread = hi - lo;
        best_dim = k;
      }
    }
    if (best_spread <= 0.0) return id;  // all points coincide

    const std::size_t mid = begin + (end - begin) / 2;
    auto less = [&](std::uint32_t a, std::uint32_t b) {
      const double va = row(a)[best_dim], vb = row(b)[best_dim];
      return va < vb || (va == vb && a < b);
    };
    std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin),
                     order_.begin() + static_cast<std::ptrdiff_t>(mid),
                     order_.begin() + static_cast<std::ptrdiff_t>(end), less);
    // Left rows have coordinate <= split, right rows >= split.
    nodes_[id].split_dim = static_cast<std::uint32_t>(best_dim);
    nodes_[id].split = row(order_[mid])[best_dim];
    const auto l = build(begin, mid);
    const auto r = build(mid, end);
    nodes_[id].left = l;
    nodes_[id].right = r;
    return id;
  }

  void search(std::int32_t id, const double* q, std::size_t exclude, BestK& best) const {
    const NodeInfo& node = nodes_[static_cast<std::size_t>(id)];
    if (node.left < 0) {
      for (std::uint32_t i = node.begin; i < node.end; ++i) {
        const std::uint32_t idx = order_[i];
        if (idx == exclude) continue;
        best.offer({squared_distance(q, row(idx), dims_), idx});
      }
      return;
    }
    const double diff = q[node.split_dim] - node.split;
    const bool go_left = diff < 0.0;
    search(go_left ? node.left : node.right, q, exclude, best);
    // A far-side point differs from q by at least |diff| along split_dim, and the
    // floating-point sum of non-negative squares is never below any one term.
    // Equality must not prune: an equally distant row with a smaller index wins.
    if (!best.full() || diff * diff <= best.worst())
      search(go_left ? node.right : node.left, q, exclude, best);
  }

  const double* points_;
  std::size_t dims_;
  std::size_t leaf_size_;
  std::vector<std::uint32_t> order_;
  std::vector<NodeInfo> nodes_;
};

}  // namespace tsgcn::knn
