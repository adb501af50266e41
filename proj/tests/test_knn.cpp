#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "helpers.hpp"
#include "tsgcn/knn/knn_graph.hpp"

using namespace tsgcn;
using ad::Tensor;
using knn::KnnMethod;
using test_util::random_tensor;

namespace {

// Independent oracle: every pair, sorted by (distance, index).
std::vector<std::uint32_t> oracle(const Tensor& x, std::size_t k) {
  const std::size_t m = x.dim(0), d = x.dim(1);
  std::vector<std::uint32_t> out;
  for (std::size_t i = 0; i < m; ++i) {
    std::vector<std::pair<double, std::uint32_t>> all;
    for (std::size_t j = 0; j < m; ++j) {
      if (j == i) continue;
      double s = 0.0;
      for (std::size_t c = 0; c < d; ++c) {
        const double t = x.data[i * d + c] - x.data[j * d + c];
        s += t * t;
      }
      all.emplace_back(s, static_cast<std::uint32_t>(j));
    }
    std::sort(all.begin(), all.end());
    for (std::size_t j = 0; j < k; ++j) out.push_back(all[j].second);
  }
  return out;
}

Tensor line(std::vector<double> xs) {
  const std::size_t m = xs.size();
  return Tensor({m, 1}, std::move(xs));
}

constexpr KnnMethod kMethods[] = {KnnMethod::brute_force, KnnMethod::pruned_scan, KnnMethod::kd_tree,
                                  KnnMethod::automatic};

}  // namespace

TEST(Knn, PointsOnALine) {
  for (auto method : kMethods) {
    const auto g = knn::build_knn(line({0, 1, 3, 7}), 1, method);
    EXPECT_EQ(g.indices, (std::vector<std::uint32_t>{1, 0, 1, 2}));
    EXPECT_EQ(g.cells, 4u);
    EXPECT_EQ(g.k, 1u);
  }
}

TEST(Knn, TiesGoToTheLowerIndex) {
  const Tensor square({4, 2}, {0, 0, 1, 0, 0, 1, 1, 1});
  const Tensor mid = line({0, 1, 2});
  const Tensor dup({4, 2}, {5, 5, 0, 0, 5, 5, 5, 5});
  for (auto method : kMethods) {
    const auto g = knn::build_knn(square, 3, method);
    EXPECT_EQ(g.indices, (std::vector<std::uint32_t>{1, 2, 3, 0, 3, 2, 0, 3, 1, 1, 2, 0}));
    EXPECT_EQ(knn::build_knn(mid, 1, method).at(1, 0), 0u);
    EXPECT_EQ(knn::build_knn(dup, 2, method).indices, oracle(dup, 2));
  }
}

TEST(Knn, AllMethodsMatchTheOracle) {
  Rng rng(5);
  for (std::size_t d : {3u, 12u, 64u, 200u}) {
    const Tensor x = random_tensor(rng, {150, d});
    const auto want = oracle(x, 9);
    for (auto method : kMethods) EXPECT_EQ(knn::build_knn(x, 9, method).indices, want) << "d=" << d;
  }
}

TEST(Knn, QuantizedFeaturesWithManyTies) {
  Rng rng(8);
  Tensor x({120, 4});
  for (auto& v : x.data) v = static_cast<double>(rng.next() % 4);
  const auto want = oracle(x, 6);
  for (auto method : kMethods) EXPECT_EQ(knn::build_knn(x, 6, method).indices, want);
}

TEST(Knn, PermutationEquivariance) {
  Rng rng(13);
  const std::size_t m = 90, d = 6, k = 5;
  const Tensor x = random_tensor(rng, {m, d});
  std::vector<std::uint32_t> perm(m);
  std::iota(perm.begin(), perm.end(), 0u);
  for (std::size_t i = m - 1; i > 0; --i) std::swap(perm[i], perm[rng.next() % (i + 1)]);
  Tensor px({m, d});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t c = 0; c < d; ++c) px.data[i * d + c] = x.data[perm[i] * d + c];
  const auto g = knn::build_knn(x, k), pg = knn::build_knn(px, k);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < k; ++j) EXPECT_EQ(perm[pg.at(i, j)], g.at(perm[i], j));
}

TEST(Knn, TranslationInvariance) {
  Rng rng(17);
  Tensor x = random_tensor(rng, {80, 3});
  const auto g = knn::build_knn(x, 7);
  for (std::size_t i = 0; i < 80; ++i) x.data[i * 3 + 1] += 0.5;
  EXPECT_EQ(knn::build_knn(x, 7), g);
}

TEST(Knn, InvalidInputs) {
  EXPECT_THROW(knn::build_knn(line({0, 1, 2}), 3), ContractError);
  EXPECT_THROW(knn::build_knn(line({0, 1, 2}), 0), ContractError);
  EXPECT_THROW(knn::build_knn(Tensor({3}), 1), ContractError);
  EXPECT_THROW(knn::build_knn(line({0, std::nan(""), 2}), 1), ContractError);
}
