#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "helpers.hpp"
#include "tsgcn/ad/ops.hpp"

using namespace tsgcn;
using ad::Tape;
using ad::Tensor;
using ad::Var;
using test_util::random_tensor;

namespace {

Var constant(ad::Shape s, std::vector<double> v) { return Var::constant(Tensor(std::move(s), std::move(v))); }

}  // namespace

TEST(Tensor, ShapeMustMatchData) {
  EXPECT_THROW(Tensor({2, 2}, {1.0, 2.0, 3.0}), ContractError);
  Tensor t({2, 3});
  EXPECT_EQ(t.numel(), 6u);
  EXPECT_EQ(t.rows(), 2u);
  EXPECT_EQ(t.channels(), 3u);
}

TEST(Linear, IdentityWeights) {
  Tape tape;
  auto y = ad::linear(tape, constant({1, 2}, {1, 2}), constant({2, 2}, {1, 0, 0, 1}), constant({2}, {0, 0}));
  EXPECT_EQ(y.value().data, (std::vector<double>{1, 2}));
}

TEST(Linear, HandProduct) {
  Tape tape;
  auto y = ad::linear(tape, constant({2, 2}, {1, 0, 0, 1}), constant({2, 2}, {2, 3, 4, 5}),
                      constant({2}, {1, 1}));
  EXPECT_EQ(y.value().data, (std::vector<double>{3, 4, 5, 6}));
}

TEST(Linear, ZeroWeightsAnnihilate) {
  Rng rng(3);
  Tape tape;
  auto y = ad::linear(tape, Var::constant(random_tensor(rng, {5, 4})), Var::constant(Tensor({4, 3})),
                      Var::constant(Tensor({3})));
  for (double v : y.value().data) EXPECT_EQ(v, 0.0);
}

TEST(Linear, RandomAgainstLoop) {
  Rng rng(4);
  auto x = random_tensor(rng, {7, 5}), w = random_tensor(rng, {5, 3}), b = random_tensor(rng, {3});
  Tape tape;
  auto y = ad::linear(tape, Var::constant(x), Var::constant(w), Var::constant(b));
  for (std::size_t i = 0; i < 7; ++i)
    for (std::size_t c = 0; c < 3; ++c) {
      double acc = b.data[c];
      for (std::size_t k = 0; k < 5; ++k) acc += x(i, k) * w(k, c);
      EXPECT_NEAR(y.value()(i, c), acc, 1e-13);
    }
}

TEST(Linear, ShapeMismatchIsContractError) {
  Tape tape;
  EXPECT_THROW(ad::linear(tape, Var::constant(Tensor({2, 3})), Var::constant(Tensor({2, 2})),
                          Var::constant(Tensor({2}))),
               ContractError);
  EXPECT_THROW(ad::linear(tape, Var::constant(Tensor({2, 2})), Var::constant(Tensor({2, 2})),
                          Var::constant(Tensor({3}))),
               ContractError);
}

TEST(Tensor, NonFiniteValuesAreRejectedAtOpBoundaries) {
  Tape tape;
  auto x = constant({1, 2}, {1.0, std::numeric_limits<double>::quiet_NaN()});
  EXPECT_THROW(ad::linear(tape, x, constant({2, 1}, {1, 1}), constant({1}, {0})), NumericError);
  auto big = constant({1, 1}, {1e300});
  EXPECT_THROW(ad::mul(tape, big, big), NumericError);
}

TEST(BatchNorm, ConstantColumnMapsToBeta) {
  Tape tape;
  ad::BatchNormStats stats(1);
  auto y = ad::batch_norm(tape, constant({4, 1}, {2, 2, 2, 2}), constant({1}, {1}), constant({1}, {0}),
                          stats, ad::NormMode::train);
  for (double v : y.value().data) EXPECT_EQ(v, 0.0);
}

TEST(BatchNorm, StandardizedColumn) {
  Tape tape;
  ad::BatchNormStats stats(1);
  auto y = ad::batch_norm(tape, constant({2, 1}, {-1, 1}), constant({1}, {1}), constant({1}, {0}),
                          stats, ad::NormMode::train);
  // Biased variance is exactly 1, so only eps separates the output from the input.
  EXPECT_NEAR(y.value().data[0], -1.0, 1e-5);
  EXPECT_NEAR(y.value().data[1], 1.0, 1e-5);
  EXPECT_DOUBLE_EQ(y.value().data[1], 1.0 / std::sqrt(1.0 + 1e-5));
}

TEST(BatchNorm, RandomBatchIsStandardized) {
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    Tape tape;
    ad::BatchNormStats stats(4);
    auto x = random_tensor(rng, {8, 4}, -3.0, 5.0);
    auto y = ad::batch_norm(tape, Var::constant(x), constant({4}, {1, 1, 1, 1}), constant({4}, {0, 0, 0, 0}),
                            stats, ad::NormMode::train);
    for (std::size_t c = 0; c < 4; ++c) {
      double mean = 0.0, var = 0.0, xm = 0.0, xv = 0.0;
      for (std::size_t r = 0; r < 8; ++r) mean += y.value()(r, c), xm += x(r, c);
      mean /= 8.0;
      xm /= 8.0;
      for (std::size_t r = 0; r < 8; ++r) {
        var += (y.value()(r, c) - mean) * (y.value()(r, c) - mean);
        xv += (x(r, c) - xm) * (x(r, c) - xm);
      }
      var /= 8.0;
      xv /= 8.0;
      EXPECT_LT(std::abs(mean), 1e-9);
      EXPECT_NEAR(var, 1.0, 1e-6 + 1e-5 / xv);
    }
  }
}

TEST(BatchNorm, AffineAndRunningStatistics) {
  Tape tape;
  ad::BatchNormStats stats(1);
  auto y = ad::batch_norm(tape, constant({3, 1}, {1, 2, 3}), constant({1}, {2}), constant({1}, {0.5}),
                          stats, ad::NormMode::train);
  const double sd = std::sqrt(2.0 / 3.0 + 1e-5);
  EXPECT_NEAR(y.value().data[0], 2.0 * (-1.0 / sd) + 0.5, 1e-12);
  // momentum 0.1, running variance unbiased (sample variance of 1,2,3 is 1)
  EXPECT_NEAR(stats.mean[0], 0.1 * 2.0, 1e-15);
  EXPECT_NEAR(stats.var[0], 0.9 * 1.0 + 0.1 * 1.0, 1e-15);

  Tape eval;
  stats.mean[0] = 1.0;
  stats.var[0] = 4.0;
  auto z = ad::batch_norm(eval, constant({1, 1}, {5}), constant({1}, {1}), constant({1}, {0}), stats,
                          ad::NormMode::eval);
  EXPECT_NEAR(z.value().data[0], 4.0 / std::sqrt(4.0 + 1e-5), 1e-12);
}

TEST(BatchNorm, SingleRowTrainBatchIsDegenerate) {
  Tape tape;
  ad::BatchNormStats stats(2);
  EXPECT_THROW(ad::batch_norm(tape, constant({1, 2}, {1, 2}), constant({2}, {1, 1}), constant({2}, {0, 0}),
                              stats, ad::NormMode::train),
               ContractError);
  EXPECT_NO_THROW(ad::batch_norm(tape, constant({1, 2}, {1, 2}), constant({2}, {1, 1}),
                                 constant({2}, {0, 0}), stats, ad::NormMode::eval));
}

TEST(LeakyRelu, Examples) {
  Tape tape;
  auto y = ad::leaky_relu(tape, constant({3}, {0.0, 3.5, -2.0}));
  EXPECT_EQ(y.value().data[0], 0.0);
  EXPECT_EQ(y.value().data[1], 3.5);
  EXPECT_DOUBLE_EQ(y.value().data[2], -0.02);
}

TEST(SoftmaxOverNeighbors, UniformScores) {
  Tape tape;
  auto y = ad::softmax_over_neighbors(tape, Var::constant(Tensor({1, 4, 1}, 2.0)));
  for (double v : y.value().data) EXPECT_DOUBLE_EQ(v, 0.25);
}

TEST(SoftmaxOverNeighbors, TwoNeighbors) {
  Tape tape;
  auto y = ad::softmax_over_neighbors(tape, constant({1, 2, 1}, {0.0, std::log(3.0)}));
  EXPECT_NEAR(y.value().data[0], 0.25, 1e-15);
  EXPECT_NEAR(y.value().data[1], 0.75, 1e-15);
}

TEST(SoftmaxOverNeighbors, DominantScoreDoesNotOverflow) {
  Tape tape;
  auto y = ad::softmax_over_neighbors(tape, constant({1, 3, 1}, {0.0, 1000.0, 0.0}));
  EXPECT_NEAR(y.value().data[1], 1.0, 1e-15);
  EXPECT_TRUE(y.value().all_finite());
}

TEST(SoftmaxOverNeighbors, NormalizedPerCenterAndChannel) {
  Rng rng(6);
  Tape tape;
  auto s = random_tensor(rng, {9, 5, 4}, -20.0, 20.0);
  auto y = ad::softmax_over_neighbors(tape, Var::constant(s));
  for (std::size_t i = 0; i < 9; ++i)
    for (std::size_t c = 0; c < 4; ++c) {
      double total = 0.0;
      for (std::size_t j = 0; j < 5; ++j) total += y.value()(i, j, c);
      EXPECT_NEAR(total, 1.0, 1e-9);
    }
}

TEST(SoftmaxOverNeighbors, ShiftInvariantPerCenterAndChannel) {
  Rng rng(7);
  auto s = random_tensor(rng, {4, 6, 3}, -5.0, 5.0);
  auto shifted = s;
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t c = 0; c < 3; ++c) {
      const double k = rng.uniform(-50.0, 50.0);
      for (std::size_t j = 0; j < 6; ++j) shifted(i, j, c) += k;
    }
  Tape tape;
  auto a = ad::softmax_over_neighbors(tape, Var::constant(s));
  auto b = ad::softmax_over_neighbors(tape, Var::constant(shifted));
  EXPECT_LT(test_util::max_abs_diff(a.value(), b.value()), 1e-12);
}

TEST(SoftmaxRows, RowsSumToOne) {
  Rng rng(8);
  Tape tape;
  auto p = ad::softmax_rows(tape, Var::constant(random_tensor(rng, {10, 6}, -4.0, 4.0)));
  for (std::size_t i = 0; i < 10; ++i) {
    double total = 0.0;
    for (double v : p.value().row(i)) total += v;
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(CrossEntropy, OneHotIsZero) {
  Tape tape;
  std::vector<int> labels{1, 0};
  auto l = ad::cross_entropy(tape, constant({2, 2}, {0, 1, 1, 0}), labels);
  EXPECT_EQ(l.value().data[0], 0.0);
}

TEST(CrossEntropy, UniformIsLogC) {
  Tape tape;
  std::vector<int> labels{0, 3, 7};
  auto l = ad::cross_entropy(tape, Var::constant(Tensor({3, 8}, 0.125)), labels);
  EXPECT_NEAR(l.value().data[0], std::log(8.0), 1e-15);
  EXPECT_NEAR(l.value().data[0], 2.0794, 1e-4);
}

TEST(CrossEntropy, DirectEvaluation) {
  Tape tape;
  std::vector<int> labels{0};
  auto l = ad::cross_entropy(tape, constant({1, 2}, {0.7, 0.3}), labels);
  EXPECT_NEAR(l.value().data[0], -std::log(0.7), 1e-15);
  EXPECT_NEAR(l.value().data[0], 0.35667, 1e-5);
}

TEST(CrossEntropy, ClampsZeroProbability) {
  Tape tape;
  std::vector<int> labels{1};
  auto l = ad::cross_entropy(tape, constant({1, 2}, {1.0, 0.0}), labels);
  EXPECT_NEAR(l.value().data[0], -std::log(1e-12), 1e-9);
}

TEST(CrossEntropy, Contracts) {
  Tape tape;
  std::vector<int> bad{2};
  EXPECT_THROW(ad::cross_entropy(tape, constant({1, 2}, {0.5, 0.5}), bad), ContractError);
  std::vector<int> neg{-1};
  EXPECT_THROW(ad::cross_entropy(tape, constant({1, 2}, {0.5, 0.5}), neg), ContractError);
  std::vector<int> ok{0};
  EXPECT_THROW(ad::cross_entropy(tape, constant({1, 2}, {0.5, 0.6}), ok), ContractError);
}

TEST(ConcatChannels, OrderAndShape) {
  Tape tape;
  auto y = ad::concat_channels(tape, {constant({2, 1}, {1, 2}), constant({2, 2}, {3, 4, 5, 6})});
  EXPECT_EQ(y.shape(), (ad::Shape{2, 3}));
  EXPECT_EQ(y.value().data, (std::vector<double>{1, 3, 4, 2, 5, 6}));
  EXPECT_THROW(ad::concat_channels(tape, {constant({2, 1}, {1, 2}), constant({1, 1}, {3})}), ContractError);
}

TEST(MaxOverRows, FirstArgmaxOnTies) {
  Tape tape;
  auto x = Var::leaf(Tensor({3, 2}, {1, 5, 4, 5, 4, 0}), true);
  auto y = ad::max_over_rows(tape, x);
  EXPECT_EQ(y.value().data, (std::vector<double>{4, 5}));
  tape.backward(ad::sum(tape, y));
  EXPECT_EQ(std::vector<double>(x.grad().begin(), x.grad().end()),
            (std::vector<double>{0, 1, 1, 0, 0, 0}));
}

TEST(Reshape, KeepsDataAndChecksCount) {
  Tape tape;
  auto y = ad::reshape(tape, constant({4}, {1, 2, 3, 4}), {2, 2});
  EXPECT_EQ(y.value()(1, 0), 3.0);
  EXPECT_THROW(ad::reshape(tape, constant({4}, {1, 2, 3, 4}), {3}), ContractError);
}
