#include <gtest/gtest.h>

#include <cmath>

#include "helpers.hpp"
#include "tsgcn/ad/gradcheck.hpp"
#include "tsgcn/ad/ops.hpp"

using namespace tsgcn;
using ad::Tape;
using ad::Tensor;
using ad::Var;
using test_util::random_tensor;

TEST(Backward, SquareGradient) {
  auto x = Var::leaf(Tensor({1}, {3.0}), true);
  Tape tape;
  auto loss = ad::sum(tape, ad::mul(tape, x, x));
  tape.backward(loss);
  ASSERT_TRUE(x.has_grad());
  EXPECT_DOUBLE_EQ(x.grad()[0], 6.0);
}

TEST(Backward, LinearGradientRowsEqualInput) {
  auto x = Var::constant(Tensor({1, 3}, {0.5, -1.0, 2.0}));
  auto w = Var::leaf(Tensor({3, 4}, 0.1), true);
  Tape tape;
  tape.backward(ad::sum(tape, ad::linear(tape, x, w, Var::constant(Tensor({4})))));
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 4; ++c) EXPECT_DOUBLE_EQ(w.grad()[r * 4 + c], x.value().data[r]);
}

TEST(Backward, ThreeLayerNetMatchesFiniteDifferences) {
  Rng rng(21);
  auto x = Var::constant(random_tensor(rng, {6, 4}));
  std::vector<Var> ws, bs;
  const std::size_t widths[] = {4, 5, 3, 2};
  for (int l = 0; l < 3; ++l) {
    ws.push_back(Var::leaf(random_tensor(rng, {widths[l], widths[l + 1]}), true));
    bs.push_back(Var::leaf(random_tensor(rng, {widths[l + 1]}), true));
  }
  std::vector<int> labels{0, 1, 1, 0, 1, 0};
  auto net = [&](Tape& t) {
    Var h = x;
    for (int l = 0; l < 3; ++l) {
      h = ad::linear(t, h, ws[l], bs[l]);
      if (l < 2) h = ad::leaky_relu(t, h);
    }
    return ad::cross_entropy(t, ad::softmax_rows(t, h), labels);
  };
  {
    Tape t;
    t.backward(net(t));
  }
  auto eval = [&] {
    Tape t(Tape::Mode::inference);
    return net(t).value().data[0];
  };
  for (int l = 0; l < 3; ++l)
    for (Var* v : {&ws[l], &bs[l]}) {
      auto& data = v->mutable_value().data;
      double diff2 = 0.0, ref2 = 0.0;
      for (std::size_t i = 0; i < data.size(); ++i) {
        const double fd = test_util::central_difference(eval, data, i, 1e-5);
        diff2 += (fd - v->grad()[i]) * (fd - v->grad()[i]);
        ref2 += fd * fd;
      }
      EXPECT_LT(std::sqrt(diff2 / ref2), 1e-4) << "layer " << l;
    }
}

TEST(Backward, SecondPassIsAnError) {
  auto x = Var::leaf(Tensor({1}, {2.0}), true);
  Tape tape;
  auto loss = ad::sum(tape, ad::mul(tape, x, x));
  tape.backward(loss);
  EXPECT_THROW(tape.backward(loss), ContractError);
  EXPECT_DOUBLE_EQ(x.grad()[0], 4.0);
  EXPECT_THROW(ad::mul(tape, x, x), ContractError);
}

TEST(Backward, NonScalarLossIsAnError) {
  auto x = Var::leaf(Tensor({2}, {1.0, 2.0}), true);
  Tape tape;
  auto y = ad::mul(tape, x, x);
  EXPECT_THROW(tape.backward(y), ContractError);
}

TEST(Backward, LossFromAnotherTapeIsAnError) {
  auto x = Var::leaf(Tensor({1}, {2.0}), true);
  Tape a, b;
  auto loss = ad::sum(a, x);
  EXPECT_THROW(b.backward(loss), ContractError);
}

TEST(Backward, GradientsAccumulateAcrossTapes) {
  auto x = Var::leaf(Tensor({1}, {3.0}), true);
  for (int i = 0; i < 2; ++i) {
    Tape tape;
    tape.backward(ad::sum(tape, ad::scale(tape, x, 2.0)));
  }
  EXPECT_DOUBLE_EQ(x.grad()[0], 4.0);
  x.zero_grad();
  EXPECT_DOUBLE_EQ(x.grad()[0], 0.0);
}

TEST(Backward, SharedSubexpressionVisitedOnce) {
  // y = x * x used twice: d/dx sum(y + y) = 4x.
  auto x = Var::leaf(Tensor({1}, {1.5}), true);
  Tape tape;
  auto y = ad::mul(tape, x, x);
  tape.backward(ad::sum(tape, ad::concat_channels(tape, {y, y})));
  EXPECT_DOUBLE_EQ(x.grad()[0], 6.0);
  EXPECT_EQ(tape.size(), 0u);
}

TEST(Backward, InferenceTapeRecordsNothing) {
  auto x = Var::leaf(Tensor({1}, {1.0}), true);
  Tape tape(Tape::Mode::inference);
  auto y = ad::mul(tape, x, x);
  EXPECT_FALSE(y.requires_grad());
  EXPECT_EQ(tape.size(), 0u);
}

TEST(Gradcheck, DetectsAWrongRule) {
  // A deliberately wrong op: value 2x, recorded gradient 3x.
  auto x = Var::leaf(Tensor({3}, {0.1, 0.2, 0.3}), true);
  auto wrong = [&](Tape& t) {
    Tensor out = x.value();
    for (auto& v : out.data) v *= 2.0;
    auto y = t.emit("wrong", std::move(out), {&x}, [&] {
      return [x](std::span<const double> g) mutable {
        auto* gx = x.grad_sink();
        for (std::size_t i = 0; i < g.size(); ++i) (*gx)[i] += 3.0 * g[i];
      };
    });
    return ad::sum(t, y);
  };
  auto report = ad::gradcheck(wrong, {{"x", x}});
  EXPECT_FALSE(report.passed(1e-4));
  EXPECT_NEAR(report.max_rel_error(), 1.0 / 3.0, 1e-6);
}

TEST(Gradcheck, RefinementDoesNotHideWrongRules) {
  auto x = Var::leaf(Tensor({2}, {0.4, -0.7}), true);
  auto wrong = [&](Tape& t) {
    Tensor out = x.value();
    auto y = t.emit("wrong", std::move(out), {&x}, [&] {
      return [x](std::span<const double> g) mutable {
        auto* gx = x.grad_sink();
        for (std::size_t i = 0; i < g.size(); ++i) (*gx)[i] += 1.01 * g[i];
      };
    });
    return ad::sum(t, ad::mul(t, y, y));
  };
  ad::GradcheckOptions opt;
  opt.refinements = 3;
  EXPECT_FALSE(ad::gradcheck(wrong, {{"x", x}}, opt).passed(1e-4));
}

TEST(Gradcheck, RefinementStepsInsideAKink) {
  // |x - 0.3e-5| probed at 0 with h = 1e-5 straddles the kink.
  auto x = Var::leaf(Tensor({1}, {0.0}), true);
  auto f = [&](Tape& t) {
    auto shifted = ad::linear(t, ad::reshape(t, x, {1, 1}), Var::constant(Tensor({1, 1}, 1.0)),
                              Var::constant(Tensor({1}, -0.3e-5)));
    auto neg = ad::leaky_relu(t, ad::scale(t, shifted, -1.0), 0.0);
    auto pos = ad::leaky_relu(t, shifted, 0.0);
    return ad::sum(t, ad::concat_channels(t, {pos, neg}));
  };
  EXPECT_FALSE(ad::gradcheck(f, {{"x", x}}).passed(1e-4));
  ad::GradcheckOptions opt;
  opt.refinements = 2;
  EXPECT_TRUE(ad::gradcheck(f, {{"x", x}}, opt).passed(1e-4));
}
