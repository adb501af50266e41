#pragma once

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

#include "tsgcn/ad/gradcheck.hpp"
#include "tsgcn/nn/model.hpp"

namespace tsgcn::nn {

struct GradCheckResult {
  std::string name;
  ad::GradcheckReport report;
};

struct GradSuiteOptions {
  std::uint64_t seed = 11;
  std::size_t network_cells = 32;
  /// Widths and K of the whole-network checks; the variant field is ignored.
  ModelConfig network = default_network();
  /// Entries probed per parameter tensor of the whole network (0 = all).
  std::size_t network_entries = 4;
  double network_step = 1e-5;
  int network_refinements = 3;
  std::vector<Variant> variants{Variant::full};

  static ModelConfig default_network() {
    ModelConfig c;  // full widths
    c.k = 8;
    return c;
  }
};

namespace detail {

inline Tensor random_tensor(Rng& rng, ad::Shape shape, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (auto& x : t.data) x = rng.uniform(lo, hi);
  return t;
}

/// Values bounded away from 0, so LeakyReLU stays on one branch under a step.
inline Tensor jittered_tensor(Rng& rng, ad::Shape shape, double gap = 0.05) {
  Tensor t(std::move(shape));
  for (auto& x : t.data) {
    const double mag = rng.uniform(gap, 1.0);
    x = rng.uniform() < 0.5 ? -mag : mag;
  }
  return t;
}

/// Values at least spread / (2n) apart from each other: no max-pool ties.
inline Tensor distinct_tensor(Rng& rng, ad::Shape shape, double spread = 2.0) {
  Tensor t(std::move(shape));
  const std::size_t n = t.numel();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.next() % i]);
  for (std::size_t i = 0; i < n; ++i)
    t.data[order[i]] = -0.5 * spread + spread * (static_cast<double>(i) + 0.25 + 0.5 * rng.uniform()) /
                                           static_cast<double>(n);
  return t;
}

/// sum(x * R) for a fixed random R: a scalar whose gradient touches every entry
/// with a different weight (a plain sum would hide errors, e.g. through batch norm).
inline Var probe(Tape& tape, const Var& x, std::uint64_t seed) {
  Rng rng({seed, 0x9e37});
  return ad::sum(tape, ad::mul(tape, x, Var::constant(random_tensor(rng, x.shape()))));
}

inline Var param(Rng& rng, ad::Shape shape, double lo = -1.0, double hi = 1.0) {
  return Var::leaf(random_tensor(rng, std::move(shape), lo, hi), true);
}

}  // namespace detail

/// Central-difference checks of every differentiable layer and of whole networks.
inline std::vector<GradCheckResult> run_grad_suite(const GradSuiteOptions& opt = {}) {
  using detail::param;
  using detail::probe;
  std::vector<GradCheckResult> out;
  Rng rng({opt.seed, 0x6c});
  auto record = [&](std::string name, const ad::LossFn& fn,
                    std::vector<std::pair<std::string, Var>> leaves, ad::GradcheckOptions g = {}) {
    out.push_back({std::move(name), ad::gradcheck(fn, std::move(leaves), g)});
  };

  {
    Var x = param(rng, {12, 5}), w = param(rng, {5, 4}), b = param(rng, {4});
    record("linear", [=](Tape& t) { return probe(t, ad::linear(t, x, w, b), 1); },
           {{"x", x}, {"W", w}, {"b", b}});
  }
  {
    Var x = param(rng, {16, 4}), g = param(rng, {4}, 0.5, 1.5), b = param(rng, {4});
    auto st = std::make_shared<ad::BatchNormStats>(4);
    record("batch_norm",
           [=](Tape& t) { return probe(t, ad::batch_norm(t, x, g, b, *st, ad::NormMode::train), 2); },
           {{"x", x}, {"gamma", g}, {"beta", b}});
  }
  {
    Var x = Var::leaf(detail::jittered_tensor(rng, {10, 3}), true);
    record("leaky_relu", [=](Tape& t) { return probe(t, ad::leaky_relu(t, x), 3); }, {{"x", x}});
  }
  {
    Var s = param(rng, {6, 4, 3}, -2.0, 2.0);
    record("softmax_over_neighbors",
           [=](Tape& t) { return probe(t, ad::softmax_over_neighbors(t, s), 4); }, {{"scores", s}});
  }
  {
    Var z = param(rng, {8, 5}, -2.0, 2.0);
    std::vector<int> labels{0, 1, 2, 3, 4, 0, 1, 2};
    record("softmax_cross_entropy",
           [=](Tape& t) { return ad::cross_entropy(t, ad::softmax_rows(t, z), labels); },
           {{"logits", z}});
  }

  const std::size_t m = 16, nk = 4, d = 5, k = 6;
  Var f = param(rng, {m, d});
  const auto graph = knn::build_knn(f.value(), nk);
  {
    Var w = param(rng, {2 * d, k}, -0.5, 0.5), b = param(rng, {k}), g = param(rng, {k}, 0.5, 1.5),
        be = param(rng, {k});
    auto st = std::make_shared<ad::BatchNormStats>(k);
    record("calibrate_neighbors",
           [=](Tape& t) {
             return probe(t, edge_conv(t, f, graph, w, b, g, be, *st, ad::NormMode::train), 5);
           },
           {{"F", f}, {"W", w}, {"b", b}, {"gamma", g}, {"beta", be}});
  }
  {
    Var w = param(rng, {2 * d, k}, -0.5, 0.5), b = param(rng, {k}), v = param(rng, {m, nk, k});
    record("attention_aggregate",
           [=](Tape& t) { return probe(t, attention_aggregate(t, f, graph, w, b, v).features, 6); },
           {{"F", f}, {"W", w}, {"b", b}, {"calibrated", v}});
  }
  {
    Var v = Var::leaf(detail::distinct_tensor(rng, {10, 4, 3}), true);
    record("maxpool_aggregate", [=](Tape& t) { return probe(t, max_over_neighbors(t, v), 7); },
           {{"calibrated", v}});
  }
  {
    Var fc = param(rng, {10, 6}), fn = param(rng, {10, 6});
    record("meshwise_normalize",
           [=](Tape& t) {
             auto [a, b] = meshwise_normalize(t, fc, fn);
             return probe(t, ad::concat_channels(t, {a, b}), 8);
           },
           {{"Fc", fc}, {"Fn", fn}});
  }
  {
    const std::size_t w2 = 8;
    Var x = param(rng, {12, w2});
    Var w = param(rng, {w2, w2}, -0.5, 0.5), b = param(rng, {w2}), g = param(rng, {w2}, 0.5, 1.5),
        be = param(rng, {w2});
    auto st = std::make_shared<ad::BatchNormStats>(w2);
    record("self_attention_fuse",
           [=](Tape& t) {
             Var beta = ad::leaky_relu(
                 t, ad::batch_norm(t, ad::linear(t, x, w, b), g, be, *st, ad::NormMode::train));
             return probe(t, ad::mul(t, beta, x), 9);
           },
           {{"F", x}, {"W", w}, {"b", b}, {"gamma", g}, {"beta", be}});
  }
  {
    ParamStore store;
    Rng init({opt.seed, 0x7a});
    Builder bld(store, init);
    auto tnet = InputTransform::build(bld, "tnet", 4, 6, 8, 5);
    // Move T away from the identity start so every layer carries gradient.
    for (auto& v : tnet.fc2.weight.mutable_value().data) v = init.uniform(-0.3, 0.3);
    Var x = param(rng, {12, 4});
    auto leaves = store.named_params();
    leaves.emplace_back("F0", x);
    record("input_transform",
           [=, tnet = tnet](Tape& t) {
             Context ctx{t, ad::NormMode::train};
             return probe(t, tnet(ctx, x), 10);
           },
           leaves);
  }

  for (Variant v : opt.variants) {
    ModelConfig cfg = opt.network;
    cfg.variant = v;
    cfg.seed = opt.seed;
    auto model = std::make_shared<Model>(cfg);
    const std::size_t cells = opt.network_cells;
    mesh::CellDescriptors desc{detail::random_tensor(rng, {cells, mesh::kViewWidth}),
                               detail::random_tensor(rng, {cells, mesh::kViewWidth})};
    std::vector<int> labels(cells);
    for (std::size_t i = 0; i < cells; ++i) labels[i] = static_cast<int>(i % cfg.classes);
    // Neighborhoods are piecewise constant in the features; hold them fixed.
    std::vector<knn::KnnGraph> graphs;
    {
      Tape probe_tape(Tape::Mode::inference);
      graphs = model->forward(probe_tape, desc).graphs;
    }
    ad::GradcheckOptions g;
    g.max_entries = opt.network_entries;
    g.step = opt.network_step;
    g.refinements = opt.network_refinements;
    g.seed = opt.seed;
    record("network/" + std::string(variant_name(v)),
           [=](Tape& t) {
             ForwardOptions fo;
             fo.graphs = &graphs;
             return ad::cross_entropy(t, model->forward(t, desc, fo).probs, labels);
           },
           model->params().named_params(), g);
  }
  return out;
}

}  // namespace tsgcn::nn
