#pragma once

#include <algorithm>
#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "tsgcn/ad/ops.hpp"
#include "tsgcn/knn/knn_graph.hpp"
#include "tsgcn/nn/graph_ops.hpp"
#include "tsgcn/nn/params.hpp"

namespace tsgcn::nn {

/// What follows the affine part of a layer.
enum class Activation {
  none,
  leaky,     // LeakyReLU only
  bn_leaky,  // batch norm, then LeakyReLU
};

struct Context {
  Tape& tape;
  ad::NormMode mode;
};

/// Per-cell affine map (a kernel-size-1 convolution) plus its activation.
struct Dense {
  Var weight, bias, gamma, beta;
  ad::BatchNormStats* stats = nullptr;
  Activation act = Activation::none;

  std::size_t in_width() const { return weight.value().dim(0); }
  std::size_t out_width() const { return weight.value().dim(1); }

  Var operator()(Context& ctx, const Var& x) const {
    Var y = ad::linear(ctx.tape, x, weight, bias);
    return activate(ctx, y);
  }

  Var activate(Context& ctx, Var y) const {
    if (act == Activation::bn_leaky) y = ad::batch_norm(ctx.tape, y, gamma, beta, *stats, ctx.mode);
    if (act != Activation::none) y = ad::leaky_relu(ctx.tape, y);
    return y;
  }
};

/// Creates named parameters in a ParamStore.
class Builder {
 public:
  Builder(ParamStore& store, Rng& rng) : store_(store), rng_(rng) {}

  Dense dense(const std::string& name, std::size_t in, std::size_t out, Activation act) {
    Dense d;
    d.weight = store_.add(name + ".weight", uniform_weight(rng_, in, out));
    d.bias = store_.add(name + ".bias", Tensor({out}));
    d.act = act;
    if (act == Activation::bn_leaky) {
      d.gamma = store_.add(name + ".bn.gamma", Tensor({out}, 1.0));
      d.beta = store_.add(name + ".bn.beta", Tensor({out}));
      d.stats = &store_.add_stats(name + ".bn", out);
    }
    return d;
  }

  ParamStore& store() { return store_; }

 private:
  ParamStore& store_;
  Rng& rng_;
};

/// Input transformer: predicts a d x d matrix T from the whole mesh and
/// returns F T. T is shared by all cells and invariant to their order.
struct InputTransform {
  Dense conv1, conv2, fc1, fc2;
  std::size_t width = 0;

  static InputTransform build(Builder& b, const std::string& name, std::size_t d,
                              std::size_t w1 = 64, std::size_t w2 = 128, std::size_t w3 = 64) {
    InputTransform t;
    t.width = d;
    t.conv1 = b.dense(name + ".conv1", d, w1, Activation::bn_leaky);
    t.conv2 = b.dense(name + ".conv2", w1, w2, Activation::bn_leaky);
    // The pooled vector is a single row, so no batch norm after it.
    t.fc1 = b.dense(name + ".fc1", w2, w3, Activation::leaky);
    t.fc2 = b.dense(name + ".fc2", w3, d * d, Activation::none);
    // Start from T = I.
    std::fill(t.fc2.weight.mutable_value().data.begin(), t.fc2.weight.mutable_value().data.end(), 0.0);
    auto& bias = t.fc2.bias.mutable_value().data;
    for (std::size_t i = 0; i < d; ++i) bias[i * d + i] = 1.0;
    return t;
  }

  Var matrix(Context& ctx, const Var& f0) const {
    Var h = conv2(ctx, conv1(ctx, f0));
    Var g = ad::max_over_rows(ctx.tape, h);
    Var t = fc2(ctx, fc1(ctx, g));
    return ad::reshape(ctx.tape, t, {width, width});
  }

  Var operator()(Context& ctx, const Var& f0) const {
    return ad::matmul(ctx.tape, f0, matrix(ctx, f0));
  }
};

enum class Aggregation { attention, max_pool };

struct GraphLayerOutput {
  Var features;    // M x k
  Var calibrated;  // M x K x k
  std::shared_ptr<const Tensor> attention;  // M x K x k softmax weights, attention layers only
};

/// One graph layer: calibration of every edge, then attention-weighted or
/// max-pool aggregation over the K neighbors.
struct GraphLayer {
  Aggregation aggregation = Aggregation::attention;
  Dense calibrate;  // (2d x k) edge map + batch norm + LeakyReLU
  Dense scorer;     // attention only: (2d x k) edge map + LeakyReLU, no batch norm

  static GraphLayer build(Builder& b, const std::string& name, Aggregation agg, std::size_t d,
                          std::size_t k) {
    GraphLayer l;
    l.aggregation = agg;
    l.calibrate = b.dense(name + ".calib", 2 * d, k, Activation::bn_leaky);
    if (agg == Aggregation::attention) l.scorer = b.dense(name + ".score", 2 * d, k, Activation::leaky);
    return l;
  }

  std::size_t out_width() const { return calibrate.out_width(); }

  Var calibrate_neighbors(Context& ctx, const Var& f, const knn::KnnGraph& g) const {
    return edge_conv(ctx.tape, f, g, calibrate.weight, calibrate.bias, calibrate.gamma,
                     calibrate.beta, *calibrate.stats, ctx.mode);
  }

  GraphLayerOutput operator()(Context& ctx, const Var& f, const knn::KnnGraph& g) const {
    GraphLayerOutput out;
    out.calibrated = calibrate_neighbors(ctx, f, g);
    if (aggregation == Aggregation::attention) {
      auto a = attention_aggregate(ctx.tape, f, g, scorer.weight, scorer.bias, out.calibrated);
      out.features = a.features;
      out.attention = a.weights;
    } else {
      out.features = max_over_neighbors(ctx.tape, out.calibrated);
    }
    return out;
  }
};

/// The prediction head: batch-normalized stages, then a plain linear map to
/// C logits and a row softmax.
struct Head {
  std::vector<Dense> stages;
  Dense out;

  static Head build(Builder& b, const std::string& name, std::size_t in,
                    const std::vector<std::size_t>& widths, std::size_t classes) {
    Head h;
    std::size_t d = in;
    for (std::size_t i = 0; i < widths.size(); ++i) {
      h.stages.push_back(b.dense(name + "." + std::to_string(i), d, widths[i], Activation::bn_leaky));
      d = widths[i];
    }
    h.out = b.dense(name + "." + std::to_string(widths.size()), d, classes, Activation::none);
    return h;
  }

  Var logits(Context& ctx, Var x) const {
    for (const auto& s : stages) x = s(ctx, x);
    return out(ctx, x);
  }

  Var operator()(Context& ctx, const Var& x) const {
    return ad::softmax_rows(ctx.tape, logits(ctx, x));
  }
};

}  // namespace tsgcn::nn
