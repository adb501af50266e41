#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "tsgcn/knn/knn_graph.hpp"
#include "tsgcn/mesh/descriptors.hpp"
#include "tsgcn/nn/layers.hpp"
#include "tsgcn/nn/variant.hpp"

namespace tsgcn::nn {

struct ModelConfig {
  Variant variant = Variant::full;
  std::size_t classes = 5;
  std::size_t k = 32;
  std::array<std::size_t, 3> stream_widths{64, 128, 256};
  std::size_t fuse_width = 512;  // MLP_c / MLP_n output; self-attention is twice this
  std::vector<std::size_t> head_widths{512, 256, 128};
  std::array<std::size_t, 3> tnet_widths{64, 128, 64};
  std::uint64_t seed = 1;

  std::size_t input_width() const {
    return traits(variant).single_input == Input::both ? 2 * mesh::kViewWidth : mesh::kViewWidth;
  }
};

struct ForwardOptions {
  ad::NormMode mode = ad::NormMode::train;
  /// Reuse these graphs instead of building them (one per layer). Used to hold
  /// the neighborhoods fixed, e.g. under finite differences.
  const std::vector<knn::KnnGraph>* graphs = nullptr;
  knn::KnnMethod knn = knn::KnnMethod::automatic;
};

/// Intermediate results of one forward pass, for inspection and tests.
struct ForwardResult {
  Var probs;                       // M x C
  std::vector<knn::KnnGraph> graphs;
  Var transformed_c, transformed_n;  // input-transformer outputs
  std::vector<GraphLayerOutput> c_layers, n_layers;
  Var fc, fn;          // per-stream multi-scale features (M x fuse_width)
  Var fc_hat, fn_hat;  // after mesh-wise normalization
  Var beta;            // self-attention weights
  Var fused;           // head input
};

/// Stream s ("c" or "n") of the network: input transformer plus three graph layers.
struct Stream {
  InputTransform tnet;
  std::array<GraphLayer, 3> layers;
  Dense fuse;  // multi-scale MLP over F^1 (+) F^2 (+) F^3
};

class Model {
 public:
  explicit Model(ModelConfig cfg) : cfg_(std::move(cfg)), traits_(traits(cfg_.variant)) {
    require(cfg_.classes >= 1, "model: need at least one class");
    require(cfg_.k >= 1, "model: K must be positive");
    for (auto w : cfg_.stream_widths) require(w > 0, "model: stream widths must be positive");
    require(cfg_.fuse_width > 0, "model: fuse width must be positive");
    Rng rng({cfg_.seed, 0x1417});
    Builder b(store_, rng);
    if (traits_.two_stream) {
      c_ = build_stream(b, "c", mesh::kViewWidth, traits_.c_attention);
      n_ = build_stream(b, "n", mesh::kViewWidth, traits_.n_attention);
    } else {
      const bool normals = traits_.single_input == Input::normals;
      (normals ? n_ : c_) = build_stream(b, normals ? "n" : "c", cfg_.input_width(),
                                         traits_.c_attention);
    }
    const std::size_t fused = traits_.two_stream ? 2 * cfg_.fuse_width : cfg_.fuse_width;
    if (traits_.fusion == Fusion::attention || traits_.fusion == Fusion::normalize_attention)
      att_ = b.dense("fuse.att", fused, fused, Activation::bn_leaky);
    head_ = Head::build(b, "head", fused, cfg_.head_widths, cfg_.classes);
  }

  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;
  Model(Model&&) = default;
  Model& operator=(Model&&) = default;

  const ModelConfig& config() const noexcept { return cfg_; }
  const VariantTraits& variant_traits() const noexcept { return traits_; }
  ParamStore& params() noexcept { return store_; }
  const ParamStore& params() const noexcept { return store_; }

  ForwardResult forward(Tape& tape, const mesh::CellDescriptors& desc,
                        const ForwardOptions& opt = {}) {
    const std::size_t m = desc.cells();
    require(desc.coords.rank() == 2 && desc.coords.dim(1) == mesh::kViewWidth &&
                desc.normals.rank() == 2 && desc.normals.dim(1) == mesh::kViewWidth &&
                desc.normals.dim(0) == m,
            "model: descriptors must be two M x 12 matrices");
    require(m >= 2, "model: need at least 2 cells");
    require(cfg_.k < m, "model: K=" + std::to_string(cfg_.k) + " needs more than " +
                            std::to_string(m) + " cells");
    if (opt.graphs) require(opt.graphs->size() == 3, "model: expected one graph per layer");

    Context ctx{tape, opt.mode};
    ForwardResult r;
    r.graphs.reserve(3);
    auto graph_for = [&](std::size_t l, const Var& f) -> const knn::KnnGraph& {
      if (opt.graphs) {
        const auto& g = (*opt.graphs)[l];
        require(g.cells == m && g.k == cfg_.k, "model: supplied graph does not fit the mesh");
        r.graphs.push_back(g);
      } else {
        r.graphs.push_back(knn::build_knn(f.value(), cfg_.k, opt.knn));
      }
      return r.graphs.back();
    };

    if (!traits_.two_stream) {
      const bool normals = traits_.single_input == Input::normals;
      const Stream& s = normals ? *n_ : *c_;
      Var input;
      if (traits_.single_input == Input::both) {
        input = ad::concat_channels(tape, {Var::constant(desc.coords), Var::constant(desc.normals)});
      } else {
        input = Var::constant(normals ? desc.normals : desc.coords);
      }
      Var h = s.tnet(ctx, input);
      (normals ? r.transformed_n : r.transformed_c) = h;
      auto& outs = normals ? r.n_layers : r.c_layers;
      for (std::size_t l = 0; l < 3; ++l) {
        outs.push_back(s.layers[l](ctx, h, graph_for(l, h)));
        h = outs.back().features;
      }
      Var f = s.fuse(ctx, multiscale(tape, outs));
      (normals ? r.fn : r.fc) = f;
      r.fused = f;
      r.probs = head_(ctx, f);
      return r;
    }

    Var c = c_->tnet(ctx, Var::constant(desc.coords));
    Var n = n_->tnet(ctx, Var::constant(desc.normals));
    r.transformed_c = c;
    r.transformed_n = n;
    for (std::size_t l = 0; l < 3; ++l) {
      Var c_in = c, n_in = n, graph_src = c;
      if (traits_.low_level_fusion && l > 0) {
        c_in = n_in = graph_src = ad::concat_channels(tape, {c, n});
      }
      const knn::KnnGraph& g = graph_for(l, graph_src);
      r.c_layers.push_back(c_->layers[l](ctx, c_in, g));
      r.n_layers.push_back(n_->layers[l](ctx, n_in, g));
      c = r.c_layers.back().features;
      n = r.n_layers.back().features;
    }
    r.fc = c_->fuse(ctx, multiscale(tape, r.c_layers));
    r.fn = n_->fuse(ctx, multiscale(tape, r.n_layers));

    Var a = r.fc, b = r.fn;
    if (traits_.fusion == Fusion::normalize || traits_.fusion == Fusion::normalize_attention) {
      std::tie(a, b) = meshwise_normalize(tape, r.fc, r.fn);
      r.fc_hat = a;
      r.fn_hat = b;
    }
    Var joined = ad::concat_channels(tape, {a, b});
    if (traits_.fusion == Fusion::attention || traits_.fusion == Fusion::normalize_attention) {
      r.beta = (*att_)(ctx, joined);
      joined = ad::mul(tape, r.beta, joined);
    }
    r.fused = joined;
    r.probs = head_(ctx, joined);
    return r;
  }

  /// Argmax class per cell (first index on ties).
  static std::vector<int> predict(const Tensor& probs) {
    std::vector<int> out(probs.rows());
    for (std::size_t i = 0; i < out.size(); ++i) {
      auto row = probs.row(i);
      out[i] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
    }
    return out;
  }

 private:
  Stream build_stream(Builder& b, const std::string& name, std::size_t input_width, bool attention) {
    Stream s;
    const auto& tw = cfg_.tnet_widths;
    s.tnet = InputTransform::build(b, name + ".tnet", input_width, tw[0], tw[1], tw[2]);
    const auto agg = attention ? Aggregation::attention : Aggregation::max_pool;
    std::size_t d = input_width;
    std::size_t total = 0;
    for (std::size_t l = 0; l < 3; ++l) {
      const std::size_t k = cfg_.stream_widths[l];
      s.layers[l] = GraphLayer::build(b, name + ".layer" + std::to_string(l + 1), agg, d, k);
      // Under low-level fusion layers 2 and 3 read both streams' outputs.
      d = traits_.low_level_fusion ? 2 * k : k;
      total += k;
    }
    s.fuse = b.dense("fuse." + name, total, cfg_.fuse_width, Activation::bn_leaky);
    return s;
  }

  static Var multiscale(Tape& tape, const std::vector<GraphLayerOutput>& outs) {
    std::vector<Var> parts;
    for (const auto& o : outs) parts.push_back(o.features);
    return ad::concat_channels(tape, parts);
  }

  ModelConfig cfg_;
  VariantTraits traits_;
  ParamStore store_;
  std::optional<Stream> c_, n_;
  std::optional<Dense> att_;
  Head head_;
};

}  // namespace tsgcn::nn
