#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "tsgcn/ad/eigen_view.hpp"
#include "tsgcn/ad/ops.hpp"
#include "tsgcn/knn/knn_graph.hpp"

namespace tsgcn::nn {

using ad::Tape;
using ad::Tensor;
using ad::Var;

/// How an edge map combines a center f_i with its neighbor f_ij.
enum class EdgeInput {
  concat,  // f_i (+) f_ij
  delta,   // (f_i - f_ij) (+) f_ij
};

namespace detail {

struct EdgeProjection {
  ad::detail::RowMatrix p;  // M x k, includes the bias
  ad::detail::RowMatrix q;  // M x k
};

inline void check_edge_inputs(const char* op, const Var& features, const knn::KnnGraph& graph,
                              const Var& weight, const Var& bias) {
  const Tensor& fv = features.value();
  const Tensor& wv = weight.value();
  require(fv.rank() == 2,
          std::string(op) + ": features must be M x d, got " + ad::shape_string(fv.shape));
  require(graph.cells == fv.dim(0), std::string(op) + ": graph has " + std::to_string(graph.cells) +
                                        " rows for " + std::to_string(fv.dim(0)) + " cells");
  require(wv.rank() == 2 && wv.dim(0) == 2 * fv.dim(1),
          std::string(op) + ": weight " + ad::shape_string(wv.shape) + " does not take 2 x " +
              std::to_string(fv.dim(1)) + " inputs");
  require(bias.numel() == wv.dim(1), std::string(op) + ": bias width mismatch");
}

// Splitting W into halves, the concat input gives W^T (f_i (+) f_ij) + b =
// P[i] + Q[n(i,j)] with P = F W_top + b and Q = F W_bot; the delta input the
// same with Q = F (W_bot - W_top). Projections are per cell, not per edge.
inline EdgeProjection project(const Var& features, const Var& weight, const Var& bias,
                              EdgeInput mode) {
  using ad::detail::view;
  const Tensor& fv = features.value();
  const Tensor& wv = weight.value();
  const std::size_t m = fv.dim(0), d = fv.dim(1), k = wv.dim(1);
  const auto x = view(fv.data.data(), m, d);
  const auto w_top = view(wv.data.data(), d, k);
  const auto w_bot = view(wv.data.data() + d * k, d, k);
  EdgeProjection e;
  e.p.noalias() = x * w_top;
  e.p.rowwise() += view(bias.value().data.data(), 1, k).row(0);
  e.q.noalias() = x * w_bot;
  if (mode == EdgeInput::delta) e.q.noalias() -= x * w_top;
  return e;
}

// Chains gradients of P and Q back to the features, weight and bias.
inline void project_backward(const Var& features, const Var& weight, const Var& bias,
                             EdgeInput mode, const ad::detail::RowMatrix& gp,
                             const ad::detail::RowMatrix& gq) {
  using ad::detail::view;
  const Tensor& fv = features.value();
  const Tensor& wv = weight.value();
  const std::size_t m = fv.dim(0), d = fv.dim(1), k = wv.dim(1);
  const auto w_top = view(wv.data.data(), d, k);
  const auto w_bot = view(wv.data.data() + d * k, d, k);
  if (auto* gb = bias.grad_sink()) ad::detail::add_column_sums(gp.data(), m, k, gb->data());
  // In the delta form the top half sees gP - gQ.
  ad::detail::RowMatrix g_top = gp;
  if (mode == EdgeInput::delta) g_top -= gq;
  if (auto* gf = features.grad_sink()) {
    auto gx = view(gf->data(), m, d);
    gx.noalias() += g_top * w_top.transpose();
    gx.noalias() += gq * w_bot.transpose();
  }
  if (auto* gw = weight.grad_sink()) {
    const auto x = view(fv.data.data(), m, d);
    view(gw->data(), d, k).noalias() += x.transpose() * g_top;
    view(gw->data() + d * k, d, k).noalias() += x.transpose() * gq;
  }
}

}  // namespace detail

/// Per-edge affine map over the K neighbors of every cell: out[i, j] =
/// W^T (input_ij) + b, with input_ij built from f_i and f_{n(i,j)} as selected
/// by `mode`. W is (2d x k), its top half acting on the first operand.
inline Var edge_linear(Tape& tape, const Var& features, const knn::KnnGraph& graph,
                       const Var& weight, const Var& bias, EdgeInput mode) {
  detail::check_edge_inputs("edge_linear", features, graph, weight, bias);
  const std::size_t m = graph.cells, nk = graph.k, k = weight.value().dim(1);
  auto e = detail::project(features, weight, bias, mode);

  Tensor out({m, nk, k});
  for (std::size_t i = 0; i < m; ++i) {
    const double* pi = e.p.data() + i * k;
    for (std::size_t j = 0; j < nk; ++j) {
      const double* qj = e.q.data() + static_cast<std::size_t>(graph.at(i, j)) * k;
      double* o = out.data.data() + (i * nk + j) * k;
      for (std::size_t c = 0; c < k; ++c) o[c] = pi[c] + qj[c];
    }
  }

  return tape.emit("edge_linear", std::move(out), {&features, &weight, &bias}, [&] {
    return [features, weight, bias, graph, mode, m, k, nk](std::span<const double> g) {
      // gP sums over a cell's own edges; gQ scatters to the neighbor each edge reads.
      ad::detail::RowMatrix gp = ad::detail::RowMatrix::Zero(m, k);
      ad::detail::RowMatrix gq = ad::detail::RowMatrix::Zero(m, k);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < nk; ++j) {
          const double* ge = g.data() + (i * nk + j) * k;
          double* pi = gp.data() + i * k;
          double* qj = gq.data() + static_cast<std::size_t>(graph.at(i, j)) * k;
          for (std::size_t c = 0; c < k; ++c) {
            pi[c] += ge[c];
            qj[c] += ge[c];
          }
        }
      detail::project_backward(features, weight, bias, mode, gp, gq);
    };
  });
}

/// Neighbor calibration: LeakyReLU(BN(W^T (f_i (+) f_ij) + b)) for every edge,
/// with batch norm over all M K edges. Equivalent to edge_linear followed by
/// batch_norm and leaky_relu; pre-activations are rebuilt from the per-cell
/// projections during backward instead of being stored.
inline Var edge_conv(Tape& tape, const Var& features, const knn::KnnGraph& graph,
                     const Var& weight, const Var& bias, const Var& gamma, const Var& beta,
                     ad::BatchNormStats& stats, ad::NormMode mode, ad::BatchNormOptions opt = {}) {
  detail::check_edge_inputs("edge_conv", features, graph, weight, bias);
  const std::size_t m = graph.cells, nk = graph.k, k = weight.value().dim(1);
  require(gamma.numel() == k && beta.numel() == k && stats.mean.size() == k,
          "edge_conv: batch-norm width mismatch");
  const std::size_t n = m * nk;
  if (mode == ad::NormMode::train && n < 2)
    throw ContractError("edge_conv: degenerate batch of " + std::to_string(n) + " edges");
  auto proj = std::make_shared<detail::EdgeProjection>(
      detail::project(features, weight, bias, EdgeInput::concat));
  const auto& p = proj->p;
  const auto& q = proj->q;
  auto pre = [&](std::size_t i, std::size_t j) {
    return std::pair{p.data() + i * k, q.data() + static_cast<std::size_t>(graph.at(i, j)) * k};
  };

  std::vector<double> mean(k, 0.0), var(k, 0.0);
  if (mode == ad::NormMode::train) {
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < nk; ++j) {
        auto [pi, qj] = pre(i, j);
        for (std::size_t c = 0; c < k; ++c) mean[c] += pi[c] + qj[c];
      }
    for (auto& v : mean) v /= static_cast<double>(n);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < nk; ++j) {
        auto [pi, qj] = pre(i, j);
        for (std::size_t c = 0; c < k; ++c) {
          const double t = pi[c] + qj[c] - mean[c];
          var[c] += t * t;
        }
      }
    for (auto& v : var) v /= static_cast<double>(n);
    const double unbias = static_cast<double>(n) / static_cast<double>(n - 1);
    for (std::size_t c = 0; c < k; ++c) {
      stats.mean[c] = (1.0 - opt.momentum) * stats.mean[c] + opt.momentum * mean[c];
      stats.var[c] = (1.0 - opt.momentum) * stats.var[c] + opt.momentum * var[c] * unbias;
    }
  } else {
    mean = stats.mean;
    var = stats.var;
  }
  std::vector<double> inv_std(k);
  for (std::size_t c = 0; c < k; ++c) inv_std[c] = 1.0 / std::sqrt(var[c] + opt.eps);

  const double* gam = gamma.value().data.data();
  const double* bet = beta.value().data.data();
  Tensor out({m, nk, k});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < nk; ++j) {
      auto [pi, qj] = pre(i, j);
      double* o = out.data.data() + (i * nk + j) * k;
      for (std::size_t c = 0; c < k; ++c) {
        const double y = gam[c] * (pi[c] + qj[c] - mean[c]) * inv_std[c] + bet[c];
        o[c] = y >= 0.0 ? y : ad::kLeakySlope * y;
      }
    }

  return tape.emit("edge_conv", std::move(out), {&features, &weight, &bias, &gamma, &beta}, [&] {
    return [features, weight, bias, gamma, beta, graph, proj, mean = std::move(mean),
            inv_std = std::move(inv_std), mode, m, nk, k, n](std::span<const double> g,
                                                              const Tensor& out) {
      const auto& p = proj->p;
      const auto& q = proj->q;
      const double* gam = gamma.value().data.data();
      const double* o = out.data.data();
      // The output has the sign of the batch-norm output, which selects the
      // LeakyReLU branch.
      auto g_bn = [&](std::size_t e) {
        return o[e] >= 0.0 ? g[e] : ad::kLeakySlope * g[e];
      };
      std::vector<double> sum_g(k, 0.0), sum_gx(k, 0.0);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < nk; ++j) {
          const double* pi = p.data() + i * k;
          const double* qj = q.data() + static_cast<std::size_t>(graph.at(i, j)) * k;
          const std::size_t base = (i * nk + j) * k;
          for (std::size_t c = 0; c < k; ++c) {
            const double gy = g_bn(base + c);
            sum_g[c] += gy;
            sum_gx[c] += gy * (pi[c] + qj[c] - mean[c]) * inv_std[c];
          }
        }
      if (auto* gg = gamma.grad_sink())
        for (std::size_t c = 0; c < k; ++c) (*gg)[c] += sum_gx[c];
      if (auto* gb = beta.grad_sink())
        for (std::size_t c = 0; c < k; ++c) (*gb)[c] += sum_g[c];
      if (!features.requires_grad() && !weight.requires_grad() && !bias.requires_grad()) return;

      const bool train = mode == ad::NormMode::train;
      const double inv_n = 1.0 / static_cast<double>(n);
      ad::detail::RowMatrix gp = ad::detail::RowMatrix::Zero(m, k);
      ad::detail::RowMatrix gq = ad::detail::RowMatrix::Zero(m, k);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < nk; ++j) {
          const double* pi = p.data() + i * k;
          const std::size_t nb = graph.at(i, j);
          const double* qj = q.data() + nb * k;
          double* gpi = gp.data() + i * k;
          double* gqj = gq.data() + nb * k;
          const std::size_t base = (i * nk + j) * k;
          for (std::size_t c = 0; c < k; ++c) {
            const double gy = g_bn(base + c);
            double gx = gy;
            if (train) {
              const double xhat = (pi[c] + qj[c] - mean[c]) * inv_std[c];
              gx = gy - inv_n * sum_g[c] - xhat * inv_n * sum_gx[c];
            }
            gx *= gam[c] * inv_std[c];
            gpi[c] += gx;
            gqj[c] += gx;
          }
        }
      detail::project_backward(features, weight, bias, EdgeInput::concat, gp, gq);
    };
  });
}

struct AttentionResult {
  Var features;                         // M x k
  std::shared_ptr<const Tensor> weights;  // M x K x k softmax weights
};

/// Graph-attention aggregation: scores LeakyReLU(W^T ((f_i - f_ij) (+) f_ij) + b)
/// are normalized per channel over the K neighbors, and the output is the
/// weighted sum of the calibrated neighbor features. Equivalent to edge_linear
/// (delta), leaky_relu, softmax_over_neighbors and weighted_neighbor_sum.
inline AttentionResult attention_aggregate(Tape& tape, const Var& features,
                                           const knn::KnnGraph& graph, const Var& weight,
                                           const Var& bias, const Var& calibrated) {
  detail::check_edge_inputs("attention_aggregate", features, graph, weight, bias);
  const std::size_t m = graph.cells, nk = graph.k, k = weight.value().dim(1);
  require(calibrated.shape() == ad::Shape({m, nk, k}),
          "attention_aggregate: calibrated features " + ad::shape_string(calibrated.shape()) +
              " do not match the graph and score width");
  auto proj = std::make_shared<detail::EdgeProjection>(
      detail::project(features, weight, bias, EdgeInput::delta));
  auto alpha = std::make_shared<Tensor>(ad::Shape{m, nk, k});
  const double* v = calibrated.value().data.data();
  Tensor out({m, k});
  std::vector<double> mx(k), total(k);
  for (std::size_t i = 0; i < m; ++i) {
    const double* pi = proj->p.data() + i * k;
    double* a = alpha->data.data() + i * nk * k;
    std::fill(mx.begin(), mx.end(), -std::numeric_limits<double>::infinity());
    for (std::size_t j = 0; j < nk; ++j) {
      const double* qj = proj->q.data() + static_cast<std::size_t>(graph.at(i, j)) * k;
      for (std::size_t c = 0; c < k; ++c) {
        const double s = pi[c] + qj[c];
        a[j * k + c] = s >= 0.0 ? s : ad::kLeakySlope * s;
        mx[c] = std::max(mx[c], a[j * k + c]);
      }
    }
    std::fill(total.begin(), total.end(), 0.0);
    for (std::size_t j = 0; j < nk; ++j)
      for (std::size_t c = 0; c < k; ++c) {
        a[j * k + c] = std::exp(a[j * k + c] - mx[c]);
        total[c] += a[j * k + c];
      }
    double* o = out.data.data() + i * k;
    for (std::size_t j = 0; j < nk; ++j)
      for (std::size_t c = 0; c < k; ++c) {
        a[j * k + c] /= total[c];
        o[c] += a[j * k + c] * v[(i * nk + j) * k + c];
      }
  }
  if (!alpha->all_finite()) throw NumericError("non-finite attention weights");

  Var result = tape.emit("attention_aggregate", std::move(out), {&features, &weight, &bias, &calibrated}, [&] {
    return [features, weight, bias, calibrated, graph, proj, alpha, m, nk, k](std::span<const double> g) {
      const double* a = alpha->data.data();
      const double* v = calibrated.value().data.data();
      if (auto* gv = calibrated.grad_sink())
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < nk; ++j)
            for (std::size_t c = 0; c < k; ++c)
              (*gv)[(i * nk + j) * k + c] += g[i * k + c] * a[(i * nk + j) * k + c];
      if (!features.requires_grad() && !weight.requires_grad() && !bias.requires_grad()) return;

      ad::detail::RowMatrix gp = ad::detail::RowMatrix::Zero(m, k);
      ad::detail::RowMatrix gq = ad::detail::RowMatrix::Zero(m, k);
      std::vector<double> dot(k);
      for (std::size_t i = 0; i < m; ++i) {
        const double* gi = g.data() + i * k;
        const std::size_t row = i * nk * k;
        // d out / d alpha_ij = v_ij; softmax backward needs sum_j alpha_ij g v_ij.
        std::fill(dot.begin(), dot.end(), 0.0);
        for (std::size_t j = 0; j < nk; ++j)
          for (std::size_t c = 0; c < k; ++c) dot[c] += a[row + j * k + c] * gi[c] * v[row + j * k + c];
        const double* pi = proj->p.data() + i * k;
        double* gpi = gp.data() + i * k;
        for (std::size_t j = 0; j < nk; ++j) {
          const std::size_t nb = graph.at(i, j);
          const double* qj = proj->q.data() + nb * k;
          double* gqj = gq.data() + nb * k;
          for (std::size_t c = 0; c < k; ++c) {
            const std::size_t e = row + j * k + c;
            double gs = a[e] * (gi[c] * v[e] - dot[c]);
            if (pi[c] + qj[c] < 0.0) gs *= ad::kLeakySlope;
            gpi[c] += gs;
            gqj[c] += gs;
          }
        }
      }
      detail::project_backward(features, weight, bias, EdgeInput::delta, gp, gq);
    };
  });
  return {result, alpha};
}

/// out[i, c] = sum_j weights[i, j, c] * values[i, j, c] for M x K x k inputs.
inline Var weighted_neighbor_sum(Tape& tape, const Var& weights, const Var& values) {
  require(weights.value().rank() == 3 && weights.shape() == values.shape(),
          "weighted_neighbor_sum: expected matching M x K x k inputs, got " +
              ad::shape_string(weights.shape()) + " and " + ad::shape_string(values.shape()));
  const auto& s = weights.shape();
  const std::size_t m = s[0], nk = s[1], k = s[2];
  Tensor out({m, k});
  const double* a = weights.value().data.data();
  const double* v = values.value().data.data();
  for (std::size_t i = 0; i < m; ++i) {
    double* o = out.data.data() + i * k;
    for (std::size_t j = 0; j < nk; ++j) {
      const std::size_t base = (i * nk + j) * k;
      for (std::size_t c = 0; c < k; ++c) o[c] += a[base + c] * v[base + c];
    }
  }
  return tape.emit("weighted_neighbor_sum", std::move(out), {&weights, &values}, [&] {
    return [weights, values, m, nk, k](std::span<const double> g) {
      auto* ga = weights.grad_sink();
      auto* gv = values.grad_sink();
      const double* a = weights.value().data.data();
      const double* v = values.value().data.data();
      for (std::size_t i = 0; i < m; ++i) {
        const double* gi = g.data() + i * k;
        for (std::size_t j = 0; j < nk; ++j) {
          const std::size_t base = (i * nk + j) * k;
          if (ga)
            for (std::size_t c = 0; c < k; ++c) (*ga)[base + c] += gi[c] * v[base + c];
          if (gv)
            for (std::size_t c = 0; c < k; ++c) (*gv)[base + c] += gi[c] * a[base + c];
        }
      }
    };
  });
}

/// Channel-wise maximum over the K neighbors: M x K x k -> M x k. The gradient
/// is routed to the first neighbor attaining the maximum.
inline Var max_over_neighbors(Tape& tape, const Var& values) {
  require(values.value().rank() == 3,
          "max_over_neighbors: expected M x K x k, got " + ad::shape_string(values.shape()));
  const auto& s = values.shape();
  const std::size_t m = s[0], nk = s[1], k = s[2];
  require(nk >= 1, "max_over_neighbors: no neighbors");
  Tensor out({m, k});
  std::vector<std::uint32_t> arg(m * k, 0);
  const double* v = values.value().data.data();
  for (std::size_t i = 0; i < m; ++i) {
    double* o = out.data.data() + i * k;
    std::uint32_t* a = arg.data() + i * k;
    std::copy_n(v + i * nk * k, k, o);
    for (std::size_t j = 1; j < nk; ++j) {
      const double* row = v + (i * nk + j) * k;
      for (std::size_t c = 0; c < k; ++c)
        if (row[c] > o[c]) {
          o[c] = row[c];
          a[c] = static_cast<std::uint32_t>(j);
        }
    }
  }
  return tape.emit("max_over_neighbors", std::move(out), {&values}, [&] {
    return [values, arg = std::move(arg), m, nk, k](std::span<const double> g) {
      auto* gv = values.grad_sink();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t c = 0; c < k; ++c) (*gv)[(i * nk + arg[i * k + c]) * k + c] += g[i * k + c];
    };
  });
}

/// Row-wise cross scaling of two views: with a = |f_c^i| and b = |f_n^i|,
/// f_c^i is scaled by b / (a + b) and f_n^i by a / (a + b), so both outputs
/// have norm ab / (a + b). Rows where both norms vanish use 1/2 for both.
/// Returns the two scaled matrices.
inline std::pair<Var, Var> meshwise_normalize(Tape& tape, const Var& fc, const Var& fn) {
  require(fc.value().rank() == 2 && fn.value().rank() == 2 && fc.value().dim(0) == fn.value().dim(0),
          "meshwise_normalize: row counts differ (" + ad::shape_string(fc.shape()) + " vs " +
              ad::shape_string(fn.shape()) + ")");
  const std::size_t m = fc.value().dim(0), dc = fc.value().dim(1), dn = fn.value().dim(1);
  std::vector<double> na(m), nb(m), dc_factor(m), dn_factor(m);
  Tensor out_c({m, dc}), out_n({m, dn});
  for (std::size_t i = 0; i < m; ++i) {
    double sa = 0.0, sb = 0.0;
    for (double x : fc.value().row(i)) sa += x * x;
    for (double x : fn.value().row(i)) sb += x * x;
    na[i] = std::sqrt(sa);
    nb[i] = std::sqrt(sb);
    const double total = na[i] + nb[i];
    dc_factor[i] = total > 0.0 ? nb[i] / total : 0.5;
    dn_factor[i] = total > 0.0 ? na[i] / total : 0.5;
    for (std::size_t c = 0; c < dc; ++c) out_c(i, c) = dc_factor[i] * fc.value()(i, c);
    for (std::size_t c = 0; c < dn; ++c) out_n(i, c) = dn_factor[i] * fn.value()(i, c);
  }

  // One joint record computes the gradients of both outputs. Each output's
  // rule stashes its incoming gradient; whichever runs second (the record with
  // the lower tape position, i.e. out_c) applies the combined update.
  struct Shared {
    Var fc, fn;
    std::vector<double> na, nb, dc, dn;
    std::vector<double> g_n;  // gradient of out_n, filled by its rule
  };
  auto shared = std::make_shared<Shared>();
  shared->fc = fc;
  shared->fn = fn;
  shared->na = std::move(na);
  shared->nb = std::move(nb);
  shared->dc = std::move(dc_factor);
  shared->dn = std::move(dn_factor);

  Var c_out = tape.emit("meshwise_normalize", std::move(out_c), {&fc, &fn}, [&] {
    return [shared, m, dc, dn](std::span<const double> g_c) {
      const Shared& s = *shared;
      auto* gfc = s.fc.grad_sink();
      auto* gfn = s.fn.grad_sink();
      const bool have_n = !s.g_n.empty();
      for (std::size_t i = 0; i < m; ++i) {
        const double a = s.na[i], b = s.nb[i], total = a + b;
        auto xc = s.fc.value().row(i);
        auto xn = s.fn.value().row(i);
        // <g, x> terms for each view.
        double gcxc = 0.0, gnxn = 0.0;
        for (std::size_t c = 0; c < dc; ++c) gcxc += g_c[i * dc + c] * xc[c];
        if (have_n)
          for (std::size_t c = 0; c < dn; ++c) gnxn += s.g_n[i * dn + c] * xn[c];
        // d(delta_c)/da = -b / T^2, d(delta_c)/db = a / T^2, and the mirror for
        // delta_n. Scalar sensitivities of the loss to a and b:
        double sa = 0.0, sb = 0.0;
        if (total > 0.0) {
          const double t2 = total * total;
          sa = -b / t2 * gcxc + b / t2 * gnxn;
          sb = a / t2 * gcxc - a / t2 * gnxn;
        }
        // da/dx_c = x_c / a; undefined at a = 0, where the zero subgradient is used.
        if (gfc)
          for (std::size_t c = 0; c < dc; ++c)
            (*gfc)[i * dc + c] += s.dc[i] * g_c[i * dc + c] + (a > 0.0 ? sa * xc[c] / a : 0.0);
        if (gfn)
          for (std::size_t c = 0; c < dn; ++c)
            (*gfn)[i * dn + c] += (have_n ? s.dn[i] * s.g_n[i * dn + c] : 0.0) +
                                  (b > 0.0 ? sb * xn[c] / b : 0.0);
      }
    };
  });

  // out_n depends on both inputs too, but its gradient is only deposited here
  // and consumed by the rule above, which runs later during backward.
  Var n_out = tape.emit("meshwise_normalize", std::move(out_n), {&fc, &fn}, [&] {
    return [shared, c_out](std::span<const double> g_n) mutable {
      shared->g_n.assign(g_n.begin(), g_n.end());
      // Ensure the combined rule fires even when out_c itself received no gradient.
      c_out.mutable_grad();
    };
  });
  return {c_out, n_out};
}

}  // namespace tsgcn::nn
