#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "tsgcn/ad/eigen_view.hpp"
#include "tsgcn/ad/tape.hpp"

namespace tsgcn::ad {

inline constexpr double kLeakySlope = 0.01;
inline constexpr double kProbabilityFloor = 1e-12;

namespace detail {

inline void add_into(std::vector<double>* sink, std::span<const double> g) {
  if (!sink) return;
  for (std::size_t i = 0; i < g.size(); ++i) (*sink)[i] += g[i];
}

/// dst[c] += sum_r g[r, c], rows in order. Eigen's colwise().sum() picks a
/// summation order from the destination address, so results would vary
/// between runs in the last bits.
inline void add_column_sums(const double* g, std::size_t rows, std::size_t cols, double* dst) {
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) dst[c] += g[r * cols + c];
}

}  // namespace detail

/// Affine map applied independently to every row: out = x W + b.
/// x may have any rank; its last dimension must equal W's first.
inline Var linear(Tape& tape, const Var& x, const Var& weight, const Var& bias) {
  const Tensor& xv = x.value();
  const Tensor& wv = weight.value();
  require(wv.rank() == 2, "linear: weight must be rank 2, got " + shape_string(wv.shape));
  const std::size_t d_in = wv.dim(0), d_out = wv.dim(1);
  require(xv.rank() >= 1 && xv.channels() == d_in,
          "linear: input " + shape_string(xv.shape) + " does not match weight " +
              shape_string(wv.shape));
  require(bias.value().rank() == 1 && bias.numel() == d_out,
          "linear: bias " + shape_string(bias.shape()) + " does not match weight " +
              shape_string(wv.shape));
  const std::size_t rows = xv.rows();

  Shape out_shape = xv.shape;
  out_shape.back() = d_out;
  Tensor out(out_shape);
  auto y = detail::view(out.data.data(), rows, d_out);
  y.noalias() = detail::view(xv.data.data(), rows, d_in) * detail::view(wv.data.data(), d_in, d_out);
  const auto b = detail::view(bias.value().data.data(), 1, d_out);
  y.rowwise() += b.row(0);

  return tape.emit("linear", std::move(out), {&x, &weight, &bias}, [=] {
    return [x, weight, bias, rows, d_in, d_out](std::span<const double> g) {
      const auto gy = detail::view(g.data(), rows, d_out);
      if (auto* gx = x.grad_sink())
        detail::view(gx->data(), rows, d_in).noalias() +=
            gy * detail::view(weight.value().data.data(), d_in, d_out).transpose();
      if (auto* gw = weight.grad_sink())
        detail::view(gw->data(), d_in, d_out).noalias() +=
            detail::view(x.value().data.data(), rows, d_in).transpose() * gy;
      if (auto* gb = bias.grad_sink()) detail::add_column_sums(g.data(), rows, d_out, gb->data());
    };
  });
}

/// Plain 2-D matrix product.
inline Var matmul(Tape& tape, const Var& a, const Var& b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require(av.rank() == 2 && bv.rank() == 2 && av.dim(1) == bv.dim(0),
          "matmul: shapes " + shape_string(av.shape) + " and " + shape_string(bv.shape) +
              " do not conform");
  const std::size_t n = av.dim(0), m = av.dim(1), p = bv.dim(1);
  Tensor out({n, p});
  detail::view(out.data.data(), n, p).noalias() =
      detail::view(av.data.data(), n, m) * detail::view(bv.data.data(), m, p);
  return tape.emit("matmul", std::move(out), {&a, &b}, [=] {
    return [a, b, n, m, p](std::span<const double> g) {
      const auto gy = detail::view(g.data(), n, p);
      if (auto* ga = a.grad_sink())
        detail::view(ga->data(), n, m).noalias() +=
            gy * detail::view(b.value().data.data(), m, p).transpose();
      if (auto* gb = b.grad_sink())
        detail::view(gb->data(), m, p).noalias() +=
            detail::view(a.value().data.data(), n, m).transpose() * gy;
    };
  });
}

enum class NormMode { train, eval };

/// Running statistics of one batch-norm layer.
struct BatchNormStats {
  std::vector<double> mean;
  std::vector<double> var;

  explicit BatchNormStats(std::size_t channels = 0) : mean(channels, 0.0), var(channels, 1.0) {}
};

struct BatchNormOptions {
  double momentum = 0.1;
  double eps = 1e-5;
};

/// Per-channel standardization over every row of x followed by gamma * x + beta.
/// Train mode uses the batch statistics (biased variance) and folds them into
/// `stats` (unbiased variance); eval mode normalizes with `stats`.
inline Var batch_norm(Tape& tape, const Var& x, const Var& gamma, const Var& beta,
                      BatchNormStats& stats, NormMode mode, BatchNormOptions opt = {}) {
  const Tensor& xv = x.value();
  const std::size_t d = xv.channels();
  const std::size_t n = xv.rows();
  require(gamma.numel() == d && beta.numel() == d && stats.mean.size() == d,
          "batch_norm: parameter width does not match input " + shape_string(xv.shape));
  if (mode == NormMode::train && n < 2)
    throw ContractError("batch_norm: degenerate batch of " + std::to_string(n) +
                        " rows in train mode");

  std::vector<double> mean(d, 0.0), var(d, 0.0);
  if (mode == NormMode::train) {
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < d; ++c) mean[c] += xv.data[r * d + c];
    for (auto& m : mean) m /= static_cast<double>(n);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < d; ++c) {
        const double t = xv.data[r * d + c] - mean[c];
        var[c] += t * t;
      }
    for (auto& v : var) v /= static_cast<double>(n);
    const double unbias = static_cast<double>(n) / static_cast<double>(n - 1);
    for (std::size_t c = 0; c < d; ++c) {
      stats.mean[c] = (1.0 - opt.momentum) * stats.mean[c] + opt.momentum * mean[c];
      stats.var[c] = (1.0 - opt.momentum) * stats.var[c] + opt.momentum * var[c] * unbias;
    }
  } else {
    mean = stats.mean;
    var = stats.var;
  }

  std::vector<double> inv_std(d);
  for (std::size_t c = 0; c < d; ++c) inv_std[c] = 1.0 / std::sqrt(var[c] + opt.eps);

  const auto& gv = gamma.value().data;
  const auto& bv = beta.value().data;
  Tensor out(xv.shape);
  std::vector<double> xhat(xv.numel());
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < d; ++c) {
      const std::size_t i = r * d + c;
      xhat[i] = (xv.data[i] - mean[c]) * inv_std[c];
      out.data[i] = gv[c] * xhat[i] + bv[c];
    }

  return tape.emit("batch_norm", std::move(out), {&x, &gamma, &beta}, [&] {
    return [x, gamma, beta, xhat = std::move(xhat), inv_std, n, d,
            mode](std::span<const double> g) {
      std::vector<double> sum_g(d, 0.0), sum_gx(d, 0.0);
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < d; ++c) {
          sum_g[c] += g[r * d + c];
          sum_gx[c] += g[r * d + c] * xhat[r * d + c];
        }
      if (auto* gg = gamma.grad_sink())
        for (std::size_t c = 0; c < d; ++c) (*gg)[c] += sum_gx[c];
      if (auto* gb = beta.grad_sink())
        for (std::size_t c = 0; c < d; ++c) (*gb)[c] += sum_g[c];
      if (auto* gx = x.grad_sink()) {
        const auto& gam = gamma.value().data;
        const double inv_n = 1.0 / static_cast<double>(n);
        for (std::size_t r = 0; r < n; ++r)
          for (std::size_t c = 0; c < d; ++c) {
            const std::size_t i = r * d + c;
            const double scale = gam[c] * inv_std[c];
            if (mode == NormMode::train)
              (*gx)[i] += scale * (g[i] - inv_n * sum_g[c] - xhat[i] * inv_n * sum_gx[c]);
            else
              (*gx)[i] += scale * g[i];
          }
      }
    };
  });
}

inline Var leaky_relu(Tape& tape, const Var& x, double slope = kLeakySlope) {
  Tensor out(x.shape());
  const auto& xv = x.value().data;
  for (std::size_t i = 0; i < xv.size(); ++i) out.data[i] = xv[i] >= 0.0 ? xv[i] : slope * xv[i];
  return tape.emit("leaky_relu", std::move(out), {&x}, [=] {
    return [x, slope](std::span<const double> g) {
      auto* gx = x.grad_sink();
      const auto& xv = x.value().data;
      for (std::size_t i = 0; i < g.size(); ++i) (*gx)[i] += xv[i] >= 0.0 ? g[i] : slope * g[i];
    };
  });
}

namespace detail {

// Softmax over `count` entries spaced `stride` apart, for each of `groups`
// independent lanes laid out as (outer, count, inner).
inline void strided_softmax(const std::vector<double>& in, std::vector<double>& out,
                            std::size_t outer, std::size_t count, std::size_t inner) {
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t c = 0; c < inner; ++c) {
      const std::size_t base = o * count * inner + c;
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < count; ++j) mx = std::max(mx, in[base + j * inner]);
      double total = 0.0;
      for (std::size_t j = 0; j < count; ++j) {
        const double e = std::exp(in[base + j * inner] - mx);
        out[base + j * inner] = e;
        total += e;
      }
      for (std::size_t j = 0; j < count; ++j) out[base + j * inner] /= total;
    }
}

inline void strided_softmax_backward(const std::vector<double>& y, std::span<const double> g,
                                     std::vector<double>& gx, std::size_t outer,
                                     std::size_t count, std::size_t inner) {
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t c = 0; c < inner; ++c) {
      const std::size_t base = o * count * inner + c;
      double dot = 0.0;
      for (std::size_t j = 0; j < count; ++j) dot += y[base + j * inner] * g[base + j * inner];
      for (std::size_t j = 0; j < count; ++j) {
        const std::size_t i = base + j * inner;
        gx[i] += y[i] * (g[i] - dot);
      }
    }
}

inline Var softmax_along(Tape& tape, const char* op, const Var& x, std::size_t outer,
                         std::size_t count, std::size_t inner) {
  Tensor out(x.shape());
  strided_softmax(x.value().data, out.data, outer, count, inner);
  return tape.emit(op, std::move(out), {&x}, [&] {
    return [x, outer, count, inner](std::span<const double> g, const Tensor& y) {
      strided_softmax_backward(y.data, g, *x.grad_sink(), outer, count, inner);
    };
  });
}

}  // namespace detail

/// scores: M x K x k. For each center i and channel c, normalizes over the K
/// neighbors so that sum_j out[i, j, c] == 1.
inline Var softmax_over_neighbors(Tape& tape, const Var& scores) {
  require(scores.value().rank() == 3,
          "softmax_over_neighbors: expected M x K x k, got " + shape_string(scores.shape()));
  const auto& s = scores.shape();
  return detail::softmax_along(tape, "softmax_over_neighbors", scores, s[0], s[1], s[2]);
}

/// Softmax over the last dimension of every row.
inline Var softmax_rows(Tape& tape, const Var& logits) {
  const Tensor& v = logits.value();
  return detail::softmax_along(tape, "softmax_rows", logits, v.rows(), v.channels(), 1);
}

/// Mean negative log-likelihood of `labels` under row-stochastic `probs` (M x C).
/// Probabilities are clamped at 1e-12 before the log.
inline Var cross_entropy(Tape& tape, const Var& probs, std::span<const int> labels) {
  const Tensor& p = probs.value();
  require(p.rank() == 2, "cross_entropy: probs must be M x C, got " + shape_string(p.shape));
  const std::size_t m = p.dim(0), classes = p.dim(1);
  require(labels.size() == m, "cross_entropy: " + std::to_string(labels.size()) +
                                  " labels for " + std::to_string(m) + " rows");
  require(m > 0, "cross_entropy: empty input");
  double loss = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const int y = labels[i];
    require(y >= 0 && static_cast<std::size_t>(y) < classes,
            "cross_entropy: label " + std::to_string(y) + " outside [0, " +
                std::to_string(classes) + ")");
    double row_sum = 0.0;
    for (std::size_t c = 0; c < classes; ++c) row_sum += p(i, c);
    require(std::abs(row_sum - 1.0) <= 1e-6,
            "cross_entropy: row " + std::to_string(i) + " sums to " + std::to_string(row_sum));
    loss -= std::log(std::max(p(i, static_cast<std::size_t>(y)), kProbabilityFloor));
  }
  loss /= static_cast<double>(m);
  std::vector<int> ys(labels.begin(), labels.end());
  return tape.emit("cross_entropy", Tensor({}, {loss}), {&probs}, [&] {
    return [probs, ys = std::move(ys), m, classes](std::span<const double> g) {
      auto* gp = probs.grad_sink();
      const Tensor& p = probs.value();
      for (std::size_t i = 0; i < m; ++i) {
        const auto y = static_cast<std::size_t>(ys[i]);
        const double pi = p(i, y);
        if (pi > kProbabilityFloor)
          (*gp)[i * classes + y] -= g[0] / (static_cast<double>(m) * pi);
      }
    };
  });
}

/// Concatenation along the last dimension; all leading dimensions must agree.
inline Var concat_channels(Tape& tape, const std::vector<Var>& parts) {
  require(!parts.empty(), "concat_channels: nothing to concatenate");
  const Tensor& first = parts.front().value();
  const std::size_t rows = first.rows();
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const auto& p : parts) {
    const Tensor& v = p.value();
    require(v.rank() == first.rank() &&
                std::equal(v.shape.begin(), v.shape.end() - 1, first.shape.begin()),
            "concat_channels: " + shape_string(v.shape) + " does not match " +
                shape_string(first.shape));
    widths.push_back(v.channels());
    total += v.channels();
  }
  Shape shape = first.shape;
  shape.back() = total;
  Tensor out(shape);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto& src = parts[k].value().data;
    for (std::size_t r = 0; r < rows; ++r)
      std::copy_n(src.data() + r * widths[k], widths[k], out.data.data() + r * total + offset);
    offset += widths[k];
  }
  return tape.emit_many("concat_channels", std::move(out), parts, [&] {
    return [parts, widths, rows, total](std::span<const double> g) {
      std::size_t offset = 0;
      for (std::size_t k = 0; k < parts.size(); ++k) {
        if (auto* gp = parts[k].grad_sink())
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < widths[k]; ++c)
              (*gp)[r * widths[k] + c] += g[r * total + offset + c];
        offset += widths[k];
      }
    };
  });
}

/// Elementwise product of two equally shaped tensors.
inline Var mul(Tape& tape, const Var& a, const Var& b) {
  require(a.shape() == b.shape(),
          "mul: shapes " + shape_string(a.shape()) + " and " + shape_string(b.shape()) + " differ");
  Tensor out(a.shape());
  const auto& av = a.value().data;
  const auto& bv = b.value().data;
  for (std::size_t i = 0; i < av.size(); ++i) out.data[i] = av[i] * bv[i];
  return tape.emit("mul", std::move(out), {&a, &b}, [=] {
    return [a, b](std::span<const double> g) {
      if (auto* ga = a.grad_sink())
        for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * b.value().data[i];
      if (auto* gb = b.grad_sink())
        for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] += g[i] * a.value().data[i];
    };
  });
}

inline Var reshape(Tape& tape, const Var& x, Shape shape) {
  require(shape_numel(shape) == x.numel(),
          "reshape: cannot view " + shape_string(x.shape()) + " as " + shape_string(shape));
  Tensor out(std::move(shape), x.value().data);
  return tape.emit("reshape", std::move(out), {&x}, [=] {
    return [x](std::span<const double> g) { detail::add_into(x.grad_sink(), g); };
  });
}

/// Column-wise maximum over the rows of an M x d matrix -> 1 x d. The gradient
/// goes to the first row attaining the maximum.
inline Var max_over_rows(Tape& tape, const Var& x) {
  const Tensor& v = x.value();
  require(v.rank() == 2 && v.dim(0) > 0, "max_over_rows: expected non-empty M x d");
  const std::size_t m = v.dim(0), d = v.dim(1);
  Tensor out({1, d});
  std::vector<std::size_t> arg(d, 0);
  for (std::size_t c = 0; c < d; ++c) {
    double best = v(0, c);
    for (std::size_t r = 1; r < m; ++r)
      if (v(r, c) > best) {
        best = v(r, c);
        arg[c] = r;
      }
    out.data[c] = best;
  }
  return tape.emit("max_over_rows", std::move(out), {&x}, [&] {
    return [x, arg = std::move(arg), d](std::span<const double> g) {
      auto* gx = x.grad_sink();
      for (std::size_t c = 0; c < d; ++c) (*gx)[arg[c] * d + c] += g[c];
    };
  });
}

/// Sum of all entries -> scalar.
inline Var sum(Tape& tape, const Var& x) {
  double total = 0.0;
  for (double v : x.value().data) total += v;
  return tape.emit("sum", Tensor({}, {total}), {&x}, [=] {
    return [x](std::span<const double> g) {
      auto* gx = x.grad_sink();
      for (auto& v : *gx) v += g[0];
    };
  });
}

/// Multiplies every entry by a constant.
inline Var scale(Tape& tape, const Var& x, double factor) {
  Tensor out(x.shape());
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = x.value().data[i] * factor;
  return tape.emit("scale", std::move(out), {&x}, [=] {
    return [x, factor](std::span<const double> g) {
      auto* gx = x.grad_sink();
      for (std::size_t i = 0; i < g.size(); ++i) (*gx)[i] += factor * g[i];
    };
  });
}

}  // namespace tsgcn::ad
