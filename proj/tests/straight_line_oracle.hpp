#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "tsgcn/nn/params.hpp"
#include "tsgcn/mesh/descriptors.hpp"

namespace tsgcn::test_util {

using ad::Tensor;
using nn::ParamStore;

// Plain dense matrices for the straight-line oracle.
struct Mat {
  std::size_t rows = 0, cols = 0;
  std::vector<double> a;
  Mat(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}
  double& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }
};

Mat from(const Tensor& t) {
  Mat m(t.dim(0), t.dim(1));
  m.a = t.data;
  return m;
}

double leaky(double x) { return x > 0 ? x : 0.01 * x; }

/// Forward pass of the full variant written out with plain loops, reading
/// parameters by name. Train-mode batch norm, graphs rebuilt per layer.
struct StraightLineOracle {
  const ParamStore& p;

  const std::vector<double>& val(const std::string& n) const { return p.param(n).value().data; }

  Mat lin(const Mat& x, const std::string& name) const {
    const auto& w = val(name + ".weight");
    const auto& b = val(name + ".bias");
    const std::size_t out = b.size();
    Mat y(x.rows, out);
    for (std::size_t i = 0; i < x.rows; ++i)
      for (std::size_t c = 0; c < out; ++c) {
        double s = b[c];
        for (std::size_t r = 0; r < x.cols; ++r) s += x(i, r) * w[r * out + c];
        y(i, c) = s;
      }
    return y;
  }

  Mat bn(Mat x, const std::string& name) const {
    const auto& g = val(name + ".bn.gamma");
    const auto& be = val(name + ".bn.beta");
    for (std::size_t c = 0; c < x.cols; ++c) {
      double mean = 0, var = 0;
      for (std::size_t i = 0; i < x.rows; ++i) mean += x(i, c);
      mean /= x.rows;
      for (std::size_t i = 0; i < x.rows; ++i) var += (x(i, c) - mean) * (x(i, c) - mean);
      var /= x.rows;
      for (std::size_t i = 0; i < x.rows; ++i) x(i, c) = g[c] * (x(i, c) - mean) / std::sqrt(var + 1e-5) + be[c];
    }
    return x;
  }

  static Mat act(Mat x) {
    for (auto& v : x.a) v = leaky(v);
    return x;
  }

  Mat block(const Mat& x, const std::string& name) const { return act(bn(lin(x, name), name)); }

  Mat tnet(const Mat& x, const std::string& s) const {
    Mat h = block(block(x, s + ".tnet.conv1"), s + ".tnet.conv2");
    Mat g(1, h.cols);
    for (std::size_t c = 0; c < h.cols; ++c) {
      g(0, c) = h(0, c);
      for (std::size_t i = 1; i < h.rows; ++i) g(0, c) = std::max(g(0, c), h(i, c));
    }
    Mat t = lin(act(lin(g, s + ".tnet.fc1")), s + ".tnet.fc2");
    const std::size_t d = x.cols;
    Mat out(x.rows, d);
    for (std::size_t i = 0; i < x.rows; ++i)
      for (std::size_t c = 0; c < d; ++c)
        for (std::size_t r = 0; r < d; ++r) out(i, c) += x(i, r) * t(0, r * d + c);
    return out;
  }

  static std::vector<std::vector<std::size_t>> knn(const Mat& x, std::size_t k) {
    std::vector<std::vector<std::size_t>> out(x.rows);
    for (std::size_t i = 0; i < x.rows; ++i) {
      std::vector<std::pair<double, std::size_t>> d;
      for (std::size_t j = 0; j < x.rows; ++j) {
        if (j == i) continue;
        double s = 0;
        for (std::size_t c = 0; c < x.cols; ++c) s += (x(i, c) - x(j, c)) * (x(i, c) - x(j, c));
        d.emplace_back(s, j);
      }
      std::sort(d.begin(), d.end());
      for (std::size_t j = 0; j < k; ++j) out[i].push_back(d[j].second);
    }
    return out;
  }

  // Edge rows (i, j) in row-major order, each the concatenation a (+) b.
  static Mat edges(const Mat& x, const std::vector<std::vector<std::size_t>>& g, bool delta) {
    const std::size_t k = g[0].size(), d = x.cols;
    Mat e(x.rows * k, 2 * d);
    for (std::size_t i = 0; i < x.rows; ++i)
      for (std::size_t j = 0; j < k; ++j)
        for (std::size_t c = 0; c < d; ++c) {
          const double xi = x(i, c), xj = x(g[i][j], c);
          e(i * k + j, c) = delta ? xi - xj : xi;
          e(i * k + j, d + c) = xj;
        }
    return e;
  }

  Mat layer(const Mat& x, const std::vector<std::vector<std::size_t>>& g, const std::string& name,
            bool attention) const {
    const std::size_t k = g[0].size();
    const Mat v = block(edges(x, g, false), name + ".calib");
    Mat out(x.rows, v.cols);
    if (!attention) {
      for (std::size_t i = 0; i < x.rows; ++i)
        for (std::size_t c = 0; c < v.cols; ++c) {
          double best = v(i * k, c);
          for (std::size_t j = 1; j < k; ++j) best = std::max(best, v(i * k + j, c));
          out(i, c) = best;
        }
      return out;
    }
    const Mat s = act(lin(edges(x, g, true), name + ".score"));
    for (std::size_t i = 0; i < x.rows; ++i)
      for (std::size_t c = 0; c < v.cols; ++c) {
        double total = 0, acc = 0;
        for (std::size_t j = 0; j < k; ++j) total += std::exp(s(i * k + j, c));
        for (std::size_t j = 0; j < k; ++j) acc += std::exp(s(i * k + j, c)) / total * v(i * k + j, c);
        out(i, c) = acc;
      }
    return out;
  }

  static Mat hcat(const std::vector<Mat>& parts) {
    std::size_t cols = 0;
    for (const auto& p : parts) cols += p.cols;
    Mat out(parts[0].rows, cols);
    for (std::size_t i = 0; i < out.rows; ++i) {
      std::size_t off = 0;
      for (const auto& p : parts) {
        for (std::size_t c = 0; c < p.cols; ++c) out(i, off + c) = p(i, c);
        off += p.cols;
      }
    }
    return out;
  }

  // Full variant: attention on coordinates, max pooling on normals, graphs from the C stream.
  Mat forward(const mesh::CellDescriptors& desc, std::size_t k, std::size_t head_stages) const {
    Mat c = tnet(from(desc.coords), "c"), n = tnet(from(desc.normals), "n");
    std::vector<Mat> cs, ns;
    for (int l = 1; l <= 3; ++l) {
      const auto g = knn(c, k);
      c = layer(c, g, "c.layer" + std::to_string(l), true);
      n = layer(n, g, "n.layer" + std::to_string(l), false);
      cs.push_back(c);
      ns.push_back(n);
    }
    Mat fc = block(hcat(cs), "fuse.c"), fn = block(hcat(ns), "fuse.n");
    for (std::size_t i = 0; i < fc.rows; ++i) {
      double a = 0, b = 0;
      for (std::size_t j = 0; j < fc.cols; ++j) a += fc(i, j) * fc(i, j);
      for (std::size_t j = 0; j < fn.cols; ++j) b += fn(i, j) * fn(i, j);
      a = std::sqrt(a);
      b = std::sqrt(b);
      for (std::size_t j = 0; j < fc.cols; ++j) fc(i, j) *= b / (a + b);
      for (std::size_t j = 0; j < fn.cols; ++j) fn(i, j) *= a / (a + b);
    }
    Mat x = hcat({fc, fn});
    const Mat beta = block(x, "fuse.att");
    for (std::size_t i = 0; i < x.a.size(); ++i) x.a[i] *= beta.a[i];
    for (std::size_t s = 0; s < head_stages; ++s) x = block(x, "head." + std::to_string(s));
    Mat z = lin(x, "head." + std::to_string(head_stages));
    for (std::size_t i = 0; i < z.rows; ++i) {
      double mx = z(i, 0), total = 0;
      for (std::size_t j = 1; j < z.cols; ++j) mx = std::max(mx, z(i, j));
      for (std::size_t j = 0; j < z.cols; ++j) total += std::exp(z(i, j) - mx);
      for (std::size_t j = 0; j < z.cols; ++j) z(i, j) = std::exp(z(i, j) - mx) / total;
    }
    return z;
  }
};

}  // namespace tsgcn::test_util
