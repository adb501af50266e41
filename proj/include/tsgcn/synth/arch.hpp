#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <vector>

#include "tsgcn/mesh/mesh.hpp"
#include "tsgcn/util/rng.hpp"

namespace tsgcn::synth {

/// Parameters of one synthetic dental arch: a U-shaped strip (the gingiva,
/// class 0) carrying `teeth` mirrored pairs of Gaussian bumps. Bump pair j,
/// counted from the midline, is class j + 1 on both sides.
struct ArchSpec {
  int teeth = 4;
  std::size_t cells = 1024;
  double radius = 25.0;
  double width = 12.0;          // strip extent across the arch
  double bump_height = 4.0;
  double bump_width = 0.0;      // arc-length sigma of a bump; 0 picks a quarter pitch
  double gum_height = 1.5;      // height of the ridge profile across the strip
  std::uint64_t seed = 1;

  int classes() const noexcept { return teeth + 1; }
};

inline constexpr double kArchHalfAngle = 0.42 * std::numbers::pi;
inline constexpr double kFootprint = 1.6;  // bump region radius, in sigmas

namespace detail {

struct Bump {
  double theta;
  double height;
  int label;
};

}  // namespace detail

/// Deterministic per seed. Throws ContractError for invalid specs, including
/// bumps whose labeled footprints would overlap.
inline mesh::Mesh generate_arch(const ArchSpec& spec) {
  require(spec.teeth >= 0, "generate_arch: negative tooth count");
  require(spec.cells >= 100, "generate_arch: need at least 100 cells");
  require(spec.radius > 0 && spec.width > 0 && spec.bump_height > 0 && spec.gum_height > 0 &&
              spec.bump_width >= 0,
          "generate_arch: geometric parameters must be positive");
  require(spec.width < spec.radius, "generate_arch: strip wider than the arch radius");

  Rng rng(spec.seed);
  const double radius = spec.radius * (1.0 + 0.05 * rng.uniform(-1.0, 1.0));
  const double span = 0.9 * kArchHalfAngle;  // teeth occupy this half-angle
  const double pitch = spec.teeth > 0 ? span / spec.teeth : span;
  const double sigma_arc = spec.bump_width > 0 ? spec.bump_width : 0.25 * pitch * radius;
  const double sigma_across = spec.width / 5.0;
  // Neighboring centers are one pitch apart (also across the midline); allow
  // the maximum center jitter on both.
  const double jitter = 0.05 * pitch;
  if (spec.teeth > 0 && 2.0 * kFootprint * sigma_arc >= (pitch - 2.0 * jitter) * radius)
    throw ContractError("generate_arch: bumps overlap (bump_width too large for " +
                        std::to_string(spec.teeth) + " teeth)");

  std::vector<detail::Bump> bumps;
  for (int j = 0; j < spec.teeth; ++j)
    for (int side : {-1, 1}) {
      const double center = (j + 0.5) * pitch + jitter * rng.uniform(-1.0, 1.0);
      bumps.push_back({side * center, spec.bump_height * (1.0 + 0.15 * rng.uniform(-1.0, 1.0)),
                       j + 1});
    }

  // Grid resolution: quads split in two, aspect matched to arc length / width.
  const double arc_length = 2.0 * kArchHalfAngle * radius;
  const auto half_cells = static_cast<double>(spec.cells) / 2.0;
  const auto nv = static_cast<std::size_t>(
      std::max(2.0, std::round(std::sqrt(half_cells * spec.width / arc_length))));
  const auto nu = static_cast<std::size_t>(
      std::max(2.0, std::round(half_cells / static_cast<double>(nv))));

  struct Param {
    double theta, s;
  };
  std::vector<Param> params;
  params.reserve((nu + 1) * (nv + 1));
  const double dtheta = 2.0 * kArchHalfAngle / static_cast<double>(nu);
  const double ds = spec.width / static_cast<double>(nv);
  for (std::size_t i = 0; i <= nu; ++i)
    for (std::size_t j = 0; j <= nv; ++j) {
      double theta = -kArchHalfAngle + static_cast<double>(i) * dtheta;
      double s = -0.5 * spec.width + static_cast<double>(j) * ds;
      // Interior vertices are jittered so no two cells are exact mirror images.
      if (i > 0 && i < nu) theta += 0.1 * dtheta * rng.uniform(-1.0, 1.0);
      if (j > 0 && j < nv) s += 0.1 * ds * rng.uniform(-1.0, 1.0);
      params.push_back({theta, s});
    }

  auto bump_field = [&](const detail::Bump& b, double theta, double s) {
    const double a = radius * (theta - b.theta) / sigma_arc;
    const double c = s / sigma_across;
    return a * a + c * c;  // squared normalized distance
  };

  mesh::Mesh out;
  out.vertices.reserve(params.size());
  for (const auto& p : params) {
    const double across = 2.0 * p.s / spec.width;
    double y = spec.gum_height * (1.0 - across * across);
    for (const auto& b : bumps) y += b.height * std::exp(-0.5 * bump_field(b, p.theta, p.s));
    y += 0.02 * rng.uniform(-1.0, 1.0);
    const double r = radius + p.s;
    out.vertices.push_back({r * std::sin(p.theta), y, r * std::cos(p.theta)});
  }

  auto vid = [&](std::size_t i, std::size_t j) { return static_cast<std::uint32_t>(i * (nv + 1) + j); };
  for (std::size_t i = 0; i < nu; ++i)
    for (std::size_t j = 0; j < nv; ++j) {
      const auto v00 = vid(i, j), v10 = vid(i + 1, j), v01 = vid(i, j + 1), v11 = vid(i + 1, j + 1);
      // Winding gives upward (+y) face normals; diagonals alternate.
      if ((i + j) % 2 == 0) {
        out.faces.push_back({v00, v01, v11});
        out.faces.push_back({v00, v11, v10});
      } else {
        out.faces.push_back({v00, v01, v10});
        out.faces.push_back({v01, v11, v10});
      }
    }

  std::vector<int> labels(out.faces.size(), 0);
  const double footprint2 = kFootprint * kFootprint;
  for (std::size_t f = 0; f < out.faces.size(); ++f) {
    double theta = 0.0, s = 0.0;
    for (auto v : out.faces[f]) {
      theta += params[v].theta / 3.0;
      s += params[v].s / 3.0;
    }
    double best = footprint2;
    for (const auto& b : bumps) {
      const double d2 = bump_field(b, theta, s);
      if (d2 < best) {
        best = d2;
        labels[f] = b.label;
      }
    }
  }
  out.labels = std::move(labels);
  mesh::validate(out);
  return out;
}

}  // namespace tsgcn::synth
