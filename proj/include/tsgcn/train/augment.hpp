#pragma once

#include <cmath>
#include <numbers>

#include "tsgcn/mesh/mesh.hpp"
#include "tsgcn/util/rng.hpp"

namespace tsgcn::train {

inline constexpr double kMaxShift = 10.0;
inline constexpr double kMaxAngle = std::numbers::pi / 6.0;

struct RigidMotion {
  mesh::Vec3 shift{0.0, 0.0, 0.0};
  double angle = 0.0;  // about the y-axis; (1,0,0) goes to (cos a, 0, -sin a)
};

/// Rotates every vertex about the y-axis through the origin, then translates.
inline mesh::Mesh apply_motion(const mesh::Mesh& in, const RigidMotion& m) {
  mesh::Mesh out = in;
  const double c = std::cos(m.angle), s = std::sin(m.angle);
  for (auto& v : out.vertices) {
    const double x = v[0], z = v[2];
    v[0] = c * x + s * z + m.shift[0];
    v[1] = v[1] + m.shift[1];
    v[2] = -s * x + c * z + m.shift[2];
  }
  return out;
}

/// Draws a shift uniform per axis in [-10, 10] and an angle uniform in [-pi/6, pi/6].
inline RigidMotion sample_motion(Rng& rng) {
  RigidMotion m;
  for (auto& d : m.shift) d = rng.uniform(-kMaxShift, kMaxShift);
  m.angle = rng.uniform(-kMaxAngle, kMaxAngle);
  return m;
}

inline mesh::Mesh augment(const mesh::Mesh& in, Rng& rng) { return apply_motion(in, sample_motion(rng)); }

}  // namespace tsgcn::train
