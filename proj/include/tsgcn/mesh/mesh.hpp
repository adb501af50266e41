#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tsgcn/util/error.hpp"

namespace tsgcn::mesh {

using Vec3 = std::array<double, 3>;
using Face = std::array<std::uint32_t, 3>;

inline constexpr double kDegenerateArea = 1e-12;

inline Vec3 operator+(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Vec3 operator*(double s, const Vec3& a) { return {s * a[0], s * a[1], s * a[2]}; }
inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

/// Triangle soup with shared vertices. `labels`, when present, holds one class
/// id per face.
struct Mesh {
  std::vector<Vec3> vertices;
  std::vector<Face> faces;
  std::optional<std::vector<int>> labels;

  std::size_t cell_count() const noexcept { return faces.size(); }

  /// Twice the signed-area vector of face f (counter-clockwise winding).
  Vec3 area_vector(std::size_t f) const {
    const auto& [a, b, c] = faces[f];
    return cross(vertices[b] - vertices[a], vertices[c] - vertices[a]);
  }
  double area(std::size_t f) const { return 0.5 * norm(area_vector(f)); }

  Vec3 centroid(std::size_t f) const {
    const auto& [a, b, c] = faces[f];
    return (1.0 / 3.0) * (vertices[a] + vertices[b] + vertices[c]);
  }
};

/// Checks the structural invariants: indices in range, one label per face and
/// no degenerate triangle.
inline void validate(const Mesh& mesh) {
  const std::size_t v = mesh.vertices.size();
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    const auto& face = mesh.faces[f];
    for (auto idx : face)
      if (idx >= v)
        throw ContractError("face " + std::to_string(f) + " references vertex " +
                            std::to_string(idx) + " of " + std::to_string(v));
    if (face[0] == face[1] || face[1] == face[2] || face[0] == face[2])
      throw DegenerateGeometryError("face " + std::to_string(f) + " repeats a vertex index");
    if (mesh.area(f) < kDegenerateArea)
      throw DegenerateGeometryError("face " + std::to_string(f) + " has zero area");
  }
  if (mesh.labels && mesh.labels->size() != mesh.faces.size())
    throw ContractError("mesh has " + std::to_string(mesh.faces.size()) + " faces but " +
                        std::to_string(mesh.labels->size()) + " labels");
}

/// V - E + F, counting each undirected edge once.
inline long euler_characteristic(const Mesh& mesh) {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
  edges.reserve(mesh.faces.size() * 3);
  for (const auto& f : mesh.faces)
    for (int k = 0; k < 3; ++k) {
      auto a = f[k], b = f[(k + 1) % 3];
      edges.emplace_back(std::min(a, b), std::max(a, b));
    }
  std::sort(edges.begin(), edges.end());
  const auto unique_edges =
      static_cast<long>(std::unique(edges.begin(), edges.end()) - edges.begin());
  return static_cast<long>(mesh.vertices.size()) - unique_edges +
         static_cast<long>(mesh.faces.size());
}

}  // namespace tsgcn::mesh
