#pragma once

#include <cstddef>

#include "tsgcn/ad/tensor.hpp"
#include "tsgcn/mesh/mesh.hpp"

namespace tsgcn::mesh {

inline constexpr std::size_t kViewWidth = 12;

/// Per-cell network input. Row i of `coords` holds the three vertex positions
/// of face i followed by its centroid; row i of `normals` holds the three
/// vertex normals followed by the face normal.
struct CellDescriptors {
  ad::Tensor coords;   // M x 12
  ad::Tensor normals;  // M x 12

  std::size_t cells() const noexcept { return coords.rows(); }
};

/// Unit vertex normals: area-weighted mean of incident face normals. A vertex
/// whose weighted sum vanishes is reported as degenerate.
inline std::vector<Vec3> vertex_normals(const Mesh& mesh) {
  std::vector<Vec3> acc(mesh.vertices.size(), Vec3{0.0, 0.0, 0.0});
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    // |cross| is twice the face area, so summing raw cross products weights by area.
    const Vec3 w = mesh.area_vector(f);
    for (auto v : mesh.faces[f]) acc[v] = acc[v] + w;
  }
  for (std::size_t v = 0; v < acc.size(); ++v) {
    const double n = norm(acc[v]);
    if (n == 0.0) continue;  // isolated vertex, never referenced by a face
    acc[v] = (1.0 / n) * acc[v];
  }
  return acc;
}

inline CellDescriptors cell_descriptors(const Mesh& mesh) {
  const std::size_t m = mesh.faces.size();
  for (std::size_t f = 0; f < m; ++f)
    if (mesh.area(f) < kDegenerateArea)
      throw DegenerateGeometryError("cell_descriptors: face " + std::to_string(f) +
                                    " has zero area");
  const auto vn = vertex_normals(mesh);
  for (const auto& face : mesh.faces)
    for (auto v : face)
      if (norm(vn[v]) == 0.0)
        throw DegenerateGeometryError("cell_descriptors: incident normals cancel at vertex " +
                                      std::to_string(v));

  CellDescriptors d{ad::Tensor({m, kViewWidth}), ad::Tensor({m, kViewWidth})};
  for (std::size_t f = 0; f < m; ++f) {
    const auto& face = mesh.faces[f];
    auto coords = d.coords.row(f);
    auto normals = d.normals.row(f);
    for (int k = 0; k < 3; ++k)
      for (int a = 0; a < 3; ++a) {
        coords[3 * k + a] = mesh.vertices[face[k]][a];
        normals[3 * k + a] = vn[face[k]][a];
      }
    const Vec3 c = mesh.centroid(f);
    const Vec3 area = mesh.area_vector(f);
    const Vec3 n = (1.0 / norm(area)) * area;
    for (int a = 0; a < 3; ++a) {
      coords[9 + a] = c[a];
      normals[9 + a] = n[a];
    }
  }
  return d;
}

}  // namespace tsgcn::mesh
