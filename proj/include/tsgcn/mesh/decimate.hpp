#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <queue>
#include <tuple>
#include <vector>

#include "tsgcn/knn/kd_tree.hpp"
#include "tsgcn/mesh/mesh.hpp"

namespace tsgcn::mesh {

namespace detail {

class EdgeCollapser {
 public:
  explicit EdgeCollapser(const Mesh& mesh)
      : pos_(mesh.vertices),
        faces_(mesh.faces),
        face_alive_(mesh.faces.size(), true),
        vertex_alive_(mesh.vertices.size(), true),
        incident_(mesh.vertices.size()),
        alive_faces_(mesh.faces.size()) {
    for (std::size_t f = 0; f < faces_.size(); ++f)
      for (auto v : faces_[f]) incident_[v].push_back(static_cast<std::uint32_t>(f));
    for (std::size_t f = 0; f < faces_.size(); ++f)
      for (int k = 0; k < 3; ++k) push_edge(faces_[f][k], faces_[f][(k + 1) % 3]);
  }

  std::size_t run(std::size_t target) {
    // A rejected edge can become collapsible after nearby collapses, so when
    // the queue drains, all edges are queued again until a pass makes no progress.
    for (;;) {
      const std::size_t before = alive_faces_;
      while (alive_faces_ > target && !queue_.empty()) {
        const auto [len2, u, v] = queue_.top();
        queue_.pop();
        if (!vertex_alive_[u] || !vertex_alive_[v]) continue;
        if (length2(u, v) != len2) continue;  // stale entry, a fresher one exists
        try_collapse(u, v);
      }
      if (alive_faces_ <= target || alive_faces_ == before) break;
      for (std::size_t f = 0; f < faces_.size(); ++f)
        if (face_alive_[f])
          for (int k = 0; k < 3; ++k) push_edge(faces_[f][k], faces_[f][(k + 1) % 3]);
    }
    return alive_faces_;
  }

  Mesh result() const {
    std::vector<std::uint32_t> remap(pos_.size(), UINT32_MAX);
    Mesh out;
    for (std::size_t f = 0; f < faces_.size(); ++f)
      if (face_alive_[f])
        for (auto v : faces_[f]) remap[v] = 0;
    for (std::size_t v = 0; v < pos_.size(); ++v)
      if (remap[v] == 0) {
        remap[v] = static_cast<std::uint32_t>(out.vertices.size());
        out.vertices.push_back(pos_[v]);
      }
    for (std::size_t f = 0; f < faces_.size(); ++f)
      if (face_alive_[f])
        out.faces.push_back({remap[faces_[f][0]], remap[faces_[f][1]], remap[faces_[f][2]]});
    return out;
  }

 private:
  using Entry = std::tuple<double, std::uint32_t, std::uint32_t>;

  double length2(std::uint32_t u, std::uint32_t v) const {
    const Vec3 d = pos_[u] - pos_[v];
    return dot(d, d);
  }

  void push_edge(std::uint32_t a, std::uint32_t b) {
    const auto u = std::min(a, b), v = std::max(a, b);
    queue_.emplace(length2(u, v), u, v);
  }

  void prune(std::uint32_t v) {
    auto& list = incident_[v];
    list.erase(std::remove_if(list.begin(), list.end(), [&](auto f) { return !face_alive_[f]; }),
               list.end());
  }

  static bool has(const Face& f, std::uint32_t v) { return f[0] == v || f[1] == v || f[2] == v; }

  std::vector<std::uint32_t> neighbors(std::uint32_t v) const {
    std::vector<std::uint32_t> out;
    for (auto f : incident_[v])
      for (auto w : faces_[f])
        if (w != v) out.push_back(w);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  std::size_t faces_on_edge(std::uint32_t a, std::uint32_t b) const {
    std::size_t n = 0;
    for (auto f : incident_[a])
      if (has(faces_[f], b)) ++n;
    return n;
  }

  bool on_boundary(std::uint32_t v) const {
    for (auto w : neighbors(v))
      if (faces_on_edge(v, w) == 1) return true;
    return false;
  }

  void try_collapse(std::uint32_t u, std::uint32_t v) {
    prune(u);
    prune(v);
    std::vector<std::uint32_t> shared, opposite;
    for (auto f : incident_[u])
      if (has(faces_[f], v)) {
        shared.push_back(f);
        for (auto w : faces_[f])
          if (w != u && w != v) opposite.push_back(w);
      }
    if (shared.empty() || shared.size() > 2) return;  // gone, or non-manifold edge

    // Link condition: the only vertices adjacent to both ends are the apexes
    // of the faces on the edge. Anything else would pinch the surface.
    const auto nu = neighbors(u), nv = neighbors(v);
    std::vector<std::uint32_t> common;
    std::set_intersection(nu.begin(), nu.end(), nv.begin(), nv.end(), std::back_inserter(common));
    std::sort(opposite.begin(), opposite.end());
    if (common != opposite) return;

    const bool bu = on_boundary(u), bv = on_boundary(v);
    if (shared.size() == 2 && bu && bv) return;  // interior edge joining two boundary loops

    Vec3 target = 0.5 * (pos_[u] + pos_[v]);
    if (bu && !bv) target = pos_[u];
    if (bv && !bu) target = pos_[v];

    // Surviving faces around u and v with v renamed to u, checked against
    // normal flips, degeneracy and duplication.
    std::vector<std::pair<std::uint32_t, Face>> updated;
    std::vector<Face> keys;
    for (auto w : {u, v})
      for (auto f : incident_[w]) {
        if (std::find(shared.begin(), shared.end(), f) != shared.end()) continue;
        if (w == v && has(faces_[f], u)) continue;
        Face nf = faces_[f];
        for (auto& x : nf)
          if (x == v) x = u;
        auto corner = [&](std::uint32_t x) { return x == u ? target : pos_[x]; };
        const Vec3 old_n =
            cross(pos_[faces_[f][1]] - pos_[faces_[f][0]], pos_[faces_[f][2]] - pos_[faces_[f][0]]);
        const Vec3 new_n = cross(corner(nf[1]) - corner(nf[0]), corner(nf[2]) - corner(nf[0]));
        if (dot(old_n, new_n) < 0.0) return;
        if (0.5 * norm(new_n) < kDegenerateArea) return;
        Face key = nf;
        std::sort(key.begin(), key.end());
        keys.push_back(key);
        updated.emplace_back(f, nf);
      }
    std::sort(keys.begin(), keys.end());
    if (std::adjacent_find(keys.begin(), keys.end()) != keys.end()) return;

    for (auto f : shared) {
      face_alive_[f] = false;
      --alive_faces_;
    }
    for (const auto& [f, nf] : updated) {
      if (has(faces_[f], v)) incident_[u].push_back(f);
      faces_[f] = nf;
    }
    vertex_alive_[v] = false;
    incident_[v].clear();
    pos_[u] = target;
    prune(u);
    for (auto w : neighbors(u)) push_edge(u, w);
  }

  std::vector<Vec3> pos_;
  std::vector<Face> faces_;
  std::vector<bool> face_alive_;
  std::vector<bool> vertex_alive_;
  std::vector<std::vector<std::uint32_t>> incident_;
  std::size_t alive_faces_;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue_;
};

}  // namespace detail

/// Reduces `mesh` to at most `target_cells` faces by repeatedly collapsing the
/// shortest edge into its midpoint (or onto the boundary end of a boundary-
/// touching edge). A collapse is skipped if it would break the link condition,
/// flip or flatten a surrounding face, or duplicate a face, so the topology of
/// the input is kept. Labels are transferred from the input face whose
/// centroid is nearest to each output centroid.
inline Mesh decimate(const Mesh& mesh, std::size_t target_cells) {
  require(target_cells >= 4, "decimate: target_cells must be at least 4");
  if (mesh.faces.size() <= target_cells) return mesh;

  detail::EdgeCollapser collapser(mesh);
  const std::size_t achieved = collapser.run(target_cells);
  if (achieved > target_cells) throw DecimationError(achieved, target_cells);
  Mesh out = collapser.result();

  if (mesh.labels) {
    std::vector<double> centroids;
    centroids.reserve(mesh.faces.size() * 3);
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
      const Vec3 c = mesh.centroid(f);
      centroids.insert(centroids.end(), c.begin(), c.end());
    }
    const knn::KdTree tree(centroids, 3);
    std::vector<int> labels(out.faces.size());
    for (std::size_t f = 0; f < out.faces.size(); ++f) {
      const Vec3 c = out.centroid(f);
      labels[f] = (*mesh.labels)[tree.nearest(c.data(), 1, tree.size()).front().index];
    }
    out.labels = std::move(labels);
  }
  return out;
}

}  // namespace tsgcn::mesh
