#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <span>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "travel/core.hpp"

namespace travel {

enum class NodeKind : std::uint8_t { kUnknown, kTerrain, kObstacle };

inline const char* to_string(NodeKind k) {
  switch (k) {
    case NodeKind::kUnknown: return "unknown";
    case NodeKind::kTerrain: return "terrain";
    case NodeKind::kObstacle: return "obstacle";
  }
  return "?";
}

/// Plane s.p + d = 0 with unit normal s, s_z >= 0.
struct Plane {
  Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
  double d = 0.0;

  double signed_distance(const Eigen::Vector3d& p) const { return normal.dot(p) + d; }

  /// Height of the plane above (x, y). Requires normal.z() != 0.
  double height_at(double x, double y) const {
    return -(normal.x() * x + normal.y() * y + d) / normal.z();
  }
};

struct RefinedPlane {
  Plane plane;
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
};

/// Lower bound on the smallest eigenvalue when scoring a node.
inline constexpr double kMinEigenvalue = 1e-9;
/// Lower bound on the corner-to-mean distance in the corner average.
inline constexpr double kMinCornerDistance = 1e-6;
inline constexpr std::size_t kNoNeighbor = std::numeric_limits<std::size_t>::max();

struct TriGridNode {
  std::size_t index = 0;
  std::array<std::size_t, 3> corners{};
  std::vector<std::size_t> point_indices;

  std::optional<Plane> plane;
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  Eigen::Vector3d eigenvalues = Eigen::Vector3d::Zero();  // descending
  double weight = 0.0;
  NodeKind kind = NodeKind::kUnknown;

  bool traversable = false;
  int region = -1;  // search region tag when traversable
  std::optional<RefinedPlane> refined;
};

struct CornerSample {
  double z = 0.0;       // contributing plane height at the corner
  double weight = 0.0;  // w / |c - m|_xy of the contributing node
};

struct TriGridCorner {
  Eigen::Vector2d xy = Eigen::Vector2d::Zero();
  std::vector<CornerSample> samples;
  std::optional<double> refined_z;
};

/// Node score: (cohesion + planarity) / linearity.
inline double node_weight(double l1, double l2, double l3) {
  return l2 * (l1 + l2) / (l1 * std::max(l3, kMinEigenvalue));
}

// ---------------------------------------------------------------------------
// Field layout
//
// The square [-extent, extent]^2 is cut into n x n cells of side r. Each cell
// is split by its diagonals into four triangles meeting at the cell center:
// 0 = east, 1 = north, 2 = west, 3 = south. Node index = 4 * cell + triangle,
// cell = iy * n + ix. Corners are the (n+1)^2 lattice vertices followed by the
// n^2 cell centers.
// ---------------------------------------------------------------------------

class TriGridField {
 public:
  TriGridField(double resolution, double extent)
      : resolution_(resolution), extent_(extent),
        cells_(static_cast<std::size_t>(std::max(1.0, std::ceil(2.0 * extent / resolution - 1e-9)))) {
    const std::size_t n = cells_;
    corners_.resize((n + 1) * (n + 1) + n * n);
    for (std::size_t iy = 0; iy <= n; ++iy)
      for (std::size_t ix = 0; ix <= n; ++ix)
        corners_[lattice_id(ix, iy)].xy = {-extent_ + static_cast<double>(ix) * resolution_,
                                           -extent_ + static_cast<double>(iy) * resolution_};
    for (std::size_t iy = 0; iy < n; ++iy)
      for (std::size_t ix = 0; ix < n; ++ix)
        corners_[center_id(ix, iy)].xy = {-extent_ + (static_cast<double>(ix) + 0.5) * resolution_,
                                          -extent_ + (static_cast<double>(iy) + 0.5) * resolution_};

    nodes_.resize(4 * n * n);
    adjacency_.assign(nodes_.size(), {kNoNeighbor, kNoNeighbor, kNoNeighbor});
    for (std::size_t iy = 0; iy < n; ++iy) {
      for (std::size_t ix = 0; ix < n; ++ix) {
        const std::size_t cell = iy * n + ix;
        const std::size_t c = center_id(ix, iy);
        const std::size_t sw = lattice_id(ix, iy), se = lattice_id(ix + 1, iy);
        const std::size_t ne = lattice_id(ix + 1, iy + 1), nw = lattice_id(ix, iy + 1);
        const std::array<std::array<std::size_t, 3>, 4> tri_corners{{
            {c, se, ne}, {c, ne, nw}, {c, nw, sw}, {c, sw, se}}};
        for (std::size_t t = 0; t < 4; ++t) {
          auto& node = nodes_[4 * cell + t];
          node.index = 4 * cell + t;
          node.corners = tri_corners[t];
          auto& adj = adjacency_[node.index];
          adj[0] = 4 * cell + (t + 3) % 4;
          adj[1] = 4 * cell + (t + 1) % 4;
        }
        if (ix + 1 < n) adjacency_[4 * cell + 0][2] = 4 * (cell + 1) + 2;
        if (iy + 1 < n) adjacency_[4 * cell + 1][2] = 4 * (cell + n) + 3;
        if (ix > 0) adjacency_[4 * cell + 2][2] = 4 * (cell - 1) + 0;
        if (iy > 0) adjacency_[4 * cell + 3][2] = 4 * (cell - n) + 1;
      }
    }
  }

  double resolution() const noexcept { return resolution_; }
  double extent() const noexcept { return extent_; }
  std::size_t cells_per_side() const noexcept { return cells_; }

  std::vector<TriGridNode>& nodes() noexcept { return nodes_; }
  const std::vector<TriGridNode>& nodes() const noexcept { return nodes_; }
  std::vector<TriGridCorner>& corners() noexcept { return corners_; }
  const std::vector<TriGridCorner>& corners() const noexcept { return corners_; }
  const std::array<std::size_t, 3>& neighbors(std::size_t node) const { return adjacency_[node]; }

  /// Points outside the field, in input order.
  std::vector<std::size_t>& overflow() noexcept { return overflow_; }
  const std::vector<std::size_t>& overflow() const noexcept { return overflow_; }

  bool contains(double x, double y) const noexcept {
    return std::abs(x) <= extent_ && std::abs(y) <= extent_;
  }

  /// Node owning (x, y); nullopt outside the field. Every in-field location
  /// maps to exactly one node: cells are half-open on their upper edges and
  /// triangle boundaries are resolved by the sign rule below.
  std::optional<std::size_t> locate(double x, double y) const noexcept {
    if (!contains(x, y)) return std::nullopt;
    const auto clamp_cell = [&](double v) {
      const double f = std::floor((v + extent_) / resolution_);
      return static_cast<std::size_t>(std::clamp(f, 0.0, static_cast<double>(cells_ - 1)));
    };
    const std::size_t ix = clamp_cell(x), iy = clamp_cell(y);
    const Eigen::Vector2d& c = corners_[center_id(ix, iy)].xy;
    const double u = x - c.x(), v = y - c.y();
    const double a = u - v;  // > 0 right of the rising diagonal
    const double b = u + v;  // > 0 right of the falling diagonal
    std::size_t tri;
    if (a >= 0.0 && b >= 0.0) tri = 0;
    else if (a < 0.0 && b >= 0.0) tri = 1;
    else if (a <= 0.0) tri = 2;
    else tri = 3;
    return 4 * (iy * cells_ + ix) + tri;
  }

  /// Corner positions of a node in the xy-plane.
  std::array<Eigen::Vector2d, 3> triangle(std::size_t node) const {
    const auto& c = nodes_[node].corners;
    return {corners_[c[0]].xy, corners_[c[1]].xy, corners_[c[2]].xy};
  }

 private:
  std::size_t lattice_id(std::size_t ix, std::size_t iy) const { return iy * (cells_ + 1) + ix; }
  std::size_t center_id(std::size_t ix, std::size_t iy) const {
    return (cells_ + 1) * (cells_ + 1) + iy * cells_ + ix;
  }

  double resolution_;
  double extent_;
  std::size_t cells_;
  std::vector<TriGridNode> nodes_;
  std::vector<TriGridCorner> corners_;
  std::vector<std::array<std::size_t, 3>> adjacency_;
  std::vector<std::size_t> overflow_;
};

/// Encodes the cloud into an empty tri-grid field by xy position.
inline TriGridField build_tgf(const PointCloud& cloud, const PipelineConfig& config) {
  config.validate();
  TriGridField tgf(config.tgf_resolution, config.field_extent);
  auto& nodes = tgf.nodes();
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto& p = cloud.points[i];
    if (auto n = tgf.locate(p.x, p.y)) nodes[*n].point_indices.push_back(i);
    else tgf.overflow().push_back(i);
  }
  return tgf;
}

// ---------------------------------------------------------------------------
// Per-node plane fitting
// ---------------------------------------------------------------------------

struct PlaneFit {
  Plane plane;
  Eigen::Vector3d mean;
  Eigen::Vector3d eigenvalues;  // descending
};

/// PCA plane through a point subset. nullopt when the points do not span a
/// plane (fewer than 3, coincident, or collinear).
inline std::optional<PlaneFit> fit_plane(const PointCloud& cloud, std::span<const std::size_t> idx) {
  if (idx.size() < 3) return std::nullopt;
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (auto i : idx) mean += Eigen::Vector3d(cloud[i].x, cloud[i].y, cloud[i].z);
  mean /= static_cast<double>(idx.size());
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (auto i : idx) {
    const Eigen::Vector3d d = Eigen::Vector3d(cloud[i].x, cloud[i].y, cloud[i].z) - mean;
    cov.noalias() += d * d.transpose();
  }
  cov /= static_cast<double>(idx.size());

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(cov);
  if (solver.info() != Eigen::Success) return std::nullopt;
  // Eigen sorts ascending.
  const Eigen::Vector3d ev = solver.eigenvalues();
  const double l1 = std::max(ev(2), 0.0), l2 = std::max(ev(1), 0.0), l3 = std::max(ev(0), 0.0);
  if (!(l1 > 0.0) || l2 <= 1e-12 * l1) return std::nullopt;

  Eigen::Vector3d normal = solver.eigenvectors().col(0).normalized();
  if (normal.z() < 0.0) normal = -normal;
  PlaneFit fit;
  fit.plane.normal = normal;
  fit.plane.d = -normal.dot(mean);
  fit.mean = mean;
  fit.eigenvalues = {l1, l2, l3};
  return fit;
}

/// Ground-seed selection plus refinement for one node: the lowest 20% of the
/// points (at least 3) seed the fit, then three passes refit on every point
/// within eps3 of the current plane.
inline std::optional<PlaneFit> fit_node_ground(const PointCloud& cloud, std::span<const std::size_t> points,
                                               double eps3) {
  constexpr int kRefineIterations = 3;
  std::vector<std::size_t> sorted(points.begin(), points.end());
  std::stable_sort(sorted.begin(), sorted.end(),
                   [&](std::size_t a, std::size_t b) { return cloud[a].z < cloud[b].z; });
  const std::size_t n_seed = std::min(
      sorted.size(), std::max<std::size_t>(3, static_cast<std::size_t>(std::ceil(0.2 * sorted.size()))));

  auto fit = fit_plane(cloud, std::span(sorted).first(n_seed));
  if (!fit) fit = fit_plane(cloud, sorted);
  if (!fit) return std::nullopt;

  std::vector<std::size_t> inliers;
  inliers.reserve(points.size());
  for (int it = 0; it < kRefineIterations; ++it) {
    inliers.clear();
    for (auto i : points) {
      const Eigen::Vector3d p(cloud[i].x, cloud[i].y, cloud[i].z);
      if (std::abs(fit->plane.signed_distance(p)) < eps3) inliers.push_back(i);
    }
    auto next = fit_plane(cloud, inliers);
    if (!next) break;
    fit = next;
  }
  return fit;
}

namespace detail {

inline void fit_one_node(TriGridNode& node, const PointCloud& cloud, const PipelineConfig& config,
                         double cos_incline) {
  node.plane.reset();
  node.kind = NodeKind::kUnknown;
  node.weight = 0.0;
  if (node.point_indices.size() < static_cast<std::size_t>(config.min_node_points)) return;
  const auto fit = fit_node_ground(cloud, node.point_indices, config.eps3);
  if (!fit) return;
  node.plane = fit->plane;
  node.mean = fit->mean;
  node.eigenvalues = fit->eigenvalues;
  node.weight = node_weight(fit->eigenvalues(0), fit->eigenvalues(1), fit->eigenvalues(2));
  node.kind = fit->plane.normal.z() >= cos_incline ? NodeKind::kTerrain : NodeKind::kObstacle;
}

}  // namespace detail

/// Fits every node independently. `threads` > 1 splits nodes into contiguous
/// blocks; the result is identical for any thread count.
inline void fit_node_planes(TriGridField& tgf, const PointCloud& cloud, const PipelineConfig& config,
                            unsigned threads = 1) {
  const double cos_incline = std::cos(config.incline_thresh * std::numbers::pi / 180.0);
  auto& nodes = tgf.nodes();
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(nodes.size())));
  if (threads == 1) {
    for (auto& n : nodes) detail::fit_one_node(n, cloud, config, cos_incline);
    return;
  }
  std::vector<std::jthread> pool;
  const std::size_t block = (nodes.size() + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    const std::size_t lo = t * block, hi = std::min(nodes.size(), lo + block);
    pool.emplace_back([&, lo, hi] {
      for (std::size_t i = lo; i < hi; ++i) detail::fit_one_node(nodes[i], cloud, config, cos_incline);
    });
  }
}

// ---------------------------------------------------------------------------
// Traversability search
// ---------------------------------------------------------------------------

/// Local convexity/concavity test of the edge between two fitted nodes.
inline bool lcc_edge(const Plane& plane_i, const Eigen::Vector3d& mean_i, const Plane& plane_j,
                     const Eigen::Vector3d& mean_j, double eps1, double eps2) {
  const Eigen::Vector3d d_ij = mean_j - mean_i;
  const Eigen::Vector3d d_ji = -d_ij;
  const double len = d_ij.norm();
  if (len == 0.0) return true;
  const bool similar = std::abs(plane_i.normal.dot(plane_j.normal)) > 1.0 - std::sin(len * eps2);
  const bool j_flat = std::abs(plane_j.normal.dot(d_ji)) < len * std::sin(eps1);
  const bool i_flat = std::abs(plane_i.normal.dot(d_ij)) < len * std::sin(eps1);
  return similar && j_flat && i_flat;
}

inline bool lcc_edge(const TriGridNode& i, const TriGridNode& j, double eps1, double eps2) {
  return i.plane && j.plane && lcc_edge(*i.plane, i.mean, *j.plane, j.mean, eps1, eps2);
}

/// Best unvisited terrain node: highest weight, then nearest mean to the
/// sensor in xy among weights within 1e-9 of the best.
inline std::optional<std::size_t> select_seed(const TriGridField& tgf, const std::vector<bool>& visited) {
  constexpr double kTie = 1e-9;
  const auto& nodes = tgf.nodes();
  double best_w = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (!visited[i] && nodes[i].kind == NodeKind::kTerrain) best_w = std::max(best_w, nodes[i].weight);
  std::optional<std::size_t> seed;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& n = nodes[i];
    if (visited[i] || n.kind != NodeKind::kTerrain || n.weight < best_w - kTie) continue;
    const double dist = n.mean.head<2>().norm();
    if (dist < best_dist) {
      best_dist = dist;
      seed = i;
    }
  }
  return seed;
}

struct SearchResult {
  std::vector<std::size_t> traversable;  // in visiting order
  std::vector<std::size_t> seeds;        // one per region
};

/// Breadth-first traversable graph search. Marks `traversable` and `region`
/// on the nodes. Unknown and obstacle nodes are never entered.
inline SearchResult btgs(TriGridField& tgf, const PipelineConfig& config) {
  auto& nodes = tgf.nodes();
  for (auto& n : nodes) {
    n.traversable = false;
    n.region = -1;
  }
  SearchResult result;
  std::vector<bool> visited(nodes.size(), false);
  int region = 0;
  while (auto seed = select_seed(tgf, visited)) {
    result.seeds.push_back(*seed);
    std::deque<std::size_t> frontier{*seed};
    visited[*seed] = true;
    while (!frontier.empty()) {
      const std::size_t cur = frontier.front();
      frontier.pop_front();
      nodes[cur].traversable = true;
      nodes[cur].region = region;
      result.traversable.push_back(cur);
      for (auto nb : tgf.neighbors(cur)) {
        if (nb == kNoNeighbor || visited[nb] || nodes[nb].kind != NodeKind::kTerrain) continue;
        if (!lcc_edge(nodes[cur], nodes[nb], config.eps1, config.eps2)) continue;
        visited[nb] = true;
        frontier.push_back(nb);
      }
    }
    if (!config.seed_multi_region) break;
    ++region;
  }
  return result;
}

// ---------------------------------------------------------------------------
// Terrain model refinement
// ---------------------------------------------------------------------------

/// Weighted corner average of the given contributions; nullopt on zero weight.
inline std::optional<double> weighted_corner_height(std::span<const CornerSample> samples) {
  double num = 0.0, den = 0.0;
  for (const auto& s : samples) {
    num += s.z * s.weight;
    den += s.weight;
  }
  if (!(den > 0.0)) return std::nullopt;
  return num / den;
}

/// Plane through three refined corners with the normal pointing up.
inline RefinedPlane plane_from_corners(const Eigen::Vector3d& c1, const Eigen::Vector3d& c2,
                                       const Eigen::Vector3d& c3) {
  RefinedPlane r;
  const Eigen::Vector3d e12 = (c2 - c1).normalized();
  const Eigen::Vector3d e13 = (c3 - c1).normalized();
  Eigen::Vector3d s = e12.cross(e13).normalized();
  if (s.z() < 0.0) s = -s;
  r.mean = (c1 + c2 + c3) / 3.0;
  r.plane.normal = s;
  r.plane.d = -s.dot(r.mean);
  return r;
}

/// Refines corner heights from traversable nodes and rebuilds node planes
/// from refined corners. Nodes lacking a refined corner get no model.
inline void ttmf(TriGridField& tgf) {
  auto& nodes = tgf.nodes();
  auto& corners = tgf.corners();
  for (auto& c : corners) {
    c.samples.clear();
    c.refined_z.reset();
  }
  for (const auto& n : nodes) {
    if (!n.traversable || !n.plane) continue;
    for (auto cid : n.corners) {
      auto& c = corners[cid];
      const double dist = std::max((c.xy - n.mean.head<2>()).norm(), kMinCornerDistance);
      c.samples.push_back({n.plane->height_at(c.xy.x(), c.xy.y()), n.weight / dist});
    }
  }
  for (auto& c : corners)
    if (!c.samples.empty()) c.refined_z = weighted_corner_height(c.samples);

  for (auto& n : nodes) {
    n.refined.reset();
    const auto& a = corners[n.corners[0]];
    const auto& b = corners[n.corners[1]];
    const auto& c = corners[n.corners[2]];
    if (!a.refined_z || !b.refined_z || !c.refined_z) continue;
    n.refined = plane_from_corners({a.xy.x(), a.xy.y(), *a.refined_z}, {b.xy.x(), b.xy.y(), *b.refined_z},
                                   {c.xy.x(), c.xy.y(), *c.refined_z});
  }
}

/// Terrain iff the point lies less than eps3 above its node's refined plane.
inline std::vector<std::uint8_t> label_points(const TriGridField& tgf, const PointCloud& cloud, double eps3) {
  std::vector<std::uint8_t> terrain(cloud.size(), 0);
  for (const auto& n : tgf.nodes()) {
    if (!n.refined) continue;
    for (auto i : n.point_indices) {
      const Eigen::Vector3d p(cloud[i].x, cloud[i].y, cloud[i].z);
      terrain[i] = n.refined->plane.signed_distance(p) < eps3 ? 1 : 0;
    }
  }
  return terrain;
}

struct GroundSegmentation {
  TriGridField field;
  SearchResult search;
  std::vector<std::uint8_t> terrain_mask;
};

/// Full ground stage: encode, fit, search, refine, label.
inline GroundSegmentation segment_ground(const PointCloud& cloud, const PipelineConfig& config,
                                         unsigned threads = 1) {
  TriGridField tgf = build_tgf(cloud, config);
  fit_node_planes(tgf, cloud, config, threads);
  SearchResult search = btgs(tgf, config);
  ttmf(tgf);
  auto mask = label_points(tgf, cloud, config.eps3);
  return {std::move(tgf), std::move(search), std::move(mask)};
}

/// Per-node debug table.
inline void write_node_csv(std::ostream& out, const TriGridField& tgf) {
  out << "node_index,kind,traversable,sx,sy,sz,d,weight,point_count\n";
  for (const auto& n : tgf.nodes()) {
    out << n.index << ',' << to_string(n.kind) << ',' << (n.traversable ? 1 : 0) << ',';
    if (n.plane)
      out << n.plane->normal.x() << ',' << n.plane->normal.y() << ',' << n.plane->normal.z() << ','
          << n.plane->d;
    else
      out << ",,,";
    out << ',' << n.weight << ',' << n.point_indices.size() << '\n';
  }
}

}  // namespace travel
