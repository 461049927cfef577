#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "travel/core.hpp"
#include "travel/label_forest.hpp"

namespace travel {

// ---------------------------------------------------------------------------
// Spherical projection
// ---------------------------------------------------------------------------

/// Range image of the obstacle points. Row 0 is the lowest ring; column 0
/// starts at azimuth -pi and columns increase counter-clockwise.
class SphericalGrid {
 public:
  static constexpr std::int64_t kEmpty = -1;

  SphericalGrid(int width, int height)
      : width_(width), height_(height),
        cells_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), kEmpty),
        range_(cells_.size(), std::numeric_limits<double>::infinity()) {}

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }

  std::int64_t at(int row, int col) const { return cells_[index(row, col)]; }
  double range_at(int row, int col) const { return range_[index(row, col)]; }
  bool occupied(int row, int col) const { return at(row, col) != kEmpty; }

  std::size_t occupancy() const {
    return static_cast<std::size_t>(std::count_if(cells_.begin(), cells_.end(),
                                                  [](std::int64_t v) { return v != kEmpty; }));
  }

  /// Collision losers paired with the cell (row, col) they lost.
  struct Loser {
    std::size_t point;
    int row;
    int col;
  };

  std::vector<Loser> losers;
  std::size_t dropped_zero_range = 0;

  /// Overwrites a cell. Collision policy lives in project().
  void set(int row, int col, std::int64_t point, double range) {
    cells_[index(row, col)] = point;
    range_[index(row, col)] = range;
  }

 private:
  std::size_t index(int row, int col) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(col);
  }

  int width_;
  int height_;
  std::vector<std::int64_t> cells_;
  std::vector<double> range_;
};

inline int azimuth_column(double x, double y, int width) {
  const double a = std::atan2(y, x) + std::numbers::pi;  // [0, 2pi]
  const int col = static_cast<int>(std::floor(a / (2.0 * std::numbers::pi) * width));
  return std::clamp(col, 0, width - 1);
}

/// Projects the points with `include[i] != 0`. Rows come from the ring index
/// when the cloud carries one, otherwise from uniform elevation bins spanning
/// the whole cloud's elevation range.
inline SphericalGrid project(const PointCloud& cloud, std::span<const std::uint8_t> include, int width,
                             int height) {
  if (width < 2) throw ConfigError("proj_width", "must be >= 2");
  if (height < 2) throw ConfigError("proj_height", "must be >= 2");
  SphericalGrid grid(width, height);
  const bool rings = cloud.has_rings();

  double el_min = std::numeric_limits<double>::infinity();
  double el_max = -el_min;
  if (!rings) {
    for (const auto& p : cloud.points) {
      const double r = p.range();
      if (r == 0.0) continue;
      const double el = std::asin(std::clamp(p.z / r, -1.0, 1.0));
      el_min = std::min(el_min, el);
      el_max = std::max(el_max, el);
    }
  }
  const double el_span = el_max - el_min;

  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (!include[i]) continue;
    const auto& p = cloud.points[i];
    const double r = p.range();
    if (r == 0.0) {
      ++grid.dropped_zero_range;
      continue;
    }
    int row;
    if (rings) {
      if (!p.ring || *p.ring >= height)
        throw ConfigError("proj_height", "ring index " + std::to_string(p.ring.value_or(0)) +
                                             " does not fit " + std::to_string(height) + " rows");
      row = *p.ring;
    } else {
      const double el = std::asin(std::clamp(p.z / r, -1.0, 1.0));
      row = el_span > 0.0 ? static_cast<int>(std::floor((el - el_min) / el_span * height)) : 0;
      row = std::clamp(row, 0, height - 1);
    }
    const int col = azimuth_column(p.x, p.y, width);
    const std::int64_t held = grid.at(row, col);
    if (held == SphericalGrid::kEmpty) {
      grid.set(row, col, static_cast<std::int64_t>(i), r);
      continue;
    }
    // Nearer point wins; on equal range the earlier index stays.
    const double held_r = grid.range_at(row, col);
    if (r < held_r) {
      grid.losers.push_back({static_cast<std::size_t>(held), row, col});
      grid.set(row, col, static_cast<std::int64_t>(i), r);
    } else {
      grid.losers.push_back({i, row, col});
    }
  }
  return grid;
}

// ---------------------------------------------------------------------------
// Nodes and ring-wise updates
// ---------------------------------------------------------------------------

/// Run of horizontally linked cells on one ring, columns [start, end].
struct ClusterNode {
  int start = 0;
  int end = 0;
  int ring = 0;
  LabelForest::Label label = 0;
};

namespace detail {

inline const Point& cell_point(const SphericalGrid& grid, const PointCloud& cloud, int row, int col) {
  return cloud.points[static_cast<std::size_t>(grid.at(row, col))];
}

}  // namespace detail

/// Builds the nodes of one ring. Successive occupied cells closer than
/// `t_horz` share a node; each node receives a fresh label.
inline std::vector<ClusterNode> horizontal_update(const SphericalGrid& grid, const PointCloud& cloud, int row,
                                                  double t_horz, LabelForest& forest) {
  std::vector<ClusterNode> nodes;
  int prev = -1;
  for (int col = 0; col < grid.width(); ++col) {
    if (!grid.occupied(row, col)) continue;
    const bool joins = prev >= 0 && distance(detail::cell_point(grid, cloud, row, prev),
                                             detail::cell_point(grid, cloud, row, col)) < t_horz;
    if (joins) {
      nodes.back().end = col;
    } else {
      nodes.push_back({col, col, row, forest.make()});
    }
    prev = col;
  }
  return nodes;
}

/// Links the last and first node of a ring across the azimuth seam.
inline bool circular_linkage(const SphericalGrid& grid, const PointCloud& cloud,
                             std::span<const ClusterNode> nodes, double t_horz, LabelForest& forest) {
  if (nodes.size() < 2) return false;
  const auto& first = nodes.front();
  const auto& last = nodes.back();
  if (distance(detail::cell_point(grid, cloud, last.ring, last.end),
               detail::cell_point(grid, cloud, first.ring, first.start)) < t_horz) {
    forest.unite(first.label, last.label);
    return true;
  }
  return false;
}

namespace detail {

inline Point node_centroid(const SphericalGrid& grid, const PointCloud& cloud, const ClusterNode& n) {
  Point c;
  int count = 0;
  for (int col = n.start; col <= n.end; ++col) {
    if (!grid.occupied(n.ring, col)) continue;
    const auto& p = cell_point(grid, cloud, n.ring, col);
    c.x += p.x;
    c.y += p.y;
    c.z += p.z;
    ++count;
  }
  c.x /= count;
  c.y /= count;
  c.z /= count;
  return c;
}

}  // namespace detail

/// Links node k with node k + j for 2 <= j <= t_skip + 1 when the facing
/// boundary points (or centroids) are closer than `t_horz`. Returns the
/// number of new unions.
inline std::size_t skipped_linkage(const SphericalGrid& grid, const PointCloud& cloud,
                                   std::span<const ClusterNode> nodes, double t_horz, int t_skip,
                                   LabelForest& forest, SkipDistance mode = SkipDistance::kBoundary) {
  std::size_t merged = 0;
  if (t_skip <= 0) return merged;
  std::vector<Point> centroids;
  if (mode == SkipDistance::kCentroid)
    for (const auto& n : nodes) centroids.push_back(detail::node_centroid(grid, cloud, n));
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    for (std::size_t j = 2; j <= static_cast<std::size_t>(t_skip) + 1 && k + j < nodes.size(); ++j) {
      const auto& a = nodes[k];
      const auto& b = nodes[k + j];
      const double dist = mode == SkipDistance::kBoundary
                              ? distance(detail::cell_point(grid, cloud, a.ring, a.end),
                                         detail::cell_point(grid, cloud, b.ring, b.start))
                              : distance(centroids[k], centroids[k + j]);
      if (dist < t_horz && forest.unite(a.label, b.label)) ++merged;
    }
  }
  return merged;
}

/// Index range [first, last) of the nodes in a ring (sorted, disjoint column
/// intervals) that overlap columns [lo, hi]. Two binary searches; `probes`
/// accumulates the number of comparisons made.
inline std::pair<std::size_t, std::size_t> overlap_bounds(std::span<const ClusterNode> ring, int lo, int hi,
                                                          std::size_t* probes = nullptr) {
  std::size_t count = 0;
  // First node whose end >= lo.
  std::size_t a = 0, b = ring.size();
  while (a < b) {
    const std::size_t mid = a + (b - a) / 2;
    ++count;
    if (ring[mid].end < lo) a = mid + 1;
    else b = mid;
  }
  const std::size_t first = a;
  // First node whose start > hi.
  a = first;
  b = ring.size();
  while (a < b) {
    const std::size_t mid = a + (b - a) / 2;
    ++count;
    if (ring[mid].start <= hi) a = mid + 1;
    else b = mid;
  }
  if (probes) *probes += count;
  return {first, std::max(first, a)};
}

/// True when some point pair of the two nodes is closer than `t_vert`. Pairs
/// are visited outward from the middle of the column overlap (or of the gap
/// between disjoint intervals) and the scan stops at the first hit.
inline bool vertical_link(const SphericalGrid& grid, const PointCloud& cloud, const ClusterNode& n,
                          const ClusterNode& m, double t_vert, std::size_t* pair_checks = nullptr) {
  const int ov_lo = std::max(n.start, m.start);
  const int ov_hi = std::min(n.end, m.end);
  // Twice the pivot column keeps half-column centers exact.
  const int pivot2 = ov_lo <= ov_hi ? ov_lo + ov_hi
                     : n.end < m.start ? n.end + m.start
                                       : m.end + n.start;
  auto ordered = [&](const ClusterNode& node) {
    std::vector<int> cols;
    for (int c = node.start; c <= node.end; ++c)
      if (grid.occupied(node.ring, c)) cols.push_back(c);
    std::stable_sort(cols.begin(), cols.end(),
                     [&](int x, int y) { return std::abs(2 * x - pivot2) < std::abs(2 * y - pivot2); });
    return cols;
  };
  const auto a = ordered(n);
  const auto b = ordered(m);
  const double t2 = t_vert * t_vert;
  auto close = [&](int ca, int cb) {
    if (pair_checks) ++*pair_checks;
    const auto& p = detail::cell_point(grid, cloud, n.ring, ca);
    const auto& q = detail::cell_point(grid, cloud, m.ring, cb);
    const double dx = p.x - q.x, dy = p.y - q.y, dz = p.z - q.z;
    return dx * dx + dy * dy + dz * dz < t2;
  };
  // Shell k holds the pairs whose larger rank is k.
  const std::size_t shells = std::max(a.size(), b.size());
  for (std::size_t k = 0; k < shells; ++k) {
    if (k < a.size())
      for (std::size_t j = 0; j <= std::min(k, b.size() - 1); ++j)
        if (close(a[k], b[j])) return true;
    if (k < b.size())
      for (std::size_t i = 0; i < std::min(k, a.size()); ++i)
        if (close(a[i], b[k])) return true;
  }
  return false;
}

struct VerticalStats {
  std::size_t bound_probes = 0;
  std::size_t candidate_nodes = 0;
  std::size_t pair_checks = 0;
  std::size_t links = 0;
};

/// Links every node of `current` with overlapping nodes of the previous
/// rings. `previous` holds the node lists of rings below, nearest first.
inline void vertical_update(const SphericalGrid& grid, const PointCloud& cloud,
                            std::span<const ClusterNode> current,
                            std::span<const std::span<const ClusterNode>> previous, int t_ext, double t_vert,
                            LabelForest& forest, VerticalStats* stats = nullptr) {
  for (const auto& n : current) {
    const int lo = n.start - t_ext;
    const int hi = n.end + t_ext;
    for (const auto& ring : previous) {
      std::size_t probes = 0;
      const auto [first, last] = overlap_bounds(ring, lo, hi, &probes);
      if (stats) {
        stats->bound_probes += probes;
        stats->candidate_nodes += last - first;
      }
      for (std::size_t k = first; k < last; ++k) {
        const auto& m = ring[k];
        if (forest.find(m.label) == forest.find(n.label)) continue;
        if (vertical_link(grid, cloud, n, m, t_vert, stats ? &stats->pair_checks : nullptr)) {
          forest.unite(n.label, m.label);
          if (stats) ++stats->links;
        }
      }
    }
  }
}

/// Dense cluster IDs 1..K per point, numbered by first appearance in point
/// order. Collision losers take their cell winner's ID; points outside the
/// projection get 0.
inline std::vector<std::uint32_t> resolve_labels(LabelForest& forest, const SphericalGrid& grid,
                                                 std::span<const std::vector<ClusterNode>> rings,
                                                 std::size_t point_count, std::size_t* cluster_count = nullptr) {
  constexpr auto kNone = std::numeric_limits<std::uint32_t>::max();
  std::vector<std::uint32_t> canonical(point_count, kNone);
  for (const auto& ring : rings)
    for (const auto& node : ring) {
      const auto root = forest.find(node.label);
      for (int c = node.start; c <= node.end; ++c)
        if (grid.occupied(node.ring, c)) canonical[static_cast<std::size_t>(grid.at(node.ring, c))] = root;
    }
  for (const auto& l : grid.losers) {
    const auto winner = grid.at(l.row, l.col);
    canonical[l.point] = canonical[static_cast<std::size_t>(winner)];
  }
  std::unordered_map<std::uint32_t, std::uint32_t> dense;
  std::vector<std::uint32_t> out(point_count, 0);
  for (std::size_t i = 0; i < point_count; ++i) {
    if (canonical[i] == kNone) continue;
    auto [it, inserted] = dense.try_emplace(canonical[i], static_cast<std::uint32_t>(dense.size() + 1));
    out[i] = it->second;
  }
  if (cluster_count) *cluster_count = dense.size();
  return out;
}

struct ClusteringResult {
  std::vector<std::uint32_t> cluster_id;
  std::size_t cluster_count = 0;
  std::size_t node_count = 0;
  std::size_t dropped_zero_range = 0;
  VerticalStats vertical;
};

/// Clusters the points with obstacle_mask[i] != 0, processing rings bottom-up:
/// horizontal update, circular and skipped linkage, then vertical update
/// against the previous t_ring rings.
inline ClusteringResult cluster_objects(const PointCloud& cloud, std::span<const std::uint8_t> obstacle_mask,
                                        const PipelineConfig& config) {
  const SphericalGrid grid = project(cloud, obstacle_mask, config.proj_width, config.proj_height);
  LabelForest forest;
  std::vector<std::vector<ClusterNode>> rings(static_cast<std::size_t>(grid.height()));
  ClusteringResult result;
  std::vector<std::span<const ClusterNode>> window;
  for (int row = 0; row < grid.height(); ++row) {
    auto& nodes = rings[static_cast<std::size_t>(row)];
    nodes = horizontal_update(grid, cloud, row, config.t_horz, forest);
    result.node_count += nodes.size();
    if (config.circular_linkage) circular_linkage(grid, cloud, nodes, config.t_horz, forest);
    skipped_linkage(grid, cloud, nodes, config.t_horz, config.t_skip, forest, config.skip_distance);

    window.clear();
    for (int back = 1; back <= config.t_ring && row - back >= 0; ++back)
      window.emplace_back(rings[static_cast<std::size_t>(row - back)]);
    vertical_update(grid, cloud, nodes, window, config.t_ext, config.t_vert, forest, &result.vertical);
  }
  result.cluster_id = resolve_labels(forest, grid, rings, cloud.size(), &result.cluster_count);
  result.dropped_zero_range = grid.dropped_zero_range;
  return result;
}

}  // namespace travel
