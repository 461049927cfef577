#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "travel/core.hpp"
#include "travel/label_forest.hpp"

namespace travel {

// ---------------------------------------------------------------------------
// Terrain classification
// ---------------------------------------------------------------------------

/// Confusion counts with terrain as the positive class. Ratios whose
/// denominator is zero are left empty rather than reported as 0.
struct GroundEval {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
  std::optional<double> accuracy;

  std::size_t total() const noexcept { return tp + fp + tn + fn; }
};

inline GroundEval ground_metrics(std::span<const std::uint8_t> pred_terrain,
                                 std::span<const std::uint8_t> truth_terrain) {
  if (pred_terrain.size() != truth_terrain.size())
    throw std::invalid_argument("ground_metrics: prediction and truth lengths differ");
  GroundEval e;
  for (std::size_t i = 0; i < pred_terrain.size(); ++i) {
    const bool p = pred_terrain[i] != 0, t = truth_terrain[i] != 0;
    if (p && t) ++e.tp;
    else if (p) ++e.fp;
    else if (t) ++e.fn;
    else ++e.tn;
  }
  const auto ratio = [](std::size_t num, std::size_t den) -> std::optional<double> {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
  };
  e.precision = ratio(e.tp, e.tp + e.fp);
  e.recall = ratio(e.tp, e.tp + e.fn);
  e.accuracy = ratio(e.tp + e.tn, e.total());
  if (e.precision && e.recall && *e.precision + *e.recall > 0.0)
    e.f1 = 2.0 * *e.precision * *e.recall / (*e.precision + *e.recall);
  else if (e.precision && e.recall)
    e.f1 = 0.0;
  return e;
}

// ---------------------------------------------------------------------------
// Segmentation entropies (nats)
// ---------------------------------------------------------------------------

struct EntropyReport {
  double total = 0.0;
  std::map<std::uint32_t, double> per_group;  // group id -> entropy
};

/// Groups the evaluated points by `group` and sums, over groups, the Shannon
/// entropy of the `member` labels inside each group. `evaluated` may be empty
/// (all points evaluated).
inline EntropyReport grouped_entropy(std::span<const std::uint32_t> group, std::span<const std::uint32_t> member,
                                     std::span<const std::uint8_t> evaluated = {}) {
  if (group.size() != member.size() || (!evaluated.empty() && evaluated.size() != group.size()))
    throw std::invalid_argument("grouped_entropy: array lengths differ");
  std::map<std::uint32_t, std::map<std::uint32_t, std::size_t>> counts;
  for (std::size_t i = 0; i < group.size(); ++i)
    if (evaluated.empty() || evaluated[i]) ++counts[group[i]][member[i]];
  EntropyReport r;
  for (const auto& [g, labels] : counts) {
    std::size_t n = 0;
    for (const auto& [l, c] : labels) n += c;
    double h = 0.0;
    for (const auto& [l, c] : labels) {
      const double f = static_cast<double>(c) / static_cast<double>(n);
      h -= f * std::log(f);
    }
    // A lone label is exactly zero; -1 * log(1) would give -0.0.
    if (labels.size() == 1) h = 0.0;
    r.per_group[g] = h;
    r.total += h;
  }
  return r;
}

/// Over-segmentation entropy: label confusion inside each ground-truth object.
inline EntropyReport ose(std::span<const std::uint32_t> truth_objects, std::span<const std::uint32_t> pred,
                         std::span<const std::uint8_t> evaluated = {}) {
  return grouped_entropy(truth_objects, pred, evaluated);
}

/// Under-segmentation entropy: object confusion inside each predicted cluster.
inline EntropyReport use(std::span<const std::uint32_t> truth_objects, std::span<const std::uint32_t> pred,
                         std::span<const std::uint8_t> evaluated = {}) {
  return grouped_entropy(pred, truth_objects, evaluated);
}

struct ClusterEval {
  EntropyReport ose;
  EntropyReport use;
  std::size_t evaluated_points = 0;
};

/// OSE and USE over the points that neither side labels terrain.
inline ClusterEval cluster_metrics(std::span<const std::uint8_t> truth_terrain,
                                   std::span<const std::uint32_t> truth_objects,
                                   std::span<const std::uint8_t> pred_terrain,
                                   std::span<const std::uint32_t> pred_clusters) {
  const std::size_t n = truth_terrain.size();
  if (truth_objects.size() != n || pred_terrain.size() != n || pred_clusters.size() != n)
    throw std::invalid_argument("cluster_metrics: array lengths differ");
  std::vector<std::uint8_t> evaluated(n, 0);
  ClusterEval e;
  for (std::size_t i = 0; i < n; ++i) {
    evaluated[i] = !truth_terrain[i] && !pred_terrain[i];
    e.evaluated_points += evaluated[i];
  }
  e.ose = ose(truth_objects, pred_clusters, evaluated);
  e.use = use(truth_objects, pred_clusters, evaluated);
  return e;
}

// ---------------------------------------------------------------------------
// Reference clustering
// ---------------------------------------------------------------------------

inline constexpr std::size_t kEuclideanOracleLimit = 50'000;

/// Plain Euclidean clustering: connected components of the graph joining
/// points at most `radius` apart. Points with include[i] == 0 (when a mask is
/// given) get 0; the rest get dense IDs 1..K by first appearance.
inline std::vector<std::uint32_t> euclidean_oracle(const PointCloud& cloud, double radius,
                                                   std::span<const std::uint8_t> include = {}) {
  const auto kept = [&](std::size_t i) { return include.empty() || include[i]; };
  std::size_t n_kept = 0;
  for (std::size_t i = 0; i < cloud.size(); ++i) n_kept += kept(i);
  if (n_kept > kEuclideanOracleLimit)
    throw std::length_error("euclidean_oracle: " + std::to_string(n_kept) + " points exceeds the " +
                            std::to_string(kEuclideanOracleLimit) + "-point guard");

  // Voxel hash with cell size = radius; neighbors live in the 27 adjacent cells.
  struct Key {
    std::int64_t x, y, z;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const noexcept {
      return static_cast<std::size_t>(k.x * 73856093LL ^ k.y * 19349663LL ^ k.z * 83492791LL);
    }
  };
  const auto key_of = [&](const Point& p) {
    return Key{static_cast<std::int64_t>(std::floor(p.x / radius)),
               static_cast<std::int64_t>(std::floor(p.y / radius)),
               static_cast<std::int64_t>(std::floor(p.z / radius))};
  };
  std::unordered_map<Key, std::vector<std::size_t>, KeyHash> cells;
  for (std::size_t i = 0; i < cloud.size(); ++i)
    if (kept(i)) cells[key_of(cloud[i])].push_back(i);

  LabelForest forest;
  for (std::size_t i = 0; i < cloud.size(); ++i) forest.make();
  const double r2 = radius * radius;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (!kept(i)) continue;
    const Key k = key_of(cloud[i]);
    for (std::int64_t dx = -1; dx <= 1; ++dx)
      for (std::int64_t dy = -1; dy <= 1; ++dy)
        for (std::int64_t dz = -1; dz <= 1; ++dz) {
          auto it = cells.find({k.x + dx, k.y + dy, k.z + dz});
          if (it == cells.end()) continue;
          for (auto j : it->second) {
            if (j <= i) continue;
            const double ex = cloud[i].x - cloud[j].x, ey = cloud[i].y - cloud[j].y, ez = cloud[i].z - cloud[j].z;
            if (ex * ex + ey * ey + ez * ez <= r2)
              forest.unite(static_cast<LabelForest::Label>(i), static_cast<LabelForest::Label>(j));
          }
        }
  }
  std::unordered_map<std::uint32_t, std::uint32_t> dense;
  std::vector<std::uint32_t> out(cloud.size(), 0);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (!kept(i)) continue;
    auto [it, inserted] =
        dense.try_emplace(forest.find(static_cast<LabelForest::Label>(i)), static_cast<std::uint32_t>(dense.size() + 1));
    out[i] = it->second;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Multi-frame aggregation
// ---------------------------------------------------------------------------

/// Mean and population standard deviation over the values present.
struct Aggregate {
  double mean = 0.0;
  double stdev = 0.0;
  std::size_t count = 0;
};

inline Aggregate aggregate(std::span<const std::optional<double>> values) {
  Aggregate a;
  double sum = 0.0;
  for (const auto& v : values)
    if (v) {
      sum += *v;
      ++a.count;
    }
  if (a.count == 0) return a;
  a.mean = sum / static_cast<double>(a.count);
  double ss = 0.0;
  for (const auto& v : values)
    if (v) ss += (*v - a.mean) * (*v - a.mean);
  a.stdev = std::sqrt(ss / static_cast<double>(a.count));
  return a;
}

}  // namespace travel
