#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <queue>
#include <random>
#include <set>

#include "support.hpp"

namespace travel {
namespace {

using test::pt;

// Point on the center line of column `col` at horizontal range `r`.
Point ring_point(int ring, int col, int width, double r, double z = 0.0) {
  const double az = (col + 0.5) / width * 2.0 * std::numbers::pi - std::numbers::pi;
  Point p = pt(r * std::cos(az), r * std::sin(az), z);
  p.ring = static_cast<std::uint16_t>(ring);
  return p;
}

std::vector<std::uint8_t> all_of(const PointCloud& c) { return std::vector<std::uint8_t>(c.size(), 1); }

// ---------------------------------------------------------------------------
// Projection
// ---------------------------------------------------------------------------

TEST(Project, SinglePointOccupiesOneCell) {
  PointCloud c;
  c.points.push_back(ring_point(3, 17, 64, 5.0));
  const auto g = project(c, all_of(c), 64, 8);
  EXPECT_EQ(g.occupancy(), 1u);
  EXPECT_EQ(g.at(3, 17), 0);
  EXPECT_NEAR(g.range_at(3, 17), 5.0, 1e-12);
  EXPECT_TRUE(g.losers.empty());
}

TEST(Project, NearerPointWinsAndLoserInheritsItsLabel) {
  PointCloud c;
  c.points.push_back(ring_point(0, 10, 64, 5.0));
  c.points.push_back(ring_point(0, 10, 64, 3.0));
  c.points.push_back(ring_point(0, 10, 64, 4.0));
  const auto g = project(c, all_of(c), 64, 4);
  EXPECT_EQ(g.at(0, 10), 1);
  ASSERT_EQ(g.losers.size(), 2u);
  PipelineConfig cfg;
  cfg.proj_width = 64;
  cfg.proj_height = 4;
  const auto r = cluster_objects(c, all_of(c), cfg);
  EXPECT_EQ(r.cluster_count, 1u);
  EXPECT_EQ(r.cluster_id, (std::vector<std::uint32_t>{1, 1, 1}));
}

TEST(Project, EqualRangeKeepsEarlierIndex) {
  PointCloud c;
  c.points.push_back(ring_point(1, 5, 32, 2.0));
  c.points.push_back(ring_point(1, 5, 32, 2.0));
  const auto g = project(c, all_of(c), 32, 2);
  EXPECT_EQ(g.at(1, 5), 0);
}

TEST(Project, CollisionFreeScanIsBijective) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> r(1.0, 50.0);
  PointCloud c;
  std::set<std::pair<int, int>> used;
  while (c.size() < 2000) {
    const int ring = static_cast<int>(rng() % 32), col = static_cast<int>(rng() % 512);
    if (!used.insert({ring, col}).second) continue;
    c.points.push_back(ring_point(ring, col, 512, r(rng)));
  }
  const auto g = project(c, all_of(c), 512, 32);
  EXPECT_EQ(g.occupancy(), c.size());
  EXPECT_TRUE(g.losers.empty());
  for (std::size_t i = 0; i < c.size(); ++i) {
    const int col = azimuth_column(c[i].x, c[i].y, 512);
    EXPECT_EQ(g.at(*c[i].ring, col), static_cast<std::int64_t>(i));
  }
}

TEST(Project, ZeroRangeIsDroppedAndCounted) {
  PointCloud c;
  c.points.push_back(pt(0, 0, 0));
  c.points.push_back(ring_point(0, 1, 16, 1.0));
  const auto g = project(c, all_of(c), 16, 2);
  EXPECT_EQ(g.dropped_zero_range, 1u);
  EXPECT_EQ(g.occupancy(), 1u);
}

TEST(Project, ExcludedPointsAreIgnored) {
  PointCloud c;
  c.points.push_back(ring_point(0, 1, 16, 1.0));
  c.points.push_back(ring_point(0, 2, 16, 1.0));
  const std::vector<std::uint8_t> mask{0, 1};
  const auto g = project(c, mask, 16, 2);
  EXPECT_FALSE(g.occupied(0, 1));
  EXPECT_TRUE(g.occupied(0, 2));
}

TEST(Project, ElevationBinsWithoutRingIndex) {
  const auto c = test::cloud_of({pt(10, 0, -5), pt(10, 0, 5), pt(10, 0, 0.01)});
  const auto g = project(c, all_of(c), 16, 10);
  const int col = azimuth_column(10, 0, 16);
  EXPECT_EQ(g.at(0, col), 0);
  EXPECT_EQ(g.at(9, col), 1);
  EXPECT_EQ(g.at(5, col), 2);
}

TEST(Project, RingOutsideHeightIsConfigError) {
  PointCloud c;
  c.points.push_back(ring_point(8, 0, 16, 1.0));
  try {
    project(c, all_of(c), 16, 8);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "proj_height");
  }
}

TEST(Project, AzimuthColumnsCoverTheCircle) {
  EXPECT_EQ(azimuth_column(-1.0, -1e-12, 8), 0);
  EXPECT_EQ(azimuth_column(-1.0, 0.0, 8), 7);  // atan2 gives +pi here
  EXPECT_EQ(azimuth_column(1.0, 0.0, 8), 4);
  for (int col = 0; col < 1024; ++col) {
    const auto p = ring_point(0, col, 1024, 7.0);
    EXPECT_EQ(azimuth_column(p.x, p.y, 1024), col);
  }
}

// ---------------------------------------------------------------------------
// Horizontal update and ring linkage
// ---------------------------------------------------------------------------

struct RingFixture {
  PointCloud cloud;
  SphericalGrid grid{1, 1};
};

// Random ring: each column occupied with probability `fill`; ranges drift
// with occasional jumps.
RingFixture random_ring(std::mt19937_64& rng, int width, double fill) {
  RingFixture f;
  std::bernoulli_distribution occ(fill), jump(0.1);
  std::uniform_real_distribution<double> r(2.0, 30.0);
  double range = r(rng);
  for (int col = 0; col < width; ++col) {
    if (jump(rng)) range = r(rng);
    if (occ(rng)) f.cloud.points.push_back(ring_point(0, col, width, range));
  }
  f.grid = project(f.cloud, all_of(f.cloud), width, 2);
  return f;
}

TEST(HorizontalUpdate, MatchesSequentialGroupingOracle) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    const int width = 64 + static_cast<int>(rng() % 900);
    auto f = random_ring(rng, width, 0.2 + 0.7 * (trial % 10) / 10.0);
    LabelForest forest;
    const auto nodes = horizontal_update(f.grid, f.cloud, 0, 0.3, forest);

    // Oracle: occupied columns in order, split wherever the step is >= 0.3.
    std::vector<std::vector<int>> groups;
    const Point* last = nullptr;
    for (int col = 0; col < width; ++col) {
      const auto idx = f.grid.at(0, col);
      if (idx < 0) continue;
      const Point& p = f.cloud[static_cast<std::size_t>(idx)];
      const bool split = last == nullptr ||
                         std::hypot(p.x - last->x, p.y - last->y, p.z - last->z) >= 0.3;
      if (split) groups.emplace_back();
      groups.back().push_back(col);
      last = &p;
    }
    ASSERT_EQ(nodes.size(), groups.size());
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      EXPECT_EQ(nodes[k].start, groups[k].front());
      EXPECT_EQ(nodes[k].end, groups[k].back());
      EXPECT_EQ(nodes[k].label, k);
    }
  }
}

TEST(HorizontalUpdate, EmptyRingHasNoNodes) {
  PointCloud c;
  c.points.push_back(ring_point(1, 0, 8, 1.0));
  const auto g = project(c, all_of(c), 8, 2);
  LabelForest forest;
  EXPECT_TRUE(horizontal_update(g, c, 0, 0.3, forest).empty());
  EXPECT_EQ(forest.size(), 0u);
}

TEST(CircularLinkage, SingleNodeIsUntouched) {
  PointCloud c;
  for (int col = 0; col < 16; ++col) c.points.push_back(ring_point(0, col, 16, 0.2));
  const auto g = project(c, all_of(c), 16, 2);
  LabelForest forest;
  const auto nodes = horizontal_update(g, c, 0, 0.3, forest);
  ASSERT_EQ(nodes.size(), 1u);
  EXPECT_FALSE(circular_linkage(g, c, nodes, 0.3, forest));
  EXPECT_EQ(forest.union_count(), 0u);
}

// Wall straddling the azimuth seam at 10 m: contiguous columns either side
// of the seam form two nodes joined only by the seam link.
TEST(CircularLinkage, SeamWallJoins) {
  const int w = 1024;
  PointCloud c;
  for (int col = w - 10; col < w; ++col) c.points.push_back(ring_point(0, col, w, 10.0));
  for (int col = 0; col < 10; ++col) c.points.push_back(ring_point(0, col, w, 10.0));
  const auto g = project(c, all_of(c), w, 2);
  LabelForest forest;
  const auto nodes = horizontal_update(g, c, 0, 0.3, forest);
  ASSERT_EQ(nodes.size(), 2u);
  EXPECT_TRUE(circular_linkage(g, c, nodes, 0.3, forest));
  EXPECT_EQ(forest.find(nodes[0].label), forest.find(nodes[1].label));
}

TEST(CircularLinkage, TwoMetreGapStaysApart) {
  const int w = 1024;
  PointCloud c;
  c.points.push_back(ring_point(0, w - 1, w, 10.0));
  c.points.push_back(ring_point(0, 0, w, 12.0));
  const auto g = project(c, all_of(c), w, 2);
  LabelForest forest;
  const auto nodes = horizontal_update(g, c, 0, 0.3, forest);
  ASSERT_EQ(nodes.size(), 2u);
  EXPECT_FALSE(circular_linkage(g, c, nodes, 0.3, forest));
}

// Wall at 10 m, one column hidden by a pole at 5 m: wall | pole | wall.
struct WallPoleWall {
  static constexpr int kWidth = 720;
  WallPoleWall() {
    for (int col = 100; col < 110; ++col) cloud.points.push_back(ring_point(0, col, kWidth, 10.0));
    cloud.points.push_back(ring_point(0, 110, kWidth, 5.0));
    for (int col = 111; col < 121; ++col) cloud.points.push_back(ring_point(0, col, kWidth, 10.0));
    grid = project(cloud, all_of(cloud), kWidth, 2);
    nodes = horizontal_update(grid, cloud, 0, 0.3, forest);
  }
  PointCloud cloud;
  SphericalGrid grid{1, 1};
  LabelForest forest;
  std::vector<ClusterNode> nodes;
};

TEST(SkippedLinkage, BridgesOccludingPole) {
  WallPoleWall s;
  ASSERT_EQ(s.nodes.size(), 3u);
  // Boundary gap: two columns at 10 m.
  EXPECT_LT(distance(s.cloud[9], s.cloud[11]), 0.3);
  EXPECT_EQ(skipped_linkage(s.grid, s.cloud, s.nodes, 0.3, 1, s.forest), 1u);
  EXPECT_EQ(s.forest.find(s.nodes[0].label), s.forest.find(s.nodes[2].label));
  EXPECT_NE(s.forest.find(s.nodes[0].label), s.forest.find(s.nodes[1].label));
}

TEST(SkippedLinkage, DisabledWithZeroSkip) {
  WallPoleWall s;
  EXPECT_EQ(skipped_linkage(s.grid, s.cloud, s.nodes, 0.3, 0, s.forest), 0u);
  EXPECT_EQ(s.forest.union_count(), 0u);
}

TEST(SkippedLinkage, CentroidDistanceIsStricter) {
  WallPoleWall s;
  EXPECT_EQ(skipped_linkage(s.grid, s.cloud, s.nodes, 0.3, 1, s.forest, SkipDistance::kCentroid), 0u);
}

TEST(SkippedLinkage, ReachIsBoundedBySkipCount) {
  // wall | 3 isolated posts at 4, 5, 6 m | wall: the far wall node is k + 4.
  const int w = 720;
  PointCloud c;
  for (int col = 100; col < 110; ++col) c.points.push_back(ring_point(0, col, w, 10.0));
  c.points.push_back(ring_point(0, 110, w, 4.0));
  c.points.push_back(ring_point(0, 111, w, 5.0));
  c.points.push_back(ring_point(0, 112, w, 6.0));
  for (int col = 113; col < 123; ++col) c.points.push_back(ring_point(0, col, w, 10.0));
  const auto g = project(c, all_of(c), w, 2);
  for (int skip : {2, 3}) {
    LabelForest forest;
    const auto nodes = horizontal_update(g, c, 0, 0.6, forest);
    ASSERT_EQ(nodes.size(), 5u);
    skipped_linkage(g, c, nodes, 0.6, skip, forest);
    EXPECT_EQ(forest.find(nodes[0].label) == forest.find(nodes[4].label), skip >= 3) << skip;
  }
}

// ---------------------------------------------------------------------------
// Vertical update
// ---------------------------------------------------------------------------

std::vector<ClusterNode> random_intervals(std::mt19937_64& rng, std::size_t n, int max_gap, int max_len) {
  std::vector<ClusterNode> ring;
  int col = static_cast<int>(rng() % static_cast<unsigned>(max_gap + 1));
  for (std::size_t k = 0; k < n; ++k) {
    const int len = static_cast<int>(rng() % static_cast<unsigned>(max_len));
    ring.push_back({col, col + len, 0, static_cast<LabelForest::Label>(k)});
    col += len + 1 + static_cast<int>(rng() % static_cast<unsigned>(max_gap + 1));
  }
  return ring;
}

std::pair<std::size_t, std::size_t> overlap_scan(const std::vector<ClusterNode>& ring, int lo, int hi) {
  std::size_t first = ring.size(), last = ring.size();
  for (std::size_t k = 0; k < ring.size(); ++k)
    if (ring[k].end >= lo && ring[k].start <= hi) {
      if (first == ring.size()) first = k;
      last = k + 1;
    }
  if (first == ring.size()) return {0, 0};
  return {first, last};
}

TEST(OverlapBounds, ExhaustiveOnSmallRings) {
  std::mt19937_64 rng(21);
  for (std::size_t n = 0; n <= 12; ++n) {
    for (int layout = 0; layout < 40; ++layout) {
      const auto ring = random_intervals(rng, n, 3, 4);
      const int right = ring.empty() ? 5 : ring.back().end + 3;
      for (int lo = -3; lo <= right; ++lo)
        for (int hi = lo; hi <= right; ++hi) {
          const auto got = overlap_bounds(ring, lo, hi);
          const auto want = overlap_scan(ring, lo, hi);
          if (want.first == want.second) {
            ASSERT_EQ(got.first, got.second) << n << ' ' << lo << ' ' << hi;
          } else {
            ASSERT_EQ(got, want) << n << ' ' << lo << ' ' << hi;
          }
        }
    }
  }
}

TEST(OverlapBounds, RandomLargeRings) {
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto ring = random_intervals(rng, 1 + rng() % 500, 20, 30);
    const int span = ring.back().end + 50;
    const int lo = static_cast<int>(rng() % static_cast<unsigned>(span)) - 25;
    const int hi = lo + static_cast<int>(rng() % 200);
    const auto got = overlap_bounds(ring, lo, hi);
    const auto want = overlap_scan(ring, lo, hi);
    if (want.first == want.second) {
      EXPECT_EQ(got.first, got.second);
    } else {
      EXPECT_EQ(got, want);
    }
  }
}

// Each query costs two binary searches, so at most 2 ceil(log2(N + 1)) probes.
TEST(OverlapBounds, ProbeCountIsLogarithmic) {
  std::mt19937_64 rng(23);
  for (std::size_t n = 16; n <= 4096; n *= 2) {
    const auto ring = random_intervals(rng, n, 5, 5);
    const auto bound = 2 * static_cast<std::size_t>(std::ceil(std::log2(static_cast<double>(n) + 1)));
    std::size_t worst = 0;
    for (int q = 0; q < 500; ++q) {
      const int lo = static_cast<int>(rng() % static_cast<unsigned>(ring.back().end + 1));
      std::size_t probes = 0;
      overlap_bounds(ring, lo, lo + 10, &probes);
      worst = std::max(worst, probes);
    }
    EXPECT_LE(worst, bound) << n;
    if (n >= 256) {
      EXPECT_LT(worst, n / 8) << n;
    }
  }
}

// Two rings with random occupancy and geometry; link iff some pair < t_vert.
TEST(VerticalLink, EarlyExitAgreesWithExhaustiveCheck) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> r(5.0, 8.0), z(-0.5, 0.5);
  std::size_t links = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int w = 256;
    PointCloud c;
    ClusterNode n{static_cast<int>(rng() % 100), 0, 1, 0}, m{static_cast<int>(rng() % 100), 0, 0, 1};
    n.end = n.start + static_cast<int>(rng() % 20);
    m.end = m.start + static_cast<int>(rng() % 20);
    for (int col = n.start; col <= n.end; ++col)
      if (col == n.start || rng() % 3) c.points.push_back(ring_point(1, col, w, r(rng), z(rng)));
    for (int col = m.start; col <= m.end; ++col)
      if (col == m.start || rng() % 3) c.points.push_back(ring_point(0, col, w, r(rng), z(rng)));
    const auto g = project(c, all_of(c), w, 2);

    std::vector<std::size_t> a, b;
    for (int col = n.start; col <= n.end; ++col)
      if (g.occupied(1, col)) a.push_back(static_cast<std::size_t>(g.at(1, col)));
    for (int col = m.start; col <= m.end; ++col)
      if (g.occupied(0, col)) b.push_back(static_cast<std::size_t>(g.at(0, col)));
    bool want = false;
    for (auto i : a)
      for (auto j : b) want |= distance(c[i], c[j]) < 0.5;

    std::size_t checks = 0;
    EXPECT_EQ(vertical_link(g, c, n, m, 0.5, &checks), want) << trial;
    EXPECT_LE(checks, a.size() * b.size());
    if (!want) {
      EXPECT_EQ(checks, a.size() * b.size());
    }
    links += want;
  }
  EXPECT_GT(links, 50u);
  EXPECT_LT(links, 950u);
}

TEST(VerticalLink, OverlappingStackStopsOnFirstPair) {
  const int w = 512;
  PointCloud c;
  for (int col = 0; col < 40; ++col) c.points.push_back(ring_point(0, col, w, 6.0, 0.0));
  for (int col = 0; col < 40; ++col) c.points.push_back(ring_point(1, col, w, 6.0, 0.1));
  const auto g = project(c, all_of(c), w, 2);
  const ClusterNode lower{0, 39, 0, 0}, upper{0, 39, 1, 1};
  std::size_t checks = 0;
  EXPECT_TRUE(vertical_link(g, c, upper, lower, 0.5, &checks));
  EXPECT_EQ(checks, 1u);
}

TEST(VerticalUpdate, RespectsColumnExtension) {
  const int w = 512;
  PointCloud c;
  c.points.push_back(ring_point(0, 100, w, 6.0, 0.0));
  c.points.push_back(ring_point(1, 103, w, 6.0, 0.05));
  const auto g = project(c, all_of(c), w, 2);
  for (int t_ext : {0, 2, 3}) {
    LabelForest forest;
    const auto r0 = horizontal_update(g, c, 0, 0.3, forest);
    const auto r1 = horizontal_update(g, c, 1, 0.3, forest);
    const std::vector<std::span<const ClusterNode>> prev{r0};
    VerticalStats stats;
    vertical_update(g, c, r1, prev, t_ext, 0.5, forest, &stats);
    EXPECT_EQ(stats.links, t_ext >= 3 ? 1u : 0u) << t_ext;
    EXPECT_EQ(stats.candidate_nodes, t_ext >= 3 ? 1u : 0u);
  }
}

// ---------------------------------------------------------------------------
// Label resolution
// ---------------------------------------------------------------------------

TEST(LabelForest, SmallestMemberIsCanonical) {
  LabelForest f;
  for (int i = 0; i < 6; ++i) f.make();
  EXPECT_TRUE(f.unite(5, 3));
  EXPECT_TRUE(f.unite(3, 4));
  EXPECT_FALSE(f.unite(4, 5));
  EXPECT_EQ(f.find(5), 3u);
  EXPECT_TRUE(f.unite(4, 1));
  EXPECT_EQ(f.find(5), 1u);
  EXPECT_EQ(f.union_count(), 3u);
}

// One-cell nodes with random unions; the dense IDs must match BFS
// components of the union graph and be numbered by first appearance.
TEST(ResolveLabels, MatchesGraphComponentsOracle) {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 200; ++trial) {
    const int w = 64, h = 8;
    PointCloud c;
    std::vector<std::vector<ClusterNode>> rings(h);
    LabelForest forest;
    std::vector<std::pair<int, int>> cells;
    for (int row = 0; row < h; ++row)
      for (int col = 0; col < w; ++col)
        if (rng() % 4 == 0) cells.emplace_back(row, col);
    std::shuffle(cells.begin(), cells.end(), rng);  // point order differs from grid order
    for (const auto& [row, col] : cells) c.points.push_back(ring_point(row, col, w, 3.0));
    c.points.push_back(pt(0, 0, 0));  // dropped: zero range
    const auto g = project(c, all_of(c), w, h);
    std::vector<std::size_t> point_of_label;
    for (int row = 0; row < h; ++row)
      for (int col = 0; col < w; ++col)
        if (g.occupied(row, col)) {
          rings[row].push_back({col, col, row, forest.make()});
          point_of_label.push_back(static_cast<std::size_t>(g.at(row, col)));
        }
    const std::size_t n = forest.size();
    std::vector<std::vector<std::size_t>> adj(n);
    for (std::size_t e = 0; e < n / 2 && n > 1; ++e) {
      const auto a = rng() % n, b = rng() % n;
      forest.unite(static_cast<LabelForest::Label>(a), static_cast<LabelForest::Label>(b));
      adj[a].push_back(b);
      adj[b].push_back(a);
    }
    std::vector<int> comp(n, -1);
    int comps = 0;
    for (std::size_t s = 0; s < n; ++s) {
      if (comp[s] >= 0) continue;
      std::queue<std::size_t> q;
      q.push(s);
      comp[s] = comps;
      while (!q.empty()) {
        const auto u = q.front();
        q.pop();
        for (auto v : adj[u])
          if (comp[v] < 0) {
            comp[v] = comps;
            q.push(v);
          }
      }
      ++comps;
    }
    std::size_t k = 0;
    const auto ids = resolve_labels(forest, g, rings, c.size(), &k);
    EXPECT_EQ(k, static_cast<std::size_t>(comps));
    EXPECT_EQ(ids.back(), 0u);
    std::map<int, std::uint32_t> comp_to_id;
    for (std::size_t l = 0; l < n; ++l) {
      const auto [it, fresh] = comp_to_id.try_emplace(comp[l], ids[point_of_label[l]]);
      EXPECT_EQ(it->second, ids[point_of_label[l]]);
    }
    std::set<std::uint32_t> distinct;
    for (const auto& [cc, id] : comp_to_id) distinct.insert(id);
    EXPECT_EQ(distinct.size(), comp_to_id.size());
    std::uint32_t next = 1;
    for (std::size_t i = 0; i + 1 < ids.size(); ++i) {
      ASSERT_LE(ids[i], next);
      if (ids[i] == next) ++next;
    }
  }
}

// ---------------------------------------------------------------------------
// Whole-clustering properties
// ---------------------------------------------------------------------------

// Every cluster under `fine` lies inside one cluster under `coarse`.
bool refines(const std::vector<std::uint32_t>& fine, const std::vector<std::uint32_t>& coarse) {
  std::map<std::uint32_t, std::uint32_t> up;
  for (std::size_t i = 0; i < fine.size(); ++i) {
    if (fine[i] == 0) continue;
    const auto [it, fresh] = up.try_emplace(fine[i], coarse[i]);
    if (it->second != coarse[i]) return false;
  }
  return true;
}

std::vector<std::uint8_t> obstacle_truth(const synth::LabeledScan& s) {
  std::vector<std::uint8_t> m(s.cloud.size());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = s.truth_terrain[i] ? 0 : 1;
  return m;
}

TEST(ClusterObjects, MergeOptionsOnlyCoarsen) {
  for (const char* name : {"urban", "pole", "occluded-wall", "bumpy"}) {
    const auto sc = *synth::find_scenario(name);
    const auto scan = synth::render(sc.spec);
    const auto mask = obstacle_truth(scan);
    const auto base = synth::config_for(sc.spec);
    auto off = base;
    off.circular_linkage = false;
    off.t_skip = 0;
    off.t_ring = 0;
    const auto a = cluster_objects(scan.cloud, mask, off);
    std::vector<std::function<void(PipelineConfig&)>> steps{
        [](PipelineConfig& c) { c.circular_linkage = true; }, [](PipelineConfig& c) { c.t_skip = 10; },
        [](PipelineConfig& c) { c.t_ring = 5; }, [](PipelineConfig& c) { c.t_ext = 200; },
        [](PipelineConfig& c) { c.t_vert = 0.8; }};
    auto cfg = off;
    auto prev = a;
    for (const auto& step : steps) {
      step(cfg);
      const auto next = cluster_objects(scan.cloud, mask, cfg);
      EXPECT_TRUE(refines(prev.cluster_id, next.cluster_id)) << name;
      EXPECT_LE(next.cluster_count, prev.cluster_count) << name;
      prev = next;
    }
  }
}

TEST(ClusterObjects, PartitionOfObstaclePoints) {
  const auto sc = *synth::find_scenario("urban");
  const auto scan = synth::render(sc.spec);
  const auto mask = obstacle_truth(scan);
  const auto r = cluster_objects(scan.cloud, mask, synth::config_for(sc.spec));
  std::set<std::uint32_t> ids;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) {
      EXPECT_EQ(r.cluster_id[i], 0u);
      continue;
    }
    EXPECT_GE(r.cluster_id[i], 1u);
    ids.insert(r.cluster_id[i]);
  }
  EXPECT_EQ(ids.size(), r.cluster_count);
  EXPECT_EQ(*ids.rbegin(), r.cluster_count);
}

TEST(ClusterObjects, RingWindowZeroSplitsAPole) {
  const auto sc = *synth::find_scenario("pole");
  const auto scan = synth::render(sc.spec);
  const auto mask = obstacle_truth(scan);
  auto cfg = synth::config_for(sc.spec);
  EXPECT_EQ(cluster_objects(scan.cloud, mask, cfg).cluster_count, 1u);
  cfg.t_ring = 0;
  EXPECT_GT(cluster_objects(scan.cloud, mask, cfg).cluster_count, 10u);
}

TEST(ClusterObjects, EmptyInputGivesNoClusters) {
  PointCloud c;
  const std::vector<std::uint8_t> mask;
  const auto r = cluster_objects(c, mask, PipelineConfig{});
  EXPECT_EQ(r.cluster_count, 0u);
  EXPECT_TRUE(r.cluster_id.empty());
}

}  // namespace
}  // namespace travel
