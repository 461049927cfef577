#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "travel/core.hpp"

namespace travel::synth {

// Semantic class IDs written to truth label files, following the
// SemanticKITTI numbering so the evaluation path is shared with real data.
inline constexpr std::uint16_t kClassRoad = 40;
inline constexpr std::uint16_t kClassCar = 10;
inline constexpr std::uint16_t kClassBuilding = 50;
inline constexpr std::uint16_t kClassOtherStructure = 52;
inline constexpr std::uint16_t kClassPole = 80;

/// Ground surface z = tan(slope) * x over |x|, |y| <= half_extent.
struct GroundPlane {
  double slope_deg = 0.0;
  double half_extent = 20.0;
};

/// Wedge rising along +x from (x_start, y) at z = 0 to x_end, with a vertical
/// back face and side faces.
struct Ramp {
  double x_start = 8.0;
  double x_end = 12.0;
  double center_y = 0.0;
  double half_width = 3.0;
  double slope_deg = 20.0;
};

/// Box resting on z = base_z, rotated by yaw about its vertical axis.
struct Box {
  double cx = 0.0, cy = 0.0;
  double size_x = 1.0, size_y = 1.0, size_z = 1.0;
  double yaw = 0.0;
  double base_z = 0.0;
};

/// Vertical cylinder with a flat top.
struct Pole {
  double cx = 0.0, cy = 0.0;
  double radius = 0.1;
  double height = 3.0;
  double base_z = 0.0;
};

using Shape = std::variant<GroundPlane, Ramp, Box, Pole>;

struct Primitive {
  Shape shape;
  std::uint32_t instance = 0;  // 0 for terrain
  bool terrain = false;
  std::uint16_t semantic = kClassOtherStructure;
};

/// Thin box between two xy endpoints.
inline Box make_wall(double x0, double y0, double x1, double y1, double thickness, double height) {
  Box b;
  b.cx = 0.5 * (x0 + x1);
  b.cy = 0.5 * (y0 + y1);
  b.size_x = std::hypot(x1 - x0, y1 - y0);
  b.size_y = thickness;
  b.size_z = height;
  b.yaw = std::atan2(y1 - y0, x1 - x0);
  return b;
}

struct SensorSpec {
  double height = 1.8;  // m above z = 0
  int rings = 64;
  int azimuth_steps = 1024;
  double elevation_min_deg = -25.0;
  double elevation_max_deg = 3.0;
  double max_range = 200.0;

  double ring_elevation(int ring) const {
    const double t = static_cast<double>(ring) / static_cast<double>(rings - 1);
    return (elevation_min_deg + t * (elevation_max_deg - elevation_min_deg)) * std::numbers::pi / 180.0;
  }
  /// Azimuth of column j, centered in its projection bin.
  double azimuth(int step) const {
    return -std::numbers::pi + (static_cast<double>(step) + 0.5) * 2.0 * std::numbers::pi / azimuth_steps;
  }
};

struct SceneSpec {
  std::string name;
  std::vector<Primitive> primitives;
  SensorSpec sensor;
  double range_noise = 0.0;  // Gaussian sigma, m
  std::uint64_t seed = 0;
};

/// Rendered scan with per-point truth, index-aligned with the cloud. Points
/// are expressed in a gravity-aligned frame whose origin is the ground point
/// below the sensor.
struct LabeledScan {
  PointCloud cloud;
  std::vector<std::uint8_t> truth_terrain;
  std::vector<std::uint32_t> truth_object;
  std::vector<std::uint16_t> truth_semantic;

  /// Label-file encoding of the truth: semantic | instance << 16.
  std::vector<std::uint32_t> truth_label_values() const {
    std::vector<std::uint32_t> out(truth_object.size());
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] = static_cast<std::uint32_t>(truth_semantic[i]) | (truth_object[i] << 16);
    return out;
  }
};

// ---------------------------------------------------------------------------
// Ray intersection
// ---------------------------------------------------------------------------

namespace detail {

using Vec3 = Eigen::Vector3d;
inline constexpr double kNoHit = std::numeric_limits<double>::infinity();
inline constexpr double kMinT = 1e-9;

inline double hit_triangle(const Vec3& o, const Vec3& d, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 e1 = b - a, e2 = c - a;
  const Vec3 pv = d.cross(e2);
  const double det = e1.dot(pv);
  if (std::abs(det) < 1e-14) return kNoHit;
  const double inv = 1.0 / det;
  const Vec3 tv = o - a;
  const double u = tv.dot(pv) * inv;
  if (u < 0.0 || u > 1.0) return kNoHit;
  const Vec3 qv = tv.cross(e1);
  const double v = d.dot(qv) * inv;
  if (v < 0.0 || u + v > 1.0) return kNoHit;
  const double t = e2.dot(qv) * inv;
  return t > kMinT ? t : kNoHit;
}

inline double hit(const GroundPlane& g, const Vec3& o, const Vec3& d) {
  const double k = std::tan(g.slope_deg * std::numbers::pi / 180.0);
  const double den = d.z() - k * d.x();
  if (std::abs(den) < 1e-15) return kNoHit;
  const double t = (k * o.x() - o.z()) / den;
  if (!(t > kMinT)) return kNoHit;
  const Vec3 p = o + t * d;
  if (std::abs(p.x()) > g.half_extent || std::abs(p.y()) > g.half_extent) return kNoHit;
  return t;
}

inline double hit(const Ramp& r, const Vec3& o, const Vec3& d) {
  const double h = (r.x_end - r.x_start) * std::tan(r.slope_deg * std::numbers::pi / 180.0);
  const double y0 = r.center_y - r.half_width, y1 = r.center_y + r.half_width;
  const Vec3 a(r.x_start, y0, 0.0), b(r.x_start, y1, 0.0);
  const Vec3 c(r.x_end, y0, h), dd(r.x_end, y1, h);
  const Vec3 e(r.x_end, y0, 0.0), f(r.x_end, y1, 0.0);
  const std::array<std::array<Vec3, 3>, 6> tris{{{a, b, dd}, {a, dd, c}, {c, dd, f}, {c, f, e}, {a, c, e}, {b, dd, f}}};
  double best = kNoHit;
  for (const auto& t : tris) best = std::min(best, hit_triangle(o, d, t[0], t[1], t[2]));
  return best;
}

inline double hit(const Box& b, const Vec3& o, const Vec3& d) {
  const double c = std::cos(-b.yaw), s = std::sin(-b.yaw);
  const auto to_local = [&](const Vec3& v, bool point) {
    const double x = point ? v.x() - b.cx : v.x();
    const double y = point ? v.y() - b.cy : v.y();
    return Vec3(c * x - s * y, s * x + c * y, v.z());
  };
  const Vec3 lo = to_local(o, true), ld = to_local(d, false);
  const Vec3 bmin(-0.5 * b.size_x, -0.5 * b.size_y, b.base_z);
  const Vec3 bmax(0.5 * b.size_x, 0.5 * b.size_y, b.base_z + b.size_z);
  double t0 = -std::numeric_limits<double>::infinity(), t1 = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 3; ++k) {
    if (std::abs(ld(k)) < 1e-15) {
      if (lo(k) < bmin(k) || lo(k) > bmax(k)) return kNoHit;
      continue;
    }
    double ta = (bmin(k) - lo(k)) / ld(k), tb = (bmax(k) - lo(k)) / ld(k);
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
  }
  if (t0 > t1 || !(t0 > kMinT)) return kNoHit;
  return t0;
}

inline double hit(const Pole& p, const Vec3& o, const Vec3& d) {
  double best = kNoHit;
  const double ox = o.x() - p.cx, oy = o.y() - p.cy;
  const double a = d.x() * d.x() + d.y() * d.y();
  if (a > 1e-15) {
    const double b = 2.0 * (ox * d.x() + oy * d.y());
    const double c = ox * ox + oy * oy - p.radius * p.radius;
    const double disc = b * b - 4.0 * a * c;
    if (disc >= 0.0) {
      const double t = (-b - std::sqrt(disc)) / (2.0 * a);
      const double z = o.z() + t * d.z();
      if (t > kMinT && z >= p.base_z && z <= p.base_z + p.height) best = t;
    }
  }
  if (std::abs(d.z()) > 1e-15) {
    const double t = (p.base_z + p.height - o.z()) / d.z();
    const double x = ox + t * d.x(), y = oy + t * d.y();
    if (t > kMinT && x * x + y * y <= p.radius * p.radius) best = std::min(best, t);
  }
  return best;
}

}  // namespace detail

/// Ray parameter of the first intersection with a primitive, or +inf.
inline double intersect(const Primitive& prim, const Eigen::Vector3d& origin, const Eigen::Vector3d& dir) {
  return std::visit([&](const auto& s) { return detail::hit(s, origin, dir); }, prim.shape);
}

inline void validate(const SensorSpec& s) {
  if (s.rings < 2) throw ConfigError("sensor.rings", "must be >= 2");
  if (s.azimuth_steps < 2) throw ConfigError("sensor.azimuth_steps", "must be >= 2");
  if (!(s.elevation_max_deg > s.elevation_min_deg))
    throw ConfigError("sensor.elevation", "maximum must exceed minimum");
  if (s.elevation_min_deg <= -90.0 || s.elevation_max_deg >= 90.0)
    throw ConfigError("sensor.elevation", "must lie strictly inside (-90, 90) degrees");
  if (!(s.height > 0.0)) throw ConfigError("sensor.height", "must be > 0");
  if (!(s.max_range > 0.0)) throw ConfigError("sensor.max_range", "must be > 0");
}

/// Casts one ray per (ring, azimuth step), ring-major. Misses are omitted.
inline LabeledScan render(const SceneSpec& spec) {
  validate(spec.sensor);
  if (spec.range_noise < 0.0) throw ConfigError("range_noise", "must be >= 0");
  const auto& s = spec.sensor;
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> noise(0.0, spec.range_noise > 0.0 ? spec.range_noise : 1.0);

  LabeledScan scan;
  scan.cloud.frame_id = spec.name;
  const Eigen::Vector3d origin(0.0, 0.0, s.height);
  for (int ring = 0; ring < s.rings; ++ring) {
    const double el = s.ring_elevation(ring);
    for (int step = 0; step < s.azimuth_steps; ++step) {
      const double az = s.azimuth(step);
      const Eigen::Vector3d dir(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el));
      double best = s.max_range;
      const Primitive* owner = nullptr;
      for (const auto& prim : spec.primitives) {
        const double t = intersect(prim, origin, dir);
        if (t < best) {
          best = t;
          owner = &prim;
        }
      }
      if (!owner) continue;
      if (spec.range_noise > 0.0) best += noise(rng);
      const Eigen::Vector3d p = origin + best * dir;
      Point pt;
      pt.x = p.x();
      pt.y = p.y();
      pt.z = p.z();
      pt.ring = static_cast<std::uint16_t>(ring);
      scan.cloud.points.push_back(pt);
      scan.truth_terrain.push_back(owner->terrain ? 1 : 0);
      scan.truth_object.push_back(owner->terrain ? 0 : owner->instance);
      scan.truth_semantic.push_back(owner->terrain ? kClassRoad : owner->semantic);
    }
  }
  return scan;
}

// ---------------------------------------------------------------------------
// Scenario suite
// ---------------------------------------------------------------------------

struct Scenario {
  SceneSpec spec;
  /// Number of above-ground objects the scene contains.
  std::size_t object_count = 0;
  std::string description;
};

inline Primitive ground(double slope_deg = 0.0, double half_extent = 20.0) {
  return {GroundPlane{slope_deg, half_extent}, 0, true, kClassRoad};
}

inline Primitive object(Shape shape, std::uint32_t instance, std::uint16_t semantic) {
  return {std::move(shape), instance, false, semantic};
}

/// Fixed acceptance scenes. All are noise-free except "bumpy"; every
/// randomized scene uses a fixed seed.
inline std::vector<Scenario> scenario_suite() {
  std::vector<Scenario> out;

  {
    SceneSpec s{"flat", {ground()}, {}, 0.0, 1};
    out.push_back({s, 0, "flat ground only"});
  }
  for (double slope : {10.0, 20.0, 45.0}) {
    SceneSpec s{"slope-" + std::to_string(static_cast<int>(slope)) + "deg", {ground(slope)}, {}, 0.0, 1};
    out.push_back({s, 0, "uniformly inclined ground"});
  }
  {
    SceneSpec s{"ramp-35deg", {ground(), object(Ramp{8.0, 11.0, 0.0, 3.0, 35.0}, 1, kClassOtherStructure)}, {}, 0.0, 1};
    out.push_back({s, 1, "35 degree wedge on flat ground"});
  }
  {
    Box b;
    b.cx = 7.0;
    b.size_x = 1.2;
    b.size_y = 1.2;
    b.size_z = 0.3;
    SceneSpec s{"low-box", {ground(), object(b, 1, kClassOtherStructure)}, {}, 0.0, 1};
    out.push_back({s, 1, "0.3 m box on flat ground"});
  }
  {
    Pole p;
    p.cx = 8.0;
    p.radius = 0.12;
    p.height = 4.0;
    SceneSpec s{"pole", {ground(), object(p, 1, kClassPole)}, {}, 0.0, 1};
    out.push_back({s, 1, "single pole"});
  }
  {
    // Thin pole in front of a distant wall. The sparser sensor puts the
    // wall's ring spacing just under t_vert, so only skipped linkage can
    // bridge the shadow the pole casts.
    Pole occluder;
    occluder.cx = 15.0;
    occluder.radius = 0.04;
    occluder.height = 5.0;
    SceneSpec s{"occluded-wall",
                {ground(), object(make_wall(30.0, -3.0, 30.0, 3.0, 0.2, 3.0), 1, kClassBuilding),
                 object(occluder, 2, kClassPole)},
                {},
                0.0,
                1};
    s.sensor.rings = 32;
    s.sensor.azimuth_steps = 2048;
    out.push_back({s, 2, "wall split by a thin occluder"});
  }
  {
    // Wall at the far edge of the ground patch, so it casts no shadow onto
    // ground that would leave sparse nodes behind it.
    SceneSpec s{"seam-wall",
                {ground(), object(make_wall(-19.8, -3.0, -19.8, 3.0, 0.2, 3.0), 1, kClassBuilding)},
                {},
                0.0,
                1};
    out.push_back({s, 1, "wall crossing the azimuth seam behind the sensor"});
  }
  {
    std::vector<Primitive> prims{ground()};
    std::uint32_t id = 1;
    const std::array<std::array<double, 3>, 5> low{{{6.0, 3.0, 0.25}, {-7.0, 2.0, 0.35}, {3.0, -8.0, 0.3},
                                                     {-5.0, -6.0, 0.4}, {10.0, -2.0, 0.3}}};
    for (const auto& l : low) {
      Box b;
      b.cx = l[0];
      b.cy = l[1];
      b.size_x = 1.0;
      b.size_y = 0.8;
      b.size_z = l[2];
      prims.push_back(object(b, id++, kClassOtherStructure));
    }
    SceneSpec s{"bumpy", prims, {}, 0.02, 7};
    out.push_back({s, low.size(), "low-lying boxes on noisy ground"});
  }
  {
    std::vector<Primitive> prims{ground()};
    std::uint32_t id = 1;
    Box car;
    car.cx = 9.0;
    car.cy = -4.0;
    car.size_x = 4.2;
    car.size_y = 1.8;
    car.size_z = 1.5;
    prims.push_back(object(car, id++, kClassCar));
    car.cx = -8.0;
    car.cy = 5.0;
    car.yaw = 0.5;
    prims.push_back(object(car, id++, kClassCar));
    for (const auto& [x, y] : std::array<std::array<double, 2>, 3>{{{6.0, 6.0}, {-4.0, -9.0}, {14.0, 3.0}}}) {
      Pole p;
      p.cx = x;
      p.cy = y;
      p.radius = 0.15;
      p.height = 5.0;
      prims.push_back(object(p, id++, kClassPole));
    }
    prims.push_back(object(make_wall(-16.0, -12.0, -16.0, 0.0, 0.3, 4.0), id++, kClassBuilding));
    prims.push_back(object(make_wall(4.0, 17.0, 16.0, 17.0, 0.3, 4.0), id++, kClassBuilding));
    SceneSpec s{"urban", prims, {}, 0.01, 11};
    out.push_back({s, prims.size() - 1, "cars, poles and buildings"});
  }
  return out;
}

inline std::optional<Scenario> find_scenario(const std::string& name) {
  for (auto& s : scenario_suite())
    if (s.spec.name == name) return s;
  return std::nullopt;
}

/// Pipeline configuration whose projection matches the scene's sensor.
inline PipelineConfig config_for(const SceneSpec& spec, PipelineConfig base = {}) {
  base.proj_width = spec.sensor.azimuth_steps;
  base.proj_height = spec.sensor.rings;
  return base;
}

}  // namespace travel::synth
