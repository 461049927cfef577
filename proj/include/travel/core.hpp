#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace travel {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Path missing or unreadable / unwritable.
class IoError : public Error {
 public:
  using Error::Error;
};

/// File content does not match the declared format.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// A configuration field is out of range or unknown. `field()` names it.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error("config field '" + field + "': " + what), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

// ---------------------------------------------------------------------------
// Geometry
// ---------------------------------------------------------------------------

struct Point {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  std::optional<float> intensity;
  std::optional<std::uint16_t> ring;

  double range() const noexcept { return std::sqrt(x * x + y * y + z * z); }
  bool finite() const noexcept {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
  }
};

inline double distance(const Point& a, const Point& b) noexcept {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  const double dz = a.z - b.z;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

/// Ordered point set. The position of a point in `points` is its identity for
/// every per-point label array produced downstream.
struct PointCloud {
  std::vector<Point> points;
  std::string frame_id;

  std::size_t size() const noexcept { return points.size(); }
  bool empty() const noexcept { return points.empty(); }
  const Point& operator[](std::size_t i) const { return points[i]; }

  bool has_rings() const noexcept {
    return !points.empty() && points.front().ring.has_value();
  }
};

/// Wraps an angle into (-pi, pi].
inline double normalize_angle(double a) noexcept {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  a = std::fmod(a, kTwoPi);
  if (a <= -std::numbers::pi) a += kTwoPi;
  if (a > std::numbers::pi) a -= kTwoPi;
  return a;
}

struct Pose {
  double roll = 0.0;
  double pitch = 0.0;
  double yaw = 0.0;
  std::array<double, 3> translation{0.0, 0.0, 0.0};

  Pose() = default;
  Pose(double r, double p, double y, std::array<double, 3> t = {0.0, 0.0, 0.0})
      : roll(normalize_angle(r)), pitch(normalize_angle(p)), yaw(normalize_angle(y)),
        translation(t) {}
};

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

enum class SkipDistance { kBoundary, kCentroid };

/// Every tunable of the pipeline. Defaults reproduce the published parameter
/// table; the projection size and field extent are artifact-level additions.
struct PipelineConfig {
  // Ground stage.
  double tgf_resolution = 8.0;       // m, side of one square cell
  double incline_thresh = 30.0;      // deg
  int min_node_points = 10;          // points
  double eps1 = 0.03;                // rad
  double eps2 = 0.1;                 // rad / m
  double eps3 = 0.1;                 // m
  double field_extent = 100.0;       // m, half-width of the square field
  bool seed_multi_region = false;

  // Object stage.
  double t_horz = 0.3;               // m
  int t_skip = 10;                   // nodes
  int t_ring = 5;                    // rings; 0 disables the vertical update
  double t_vert = 0.5;               // m
  int t_ext = 100;                   // columns
  int proj_width = 1024;
  int proj_height = 64;
  bool circular_linkage = true;
  SkipDistance skip_distance = SkipDistance::kBoundary;

  /// Throws ConfigError naming the first offending field.
  void validate() const {
    auto positive = [](const char* name, double v) {
      if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(name, "must be > 0");
    };
    positive("tgf_resolution", tgf_resolution);
    if (!(incline_thresh > 0.0 && incline_thresh < 90.0))
      throw ConfigError("incline_thresh", "must lie in (0, 90) degrees");
    if (min_node_points < 3) throw ConfigError("min_node_points", "must be >= 3");
    positive("eps1", eps1);
    positive("eps2", eps2);
    positive("eps3", eps3);
    positive("field_extent", field_extent);
    positive("t_horz", t_horz);
    if (t_skip < 0) throw ConfigError("t_skip", "must be >= 0");
    if (t_ring < 0) throw ConfigError("t_ring", "must be >= 0");
    positive("t_vert", t_vert);
    if (t_ext < 0) throw ConfigError("t_ext", "must be >= 0");
    if (proj_width < 2) throw ConfigError("proj_width", "must be >= 2");
    if (proj_height < 2) throw ConfigError("proj_height", "must be >= 2");
  }
};

// ---------------------------------------------------------------------------
// Results
// ---------------------------------------------------------------------------

struct StageTimings {
  double align_ms = 0.0;
  double ground_ms = 0.0;
  double cluster_ms = 0.0;
  double total_ms = 0.0;
};

struct SegmentationResult {
  std::vector<std::uint8_t> terrain_mask;  // 1 = terrain
  std::vector<std::uint32_t> cluster_id;   // 0 = terrain / unclustered
  std::size_t cluster_count = 0;
  StageTimings timings;

  /// Output label encoding: 0 for terrain, k >= 1 for cluster k.
  std::vector<std::uint32_t> label_file_values() const {
    std::vector<std::uint32_t> out(cluster_id.size(), 0);
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] = terrain_mask[i] ? 0u : cluster_id[i];
    return out;
  }
};

}  // namespace travel
