#pragma once

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "travel/core.hpp"

namespace travel {

enum class ScanFormat { kKittiBin, kCsv, kPlyAscii };

inline std::string to_string(ScanFormat f) {
  switch (f) {
    case ScanFormat::kKittiBin: return "kitti_bin";
    case ScanFormat::kCsv: return "csv";
    case ScanFormat::kPlyAscii: return "ply_ascii";
  }
  return "?";
}

inline ScanFormat parse_scan_format(std::string_view name) {
  if (name == "kitti_bin" || name == "bin") return ScanFormat::kKittiBin;
  if (name == "csv") return ScanFormat::kCsv;
  if (name == "ply_ascii" || name == "ply") return ScanFormat::kPlyAscii;
  throw ConfigError("format", "unknown scan format '" + std::string(name) + "'");
}

/// Guesses the format from the file extension; kitti_bin when unknown.
inline ScanFormat scan_format_from_path(const std::filesystem::path& p) {
  const auto ext = p.extension().string();
  if (ext == ".csv") return ScanFormat::kCsv;
  if (ext == ".ply") return ScanFormat::kPlyAscii;
  return ScanFormat::kKittiBin;
}

struct ScanLoad {
  PointCloud cloud;
  std::size_t dropped = 0;  // non-finite records removed at ingestion
};

namespace detail {

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed for '" + path.string() + "'");
  return bytes;
}

inline std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  return out;
}

template <typename T>
T load_le(const char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    auto* b = reinterpret_cast<unsigned char*>(&v);
    std::reverse(b, b + sizeof(T));
  }
  return v;
}

template <typename T>
void store_le(std::ostream& out, T v) {
  if constexpr (std::endian::native == std::endian::big) {
    auto* b = reinterpret_cast<unsigned char*>(&v);
    std::reverse(b, b + sizeof(T));
  }
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      out.push_back(trim(s.substr(start, i - start)));
      start = i + 1;
    }
  }
  return out;
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t' && s[j] != '\r') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

// from_chars accepts "nan"/"inf", which is what lets ingestion count and drop them.
inline double parse_double(std::string_view s, const std::string& where) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw FormatError(where + ": bad number '" + std::string(s) + "'");
  return v;
}

inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

inline std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= text.size(); ++i) {
    if (i == text.size() || text[i] == '\n') {
      auto line = trim(text.substr(start, i - start));
      if (!line.empty()) out.push_back(line);
      start = i + 1;
    }
  }
  return out;
}

struct Columns {
  int x = -1, y = -1, z = -1, intensity = -1, ring = -1;
};

inline Columns map_columns(const std::vector<std::string_view>& names, const std::string& where) {
  Columns c;
  for (int i = 0; i < static_cast<int>(names.size()); ++i) {
    const auto n = names[static_cast<std::size_t>(i)];
    if (n == "x") c.x = i;
    else if (n == "y") c.y = i;
    else if (n == "z") c.z = i;
    else if (n == "intensity") c.intensity = i;
    else if (n == "ring") c.ring = i;
  }
  if (c.x < 0 || c.y < 0 || c.z < 0) throw FormatError(where + ": missing x/y/z columns");
  return c;
}

inline void push_record(ScanLoad& load, const Columns& c, const std::vector<std::string_view>& fields,
                        const std::string& where) {
  Point p;
  p.x = parse_double(fields[static_cast<std::size_t>(c.x)], where);
  p.y = parse_double(fields[static_cast<std::size_t>(c.y)], where);
  p.z = parse_double(fields[static_cast<std::size_t>(c.z)], where);
  if (c.intensity >= 0)
    p.intensity = static_cast<float>(parse_double(fields[static_cast<std::size_t>(c.intensity)], where));
  if (c.ring >= 0) {
    const double r = parse_double(fields[static_cast<std::size_t>(c.ring)], where);
    if (!(r >= 0.0 && r <= 65535.0) || r != std::floor(r)) throw FormatError(where + ": bad ring index");
    p.ring = static_cast<std::uint16_t>(r);
  }
  if (!p.finite()) {
    ++load.dropped;
    return;
  }
  load.cloud.points.push_back(p);
}

inline ScanLoad parse_kitti(const std::string& bytes, const std::string& where) {
  constexpr std::size_t kRecord = 4 * sizeof(float);
  if (bytes.size() % kRecord != 0)
    throw FormatError(where + ": size " + std::to_string(bytes.size()) +
                      " is not a multiple of the 16-byte record");
  ScanLoad load;
  const std::size_t n = bytes.size() / kRecord;
  load.cloud.points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const char* rec = bytes.data() + i * kRecord;
    Point p;
    p.x = load_le<float>(rec);
    p.y = load_le<float>(rec + 4);
    p.z = load_le<float>(rec + 8);
    p.intensity = load_le<float>(rec + 12);
    if (!p.finite()) {
      ++load.dropped;
      continue;
    }
    load.cloud.points.push_back(p);
  }
  return load;
}

inline ScanLoad parse_csv(std::string_view text, const std::string& where) {
  const auto lines = lines_of(text);
  ScanLoad load;
  if (lines.empty()) return load;
  const auto header = split(lines.front(), ',');
  const Columns cols = map_columns(header, where);
  load.cloud.points.reserve(lines.size() - 1);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto fields = split(lines[i], ',');
    if (fields.size() != header.size())
      throw FormatError(where + ": line " + std::to_string(i + 1) + " has " +
                        std::to_string(fields.size()) + " fields, expected " +
                        std::to_string(header.size()));
    push_record(load, cols, fields, where);
  }
  return load;
}

inline ScanLoad parse_ply(std::string_view text, const std::string& where) {
  const auto lines = lines_of(text);
  if (lines.empty()) return {};
  if (lines.front() != "ply") throw FormatError(where + ": missing 'ply' magic");
  std::size_t vertex_count = 0;
  bool in_vertex = false;
  bool seen_vertex = false;
  std::vector<std::string_view> props;
  std::size_t i = 1;
  for (; i < lines.size(); ++i) {
    const auto tok = split_ws(lines[i]);
    if (tok.empty()) continue;
    if (tok[0] == "end_header") {
      ++i;
      break;
    }
    if (tok[0] == "format") {
      if (tok.size() < 2 || tok[1] != "ascii") throw FormatError(where + ": only ASCII PLY is supported");
    } else if (tok[0] == "element") {
      if (tok.size() != 3) throw FormatError(where + ": bad element line");
      in_vertex = tok[1] == "vertex";
      if (in_vertex) {
        if (seen_vertex) throw FormatError(where + ": duplicate vertex element");
        seen_vertex = true;
        vertex_count = static_cast<std::size_t>(parse_double(tok[2], where));
      }
    } else if (tok[0] == "property" && in_vertex) {
      if (tok.size() != 3) throw FormatError(where + ": unsupported property line");
      props.push_back(tok[2]);
    }
  }
  const Columns cols = map_columns(props, where);
  if (lines.size() - i < vertex_count) throw FormatError(where + ": truncated vertex list");
  ScanLoad load;
  load.cloud.points.reserve(vertex_count);
  for (std::size_t k = 0; k < vertex_count; ++k) {
    const auto fields = split_ws(lines[i + k]);
    if (fields.size() < props.size()) throw FormatError(where + ": short vertex record");
    push_record(load, cols, fields, where);
  }
  return load;
}

}  // namespace detail

/// Reads a scan. Non-finite records are dropped and counted.
inline ScanLoad load_scan(const std::filesystem::path& path, ScanFormat format) {
  const std::string bytes = detail::read_file(path);
  const std::string where = path.string();
  ScanLoad load;
  switch (format) {
    case ScanFormat::kKittiBin: load = detail::parse_kitti(bytes, where); break;
    case ScanFormat::kCsv: load = detail::parse_csv(bytes, where); break;
    case ScanFormat::kPlyAscii: load = detail::parse_ply(bytes, where); break;
  }
  load.cloud.frame_id = path.stem().string();
  return load;
}

/// Writes a scan. KITTI output narrows coordinates to float32; CSV and PLY
/// write shortest round-trip decimal so reading back is bit-exact.
inline void write_scan(const std::filesystem::path& path, const PointCloud& cloud, ScanFormat format) {
  auto out = detail::open_out(path);
  const bool with_intensity = !cloud.empty() && cloud.points.front().intensity.has_value();
  const bool with_ring = cloud.has_rings();
  switch (format) {
    case ScanFormat::kKittiBin:
      for (const auto& p : cloud.points) {
        detail::store_le(out, static_cast<float>(p.x));
        detail::store_le(out, static_cast<float>(p.y));
        detail::store_le(out, static_cast<float>(p.z));
        detail::store_le(out, p.intensity.value_or(0.0f));
      }
      break;
    case ScanFormat::kCsv: {
      out << "x,y,z" << (with_intensity ? ",intensity" : "") << (with_ring ? ",ring" : "") << '\n';
      for (const auto& p : cloud.points) {
        out << detail::format_double(p.x) << ',' << detail::format_double(p.y) << ','
            << detail::format_double(p.z);
        if (with_intensity) out << ',' << detail::format_double(p.intensity.value_or(0.0f));
        if (with_ring) out << ',' << p.ring.value_or(0);
        out << '\n';
      }
      break;
    }
    case ScanFormat::kPlyAscii: {
      out << "ply\nformat ascii 1.0\nelement vertex " << cloud.size() << '\n'
          << "property double x\nproperty double y\nproperty double z\n";
      if (with_intensity) out << "property float intensity\n";
      if (with_ring) out << "property ushort ring\n";
      out << "end_header\n";
      for (const auto& p : cloud.points) {
        out << detail::format_double(p.x) << ' ' << detail::format_double(p.y) << ' '
            << detail::format_double(p.z);
        if (with_intensity) out << ' ' << detail::format_double(p.intensity.value_or(0.0f));
        if (with_ring) out << ' ' << p.ring.value_or(0);
        out << '\n';
      }
      break;
    }
  }
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

// ---------------------------------------------------------------------------
// Label files: one little-endian uint32 per point.
// ---------------------------------------------------------------------------

struct LabelRecord {
  std::uint16_t semantic = 0;  // lower 16 bits
  std::uint16_t instance = 0;  // upper 16 bits

  static LabelRecord from_raw(std::uint32_t raw) noexcept {
    return {static_cast<std::uint16_t>(raw & 0xFFFFu), static_cast<std::uint16_t>(raw >> 16)};
  }
  std::uint32_t raw() const noexcept {
    return static_cast<std::uint32_t>(semantic) | (static_cast<std::uint32_t>(instance) << 16);
  }
};

inline std::vector<std::uint32_t> load_raw_labels(const std::filesystem::path& path,
                                                  std::optional<std::size_t> expected_count = {}) {
  const std::string bytes = detail::read_file(path);
  if (bytes.size() % 4 != 0)
    throw FormatError(path.string() + ": size is not a multiple of 4 bytes");
  const std::size_t n = bytes.size() / 4;
  if (expected_count && *expected_count != n)
    throw FormatError(path.string() + ": " + std::to_string(n) + " labels, expected " +
                      std::to_string(*expected_count));
  std::vector<std::uint32_t> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = detail::load_le<std::uint32_t>(bytes.data() + 4 * i);
  return out;
}

inline std::vector<LabelRecord> load_labels(const std::filesystem::path& path,
                                            std::optional<std::size_t> expected_count = {}) {
  const auto raw = load_raw_labels(path, expected_count);
  std::vector<LabelRecord> out;
  out.reserve(raw.size());
  for (auto r : raw) out.push_back(LabelRecord::from_raw(r));
  return out;
}

inline void write_labels(const std::filesystem::path& path, std::span<const std::uint32_t> labels) {
  auto out = detail::open_out(path);
  for (auto v : labels) detail::store_le(out, v);
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

// ---------------------------------------------------------------------------
// Config files: flat key=value, '#' comments.
// ---------------------------------------------------------------------------

namespace detail {

inline double config_number(std::string_view key, std::string_view value) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size() || !std::isfinite(v))
    throw ConfigError(std::string(key), "not a number: '" + std::string(value) + "'");
  return v;
}

inline int config_int(std::string_view key, std::string_view value) {
  const double v = config_number(key, value);
  if (v != std::floor(v) || std::abs(v) > 1e9)
    throw ConfigError(std::string(key), "not an integer: '" + std::string(value) + "'");
  return static_cast<int>(v);
}

inline bool config_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "on") return true;
  if (value == "false" || value == "0" || value == "off") return false;
  throw ConfigError(std::string(key), "not a boolean: '" + std::string(value) + "'");
}

}  // namespace detail

/// Field names accepted by `set_config_field`, in canonical order.
inline const std::vector<std::string>& config_field_names() {
  static const std::vector<std::string> names{
      "tgf_resolution", "incline_thresh", "min_node_points", "eps1",        "eps2",
      "eps3",           "field_extent",   "seed_multi_region", "t_horz",    "t_skip",
      "t_ring",         "t_vert",         "t_ext",          "proj_width",   "proj_height",
      "circular_linkage", "skip_distance"};
  return names;
}

/// Sets one field by name from its textual value. Does not validate ranges.
inline void set_config_field(PipelineConfig& c, std::string_view key, std::string_view value) {
  using namespace detail;
  if (key == "tgf_resolution") c.tgf_resolution = config_number(key, value);
  else if (key == "incline_thresh") c.incline_thresh = config_number(key, value);
  else if (key == "min_node_points") c.min_node_points = config_int(key, value);
  else if (key == "eps1") c.eps1 = config_number(key, value);
  else if (key == "eps2") c.eps2 = config_number(key, value);
  else if (key == "eps3") c.eps3 = config_number(key, value);
  else if (key == "field_extent") c.field_extent = config_number(key, value);
  else if (key == "seed_multi_region") c.seed_multi_region = config_bool(key, value);
  else if (key == "t_horz") c.t_horz = config_number(key, value);
  else if (key == "t_skip") c.t_skip = config_int(key, value);
  else if (key == "t_ring") c.t_ring = config_int(key, value);
  else if (key == "t_vert") c.t_vert = config_number(key, value);
  else if (key == "t_ext") c.t_ext = config_int(key, value);
  else if (key == "proj_width") c.proj_width = config_int(key, value);
  else if (key == "proj_height") c.proj_height = config_int(key, value);
  else if (key == "circular_linkage") c.circular_linkage = config_bool(key, value);
  else if (key == "skip_distance") {
    if (value == "boundary") c.skip_distance = SkipDistance::kBoundary;
    else if (value == "centroid") c.skip_distance = SkipDistance::kCentroid;
    else throw ConfigError("skip_distance", "expected boundary|centroid");
  } else {
    throw ConfigError(std::string(key), "unknown field");
  }
}

/// Parses key=value text on top of `base` and validates the result.
inline PipelineConfig parse_config(std::string_view text, PipelineConfig base = {}) {
  for (auto line : detail::lines_of(text)) {
    if (line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError(std::string(line), "expected key=value");
    set_config_field(base, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
  }
  base.validate();
  return base;
}

inline PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base = {}) {
  return parse_config(detail::read_file(path), base);
}

inline std::string to_config_text(const PipelineConfig& c) {
  using detail::format_double;
  std::ostringstream out;
  out << "tgf_resolution=" << format_double(c.tgf_resolution) << '\n'
      << "incline_thresh=" << format_double(c.incline_thresh) << '\n'
      << "min_node_points=" << c.min_node_points << '\n'
      << "eps1=" << format_double(c.eps1) << '\n'
      << "eps2=" << format_double(c.eps2) << '\n'
      << "eps3=" << format_double(c.eps3) << '\n'
      << "field_extent=" << format_double(c.field_extent) << '\n'
      << "seed_multi_region=" << (c.seed_multi_region ? "true" : "false") << '\n'
      << "t_horz=" << format_double(c.t_horz) << '\n'
      << "t_skip=" << c.t_skip << '\n'
      << "t_ring=" << c.t_ring << '\n'
      << "t_vert=" << format_double(c.t_vert) << '\n'
      << "t_ext=" << c.t_ext << '\n'
      << "proj_width=" << c.proj_width << '\n'
      << "proj_height=" << c.proj_height << '\n'
      << "circular_linkage=" << (c.circular_linkage ? "true" : "false") << '\n'
      << "skip_distance=" << (c.skip_distance == SkipDistance::kBoundary ? "boundary" : "centroid")
      << '\n';
  return out.str();
}

}  // namespace travel
