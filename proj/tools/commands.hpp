#pragma once

// Command implementations behind the `travel` executable. Kept header-only so
// the test suite can call them without spawning processes.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "travel/travel.hpp"

#ifndef TRAVEL_VERSION
#define TRAVEL_VERSION "0.0.0"
#endif

namespace travel::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

inline constexpr const char* kToolName = "travel";
inline constexpr const char* kToolVersion = TRAVEL_VERSION;
inline constexpr const char* kConfigEnvVar = "TRAVEL_CONFIG";

enum ExitCode : int { kOk = 0, kUsage = 1, kInputError = 2, kConfigError = 3, kInternalError = 4 };

/// Usage problem detected after argument parsing (bad combination of flags).
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Maps an exception escaping a command to its process exit code.
inline int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const UsageError*>(&e)) return kUsage;
  if (dynamic_cast<const ConfigError*>(&e)) return kConfigError;
  if (dynamic_cast<const IoError*>(&e) || dynamic_cast<const FormatError*>(&e)) return kInputError;
  return kInternalError;
}

// ---------------------------------------------------------------------------
// Configuration resolution: defaults < config file (flag or env) < --set.
// ---------------------------------------------------------------------------

struct ConfigSource {
  std::optional<fs::path> config_file;
  std::vector<std::string> overrides;  // key=value
  bool use_env = true;
};

inline std::optional<fs::path> env_config_path() {
  const char* v = std::getenv(kConfigEnvVar);
  if (!v || !*v) return std::nullopt;
  return fs::path(v);
}

inline PipelineConfig resolve_config(const ConfigSource& src) {
  PipelineConfig c;
  std::optional<fs::path> file = src.config_file;
  if (!file && src.use_env) file = env_config_path();
  if (file) c = load_config(*file);
  for (const auto& kv : src.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError(kv, "override must be key=value");
    set_config_field(c, detail::trim(std::string_view(kv).substr(0, eq)),
                     detail::trim(std::string_view(kv).substr(eq + 1)));
  }
  c.validate();
  return c;
}

inline json config_to_json(const PipelineConfig& c) {
  json j = json::object();
  const std::string text = to_config_text(c);
  for (auto line : detail::lines_of(text)) {
    const auto eq = line.find('=');
    j[std::string(line.substr(0, eq))] = std::string(line.substr(eq + 1));
  }
  return j;
}

inline PipelineConfig config_from_json(const json& j) {
  PipelineConfig c;
  for (const auto& [k, v] : j.items()) set_config_field(c, k, v.get<std::string>());
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------
// Input discovery
// ---------------------------------------------------------------------------

inline bool is_scan_file(const fs::path& p) {
  const auto ext = p.extension().string();
  return ext == ".bin" || ext == ".csv" || ext == ".ply";
}

/// Expands directories into their scan files (sorted by name); plain files
/// are kept in the given order.
inline std::vector<fs::path> expand_inputs(const std::vector<fs::path>& inputs,
                                           const std::function<bool(const fs::path&)>& keep = is_scan_file) {
  std::vector<fs::path> out;
  for (const auto& in : inputs) {
    if (fs::is_directory(in)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(in))
        if (e.is_regular_file() && keep(e.path())) found.push_back(e.path());
      std::sort(found.begin(), found.end());
      out.insert(out.end(), found.begin(), found.end());
    } else {
      out.push_back(in);
    }
  }
  return out;
}

/// Runs fn(i) for i in [0, n) on up to `jobs` threads.
inline void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& fn) {
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  for (unsigned t = 0; t < jobs; ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

inline json read_json(const fs::path& path) {
  try {
    return json::parse(detail::read_file(path));
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

inline std::string fixed(double v, int digits = 3) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

inline std::string opt_num(const std::optional<double>& v, int digits = 6) {
  return v ? fixed(*v, digits) : std::string();
}

inline json timings_json(const StageTimings& t) {
  return {{"align_ms", t.align_ms}, {"ground_ms", t.ground_ms}, {"cluster_ms", t.cluster_ms},
          {"total_ms", t.total_ms}};
}

// ---------------------------------------------------------------------------
// segment
// ---------------------------------------------------------------------------

struct SegmentOptions {
  std::vector<fs::path> inputs;
  std::optional<ScanFormat> format;  // by extension when absent
  fs::path out_dir;
  unsigned jobs = 1;
  PipelineConfig config;
  std::optional<Pose> pose;
  bool cluster_summary = false;
  bool dump_nodes = false;
};

struct FrameOutcome {
  fs::path input;
  fs::path labels;
  std::optional<std::string> error;
  std::size_t points = 0;
  std::size_t dropped = 0;
  std::size_t terrain_points = 0;
  std::size_t clusters = 0;
  StageTimings timings;
};

struct SegmentReport {
  std::vector<FrameOutcome> frames;
  fs::path manifest;
  std::size_t failures() const {
    return static_cast<std::size_t>(
        std::count_if(frames.begin(), frames.end(), [](const FrameOutcome& f) { return f.error.has_value(); }));
  }
};

inline void write_cluster_summary(const fs::path& path, const PointCloud& cloud, const SegmentationResult& r) {
  struct Acc {
    std::size_t n = 0;
    double sx = 0, sy = 0, sz = 0;
    double lo[3]{INFINITY, INFINITY, INFINITY}, hi[3]{-INFINITY, -INFINITY, -INFINITY};
  };
  std::map<std::uint32_t, Acc> acc;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (r.terrain_mask[i] || r.cluster_id[i] == 0) continue;
    auto& a = acc[r.cluster_id[i]];
    const auto& p = cloud[i];
    const double v[3]{p.x, p.y, p.z};
    ++a.n;
    a.sx += p.x;
    a.sy += p.y;
    a.sz += p.z;
    for (int k = 0; k < 3; ++k) {
      a.lo[k] = std::min(a.lo[k], v[k]);
      a.hi[k] = std::max(a.hi[k], v[k]);
    }
  }
  std::ostringstream out;
  out << "id,point_count,cx,cy,cz,min_x,min_y,min_z,max_x,max_y,max_z\n";
  for (const auto& [id, a] : acc) {
    const double n = static_cast<double>(a.n);
    out << id << ',' << a.n << ',' << fixed(a.sx / n, 4) << ',' << fixed(a.sy / n, 4) << ','
        << fixed(a.sz / n, 4);
    for (double v : a.lo) out << ',' << fixed(v, 4);
    for (double v : a.hi) out << ',' << fixed(v, 4);
    out << '\n';
  }
  write_text(path, out.str());
}

/// Segments every input frame into <out_dir>/<stem>.label and writes
/// <out_dir>/manifest.json. Per-frame failures are recorded, not thrown.
inline SegmentReport run_segment(const SegmentOptions& opt, std::ostream& log) {
  opt.config.validate();
  const auto inputs = expand_inputs(opt.inputs);
  fs::create_directories(opt.out_dir);
  std::set<std::string> stems;
  for (const auto& in : inputs)
    if (!stems.insert(in.stem().string()).second)
      throw UsageError("two inputs share the output name '" + in.stem().string() + ".label'");

  SegmentReport report;
  report.frames.resize(inputs.size());
  const Segmenter segmenter(opt.config);
  parallel_for(inputs.size(), opt.jobs, [&](std::size_t i) {
    FrameOutcome& f = report.frames[i];
    f.input = inputs[i];
    f.labels = opt.out_dir / (inputs[i].stem().string() + ".label");
    try {
      const auto load = load_scan(inputs[i], opt.format.value_or(scan_format_from_path(inputs[i])));
      const auto result = segmenter.run(load.cloud, opt.pose);
      write_labels(f.labels, result.label_file_values());
      if (opt.cluster_summary)
        write_cluster_summary(opt.out_dir / (inputs[i].stem().string() + ".clusters.csv"), load.cloud, result);
      if (opt.dump_nodes) {
        const PointCloud aligned = opt.pose ? align_attitude(load.cloud, *opt.pose) : load.cloud;
        const auto ground = segment_ground(aligned, opt.config);
        std::ostringstream nodes;
        write_node_csv(nodes, ground.field);
        write_text(opt.out_dir / (inputs[i].stem().string() + ".nodes.csv"), nodes.str());
      }
      f.points = load.cloud.size();
      f.dropped = load.dropped;
      f.terrain_points = static_cast<std::size_t>(
          std::count(result.terrain_mask.begin(), result.terrain_mask.end(), std::uint8_t{1}));
      f.clusters = result.cluster_count;
      f.timings = result.timings;
    } catch (const std::exception& e) {
      f.error = e.what();
    }
  });

  json manifest;
  manifest["tool"] = kToolName;
  manifest["version"] = kToolVersion;
  manifest["command"] = "segment";
  manifest["config"] = config_to_json(opt.config);
  manifest["format"] = opt.format ? json(to_string(*opt.format)) : json(nullptr);
  if (opt.pose)
    manifest["pose"] = {{"roll", opt.pose->roll}, {"pitch", opt.pose->pitch}, {"yaw", opt.pose->yaw}};
  manifest["inputs"] = json::array();
  for (const auto& in : inputs) manifest["inputs"].push_back(fs::absolute(in).lexically_normal().string());
  manifest["frames"] = json::array();
  for (const auto& f : report.frames) {
    json fj{{"input", f.input.string()}, {"labels", f.labels.filename().string()}};
    if (f.error) {
      fj["status"] = "error";
      fj["error"] = *f.error;
      log << "error: " << f.input.string() << ": " << *f.error << '\n';
    } else {
      fj["status"] = "ok";
      fj["points"] = f.points;
      fj["dropped"] = f.dropped;
      fj["terrain_points"] = f.terrain_points;
      fj["clusters"] = f.clusters;
      fj["timings"] = timings_json(f.timings);
    }
    manifest["frames"].push_back(std::move(fj));
  }
  report.manifest = opt.out_dir / "manifest.json";
  write_text(report.manifest, manifest.dump(2) + "\n");
  log << "segmented " << report.frames.size() - report.failures() << '/' << report.frames.size()
      << " frames into " << opt.out_dir.string() << '\n';
  return report;
}

/// Options that reproduce the run recorded in a manifest.
inline SegmentOptions options_from_manifest(const fs::path& manifest_path) {
  const json m = read_json(manifest_path);
  try {
    if (m.at("command").get<std::string>() != "segment")
      throw FormatError(manifest_path.string() + ": not a segment manifest");
    SegmentOptions opt;
    opt.config = config_from_json(m.at("config"));
    if (!m.at("format").is_null()) opt.format = parse_scan_format(m.at("format").get<std::string>());
    if (m.contains("pose")) {
      const auto& p = m.at("pose");
      opt.pose = Pose(p.at("roll").get<double>(), p.at("pitch").get<double>(), p.at("yaw").get<double>());
    }
    for (const auto& in : m.at("inputs")) opt.inputs.emplace_back(in.get<std::string>());
    return opt;
  } catch (const json::exception& e) {
    throw FormatError(manifest_path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

/// Semantic classes counted as terrain in ground-truth label files (road,
/// parking, sidewalk, other-ground, lane-marking, terrain).
inline bool is_terrain_class(std::uint16_t semantic) {
  switch (semantic) {
    case 40: case 44: case 48: case 49: case 60: case 72: return true;
    default: return false;
  }
}

struct FrameMetrics {
  std::string frame_id;
  GroundEval ground;
  ClusterEval cluster;
  std::optional<StageTimings> timings;
};

/// Metrics for one frame. `pred` uses the output label encoding (0 terrain,
/// k cluster); `truth` the semantic | instance << 16 encoding.
inline FrameMetrics evaluate_frame(std::string frame_id, std::span<const std::uint32_t> pred,
                                   std::span<const std::uint32_t> truth) {
  if (pred.size() != truth.size())
    throw FormatError(frame_id + ": " + std::to_string(pred.size()) + " predicted labels vs " +
                      std::to_string(truth.size()) + " truth labels");
  const std::size_t n = pred.size();
  std::vector<std::uint8_t> pred_terrain(n), truth_terrain(n);
  std::vector<std::uint32_t> truth_object(n);
  for (std::size_t i = 0; i < n; ++i) {
    pred_terrain[i] = pred[i] == 0;
    const auto rec = LabelRecord::from_raw(truth[i]);
    truth_terrain[i] = is_terrain_class(rec.semantic);
    truth_object[i] = truth_terrain[i] ? 0 : truth[i];
  }
  FrameMetrics m;
  m.frame_id = std::move(frame_id);
  m.ground = ground_metrics(pred_terrain, truth_terrain);
  m.cluster = cluster_metrics(truth_terrain, truth_object, pred_terrain, pred);
  return m;
}

struct EvalOptions {
  fs::path pred;   // label file or directory of .label files
  fs::path truth;  // same shape as pred
  fs::path out_dir;
  std::optional<fs::path> manifest;  // segment manifest supplying timings
};

struct EvalReport {
  std::vector<FrameMetrics> frames;
  fs::path csv;
  fs::path json_path;
};

inline const std::vector<std::string>& metric_names() {
  static const std::vector<std::string> names{"P", "R", "F1", "accuracy", "OSE", "USE",
                                              "align_ms", "ground_ms", "cluster_ms", "total_ms"};
  return names;
}

inline std::vector<std::optional<double>> metric_values(const FrameMetrics& f) {
  std::vector<std::optional<double>> v{f.ground.precision, f.ground.recall, f.ground.f1, f.ground.accuracy,
                                       f.cluster.ose.total, f.cluster.use.total};
  if (f.timings) {
    v.insert(v.end(), {f.timings->align_ms, f.timings->ground_ms, f.timings->cluster_ms, f.timings->total_ms});
  } else {
    v.resize(metric_names().size());
  }
  return v;
}

inline std::string metrics_csv(const std::vector<FrameMetrics>& frames) {
  std::ostringstream out;
  out << "frame_id";
  for (const auto& n : metric_names()) out << ',' << n;
  out << '\n';
  for (const auto& f : frames) {
    out << f.frame_id;
    const auto v = metric_values(f);
    for (std::size_t k = 0; k < v.size(); ++k) out << ',' << opt_num(v[k], k < 6 ? 6 : 3);
    out << '\n';
  }
  return out.str();
}

inline json metrics_json(const std::vector<FrameMetrics>& frames) {
  json j;
  j["tool"] = kToolName;
  j["version"] = kToolVersion;
  j["frame_count"] = frames.size();
  j["frames"] = json::array();
  for (const auto& f : frames) {
    json fj{{"frame_id", f.frame_id},
            {"tp", f.ground.tp},
            {"fp", f.ground.fp},
            {"tn", f.ground.tn},
            {"fn", f.ground.fn}};
    const auto v = metric_values(f);
    for (std::size_t k = 0; k < v.size(); ++k) fj[metric_names()[k]] = v[k] ? json(*v[k]) : json(nullptr);
    j["frames"].push_back(std::move(fj));
  }
  json agg = json::object();
  for (std::size_t k = 0; k < metric_names().size(); ++k) {
    std::vector<std::optional<double>> col;
    for (const auto& f : frames) col.push_back(metric_values(f)[k]);
    const auto a = aggregate(col);
    agg[metric_names()[k]] = a.count ? json{{"mean", a.mean}, {"stdev", a.stdev}, {"count", a.count}}
                                     : json{{"mean", nullptr}, {"stdev", nullptr}, {"count", 0}};
  }
  j["aggregate"] = std::move(agg);
  return j;
}

inline std::vector<fs::path> label_files(const fs::path& p) {
  if (!fs::exists(p)) throw IoError("'" + p.string() + "' does not exist");
  return expand_inputs({p}, [](const fs::path& f) { return f.extension() == ".label"; });
}

/// Timings per label file name, read from a segment manifest.
inline std::map<std::string, StageTimings> manifest_timings(const fs::path& manifest) {
  std::map<std::string, StageTimings> out;
  const json m = read_json(manifest);
  try {
    for (const auto& f : m.at("frames")) {
      if (f.value("status", "") != "ok") continue;
      const auto& t = f.at("timings");
      out[f.at("labels").get<std::string>()] = {t.at("align_ms").get<double>(), t.at("ground_ms").get<double>(),
                                                t.at("cluster_ms").get<double>(), t.at("total_ms").get<double>()};
    }
  } catch (const json::exception& e) {
    throw FormatError(manifest.string() + ": " + e.what());
  }
  return out;
}

/// Pairs prediction and truth label files by sorted order and writes
/// metrics.csv plus metrics.json (per-frame values and mean/stdev).
inline EvalReport run_eval(const EvalOptions& opt, std::ostream& log) {
  const auto pred = label_files(opt.pred);
  const auto truth = label_files(opt.truth);
  if (pred.size() != truth.size())
    throw FormatError("frame count mismatch: " + std::to_string(pred.size()) + " prediction vs " +
                      std::to_string(truth.size()) + " truth label files");
  std::map<std::string, StageTimings> timings;
  if (opt.manifest) timings = manifest_timings(*opt.manifest);

  EvalReport report;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const auto p = load_raw_labels(pred[i]);
    const auto t = load_raw_labels(truth[i], p.size());
    auto m = evaluate_frame(pred[i].stem().string(), p, t);
    if (auto it = timings.find(pred[i].filename().string()); it != timings.end()) m.timings = it->second;
    report.frames.push_back(std::move(m));
  }
  fs::create_directories(opt.out_dir);
  report.csv = opt.out_dir / "metrics.csv";
  report.json_path = opt.out_dir / "metrics.json";
  write_text(report.csv, metrics_csv(report.frames));
  write_text(report.json_path, metrics_json(report.frames).dump(2) + "\n");
  log << "evaluated " << report.frames.size() << " frames into " << opt.out_dir.string() << '\n';
  return report;
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

inline std::vector<synth::Scenario> select_scenes(const std::vector<std::string>& names) {
  if (names.empty() || (names.size() == 1 && names[0] == "all")) return synth::scenario_suite();
  std::vector<synth::Scenario> out;
  for (const auto& n : names) {
    auto s = synth::find_scenario(n);
    if (!s) throw UsageError("unknown scene '" + n + "'");
    out.push_back(std::move(*s));
  }
  return out;
}

inline std::string scene_list() {
  std::string s;
  for (const auto& sc : synth::scenario_suite()) s += (s.empty() ? "" : ", ") + sc.spec.name;
  return s;
}

struct SynthOptions {
  std::vector<std::string> scenes;  // empty or {"all"}: whole suite
  fs::path out_dir;
  int frames = 1;                   // per scene; frame k uses seed + k
  std::optional<std::uint64_t> seed;
  std::optional<double> noise;
  ScanFormat format = ScanFormat::kCsv;
};

inline std::string scan_extension(ScanFormat f) {
  switch (f) {
    case ScanFormat::kKittiBin: return ".bin";
    case ScanFormat::kCsv: return ".csv";
    case ScanFormat::kPlyAscii: return ".ply";
  }
  return ".bin";
}

inline std::string frame_name(const std::string& scene, int k) {
  std::ostringstream s;
  s << scene << '_' << std::setw(3) << std::setfill('0') << k;
  return s.str();
}

/// Writes <out>/scans/<scene>_<k>.<ext>, <out>/labels/<scene>_<k>.label and
/// <out>/scenes.json. Returns the scan paths.
inline std::vector<fs::path> run_synth(const SynthOptions& opt, std::ostream& log) {
  if (opt.frames < 1) throw UsageError("--frames must be >= 1");
  if (opt.noise && *opt.noise < 0.0) throw ConfigError("noise", "must be >= 0");
  const auto scenes = select_scenes(opt.scenes);
  fs::create_directories(opt.out_dir / "scans");
  fs::create_directories(opt.out_dir / "labels");
  json index;
  index["tool"] = kToolName;
  index["version"] = kToolVersion;
  index["scenes"] = json::array();
  std::vector<fs::path> written;
  for (const auto& sc : scenes) {
    json sj{{"name", sc.spec.name},
            {"description", sc.description},
            {"object_count", sc.object_count},
            {"rings", sc.spec.sensor.rings},
            {"azimuth_steps", sc.spec.sensor.azimuth_steps},
            {"frames", json::array()}};
    for (int k = 0; k < opt.frames; ++k) {
      auto spec = sc.spec;
      spec.seed = opt.seed.value_or(spec.seed) + static_cast<std::uint64_t>(k);
      if (opt.noise) spec.range_noise = *opt.noise;
      const auto scan = synth::render(spec);
      const auto name = frame_name(sc.spec.name, k);
      const auto scan_path = opt.out_dir / "scans" / (name + scan_extension(opt.format));
      write_scan(scan_path, scan.cloud, opt.format);
      write_labels(opt.out_dir / "labels" / (name + ".label"), scan.truth_label_values());
      sj["frames"].push_back({{"name", name}, {"seed", spec.seed}, {"points", scan.cloud.size()}});
      written.push_back(scan_path);
    }
    index["scenes"].push_back(std::move(sj));
  }
  write_text(opt.out_dir / "scenes.json", index.dump(2) + "\n");
  log << "wrote " << written.size() << " frames to " << opt.out_dir.string() << '\n';
  return written;
}

// ---------------------------------------------------------------------------
// sweep and bench
// ---------------------------------------------------------------------------

struct SceneRun {
  FrameMetrics metrics;
  std::size_t clusters = 0;
  StageTimings mean_timings;
};

/// Renders the scene, segments it `repeats` times and scores the last run.
inline SceneRun run_scene(const synth::SceneSpec& spec, const PipelineConfig& config, int repeats = 1) {
  const auto scan = synth::render(spec);
  const Segmenter seg(config);
  SceneRun run;
  SegmentationResult result;
  for (int r = 0; r < std::max(1, repeats); ++r) {
    result = seg.run(scan.cloud);
    run.mean_timings.align_ms += result.timings.align_ms;
    run.mean_timings.ground_ms += result.timings.ground_ms;
    run.mean_timings.cluster_ms += result.timings.cluster_ms;
    run.mean_timings.total_ms += result.timings.total_ms;
  }
  const double n = std::max(1, repeats);
  run.mean_timings.align_ms /= n;
  run.mean_timings.ground_ms /= n;
  run.mean_timings.cluster_ms /= n;
  run.mean_timings.total_ms /= n;
  run.metrics = evaluate_frame(spec.name, result.label_file_values(), scan.truth_label_values());
  run.metrics.timings = run.mean_timings;
  run.clusters = result.cluster_count;
  return run;
}

struct SweepOptions {
  std::string param;
  std::vector<std::string> values;
  std::vector<std::string> scenes;
  PipelineConfig base;
  std::optional<std::uint64_t> seed;
  int repeats = 1;
};

struct SweepRow {
  std::string value;
  SceneRun run;
};

inline std::vector<SweepRow> run_sweep(const SweepOptions& opt) {
  const auto& names = config_field_names();
  if (std::find(names.begin(), names.end(), opt.param) == names.end())
    throw ConfigError(opt.param, "unknown parameter");
  if (opt.values.empty()) throw UsageError("--values is empty");
  const auto scenes = select_scenes(opt.scenes);
  std::vector<SweepRow> rows;
  for (const auto& value : opt.values) {
    for (const auto& sc : scenes) {
      auto spec = sc.spec;
      if (opt.seed) spec.seed = *opt.seed;
      auto config = synth::config_for(spec, opt.base);
      set_config_field(config, opt.param, value);
      config.validate();
      rows.push_back({value, run_scene(spec, config, opt.repeats)});
    }
  }
  return rows;
}

inline std::string sweep_csv(const std::string& param, const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << "param,value,scene,clusters";
  for (const auto& n : metric_names()) out << ',' << n;
  out << '\n';
  for (const auto& r : rows) {
    out << param << ',' << r.value << ',' << r.run.metrics.frame_id << ',' << r.run.clusters;
    const auto v = metric_values(r.run.metrics);
    for (std::size_t k = 0; k < v.size(); ++k) out << ',' << opt_num(v[k], k < 6 ? 6 : 3);
    out << '\n';
  }
  return out.str();
}

struct BenchOptions {
  std::vector<std::string> scenes;
  std::vector<fs::path> inputs;  // benchmarks files instead of scenes when set
  std::optional<ScanFormat> format;
  PipelineConfig config;
  int repeats = 10;
  std::optional<std::uint64_t> seed;
};

struct BenchRow {
  std::string name;
  std::size_t points = 0;
  Aggregate ground_ms, cluster_ms, total_ms;
};

inline BenchRow bench_cloud(std::string name, const PointCloud& cloud, const PipelineConfig& config, int repeats) {
  const Segmenter seg(config);
  std::vector<std::optional<double>> g, c, t;
  for (int r = 0; r < std::max(1, repeats); ++r) {
    const auto res = seg.run(cloud);
    g.push_back(res.timings.ground_ms);
    c.push_back(res.timings.cluster_ms);
    t.push_back(res.timings.total_ms);
  }
  return {std::move(name), cloud.size(), aggregate(g), aggregate(c), aggregate(t)};
}

inline std::vector<BenchRow> run_bench(const BenchOptions& opt) {
  std::vector<BenchRow> rows;
  if (!opt.inputs.empty()) {
    for (const auto& in : expand_inputs(opt.inputs)) {
      const auto load = load_scan(in, opt.format.value_or(scan_format_from_path(in)));
      rows.push_back(bench_cloud(in.stem().string(), load.cloud, opt.config, opt.repeats));
    }
    return rows;
  }
  for (const auto& sc : select_scenes(opt.scenes)) {
    auto spec = sc.spec;
    if (opt.seed) spec.seed = *opt.seed;
    const auto scan = synth::render(spec);
    rows.push_back(bench_cloud(spec.name, scan.cloud, synth::config_for(spec, opt.config), opt.repeats));
  }
  return rows;
}

inline std::string bench_csv(const std::vector<BenchRow>& rows) {
  std::ostringstream out;
  out << "name,points,runs,ground_ms_mean,ground_ms_stdev,cluster_ms_mean,cluster_ms_stdev,total_ms_mean,"
         "total_ms_stdev\n";
  for (const auto& r : rows)
    out << r.name << ',' << r.points << ',' << r.total_ms.count << ',' << fixed(r.ground_ms.mean) << ','
        << fixed(r.ground_ms.stdev) << ',' << fixed(r.cluster_ms.mean) << ',' << fixed(r.cluster_ms.stdev)
        << ',' << fixed(r.total_ms.mean) << ',' << fixed(r.total_ms.stdev) << '\n';
  return out.str();
}

}  // namespace travel::cli
