#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"

namespace {

using namespace travel;
using namespace travel::cli;

std::optional<Pose> parse_pose(const std::vector<double>& rp) {
  if (rp.empty()) return std::nullopt;
  if (rp.size() != 2) throw UsageError("--pose takes ROLL PITCH in radians");
  return Pose(rp[0], rp[1], 0.0);
}

void emit(const std::string& text, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << text;
    return;
  }
  fs::path p(out);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  write_text(p, text);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Traversable ground and object segmentation for spinning LiDAR scans"};
  app.set_version_flag("--version", std::string(kToolName) + " " + kToolVersion);
  app.require_subcommand(1);

  // Flags shared by the commands that run the pipeline.
  std::string config_path;
  std::vector<std::string> overrides;
  const auto add_config_flags = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path,
                    std::string("key=value config file (default: $") + kConfigEnvVar + ")");
    cmd->add_option("--set", overrides, "override one config field, key=value (repeatable)");
  };
  const auto config = [&] {
    ConfigSource src;
    if (!config_path.empty()) src.config_file = config_path;
    src.overrides = overrides;
    return resolve_config(src);
  };
  std::optional<std::uint64_t> seed;
  std::vector<std::string> scenes;

  // segment
  auto* seg = app.add_subcommand("segment", "label scans: 0 = terrain, k = cluster k");
  std::vector<std::string> seg_inputs;
  std::string seg_format, seg_out, replay;
  unsigned jobs = 1;
  std::vector<double> pose;
  bool summary = false, dump_nodes = false;
  seg->add_option("inputs", seg_inputs, "scan files or directories");
  seg->add_option("--format", seg_format, "kitti_bin | csv | ply_ascii (default: by extension)");
  seg->add_option("--out", seg_out, "output directory")->required();
  seg->add_option("--jobs", jobs, "frames processed in parallel")->check(CLI::PositiveNumber);
  seg->add_option("--pose", pose, "roll pitch (radians) applied to every frame")->expected(2);
  seg->add_option("--replay", replay, "rerun the inputs and config recorded in a manifest");
  seg->add_flag("--summary", summary, "write <frame>.clusters.csv");
  seg->add_flag("--dump-nodes", dump_nodes, "write <frame>.nodes.csv");
  add_config_flags(seg);

  // eval
  auto* ev = app.add_subcommand("eval", "score predicted label files against ground truth");
  std::string ev_pred, ev_truth, ev_out, ev_manifest;
  ev->add_option("--pred", ev_pred, "predicted .label file or directory")->required();
  ev->add_option("--truth", ev_truth, "truth .label file or directory")->required();
  ev->add_option("--out", ev_out, "output directory")->required();
  ev->add_option("--manifest", ev_manifest, "segment manifest supplying stage timings");

  // synth
  auto* sy = app.add_subcommand("synth", "render synthetic scenes with ground truth");
  std::string sy_out, sy_format = "csv";
  int frames = 1;
  std::optional<double> noise;
  sy->add_option("--scene", scenes, "scene name (repeatable, default all)");
  sy->add_option("--out", sy_out, "output directory");
  sy->add_option("--frames", frames, "frames per scene");
  sy->add_option("--seed", seed, "noise seed (frame k uses seed + k)");
  sy->add_option("--noise", noise, "Gaussian range noise sigma in meters");
  sy->add_option("--format", sy_format, "scan format (csv keeps ring indices)");
  bool list = false;
  sy->add_flag("--list", list, "print the scene names and exit");

  // sweep
  auto* sw = app.add_subcommand("sweep", "vary one config field over synthetic scenes");
  std::string param, sw_out;
  std::vector<std::string> values;
  int sw_repeats = 1;
  sw->add_option("--param", param, "config field name")->required();
  sw->add_option("--values", values, "values to try")->required()->delimiter(',');
  sw->add_option("--scene", scenes, "scene name (repeatable, default all)");
  sw->add_option("--out", sw_out, "CSV output path (default stdout)");
  sw->add_option("--seed", seed, "noise seed");
  sw->add_option("--repeats", sw_repeats, "runs averaged per timing")->check(CLI::PositiveNumber);
  add_config_flags(sw);

  // bench
  auto* be = app.add_subcommand("bench", "time the pipeline stages");
  std::vector<std::string> be_inputs;
  std::string be_out, be_format;
  int be_repeats = 10;
  be->add_option("inputs", be_inputs, "scan files or directories (default: synthetic scenes)");
  be->add_option("--scene", scenes, "scene name (repeatable, default all)");
  be->add_option("--format", be_format, "scan format for inputs");
  be->add_option("--repeats", be_repeats, "runs per input")->check(CLI::PositiveNumber);
  be->add_option("--out", be_out, "CSV output path (default stdout)");
  be->add_option("--seed", seed, "noise seed");
  add_config_flags(be);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*seg) {
      SegmentOptions opt;
      if (!replay.empty()) {
        if (!seg_inputs.empty() || !config_path.empty() || !overrides.empty())
          throw UsageError("--replay takes inputs and config from the manifest");
        opt = options_from_manifest(replay);
      } else {
        if (seg_inputs.empty()) throw UsageError("no inputs given");
        for (const auto& in : seg_inputs) opt.inputs.emplace_back(in);
        opt.config = config();
        if (!seg_format.empty()) opt.format = parse_scan_format(seg_format);
        opt.pose = parse_pose(pose);
      }
      opt.out_dir = seg_out;
      opt.jobs = jobs;
      opt.cluster_summary = summary;
      opt.dump_nodes = dump_nodes;
      const auto report = run_segment(opt, std::cerr);
      return report.failures() ? kInputError : kOk;
    }
    if (*ev) {
      EvalOptions opt{ev_pred, ev_truth, ev_out, std::nullopt};
      if (!ev_manifest.empty()) opt.manifest = ev_manifest;
      run_eval(opt, std::cerr);
      return kOk;
    }
    if (*sy) {
      if (list) {
        for (const auto& sc : synth::scenario_suite())
          std::cout << sc.spec.name << '\t' << sc.object_count << '\t' << sc.description << '\n';
        return kOk;
      }
      if (sy_out.empty()) throw UsageError("--out is required");
      SynthOptions opt;
      opt.scenes = scenes;
      opt.out_dir = sy_out;
      opt.frames = frames;
      opt.seed = seed;
      opt.noise = noise;
      opt.format = parse_scan_format(sy_format);
      run_synth(opt, std::cerr);
      return kOk;
    }
    if (*sw) {
      SweepOptions opt;
      opt.param = param;
      opt.values = values;
      opt.scenes = scenes;
      opt.base = config();
      opt.seed = seed;
      opt.repeats = sw_repeats;
      emit(sweep_csv(param, run_sweep(opt)), sw_out);
      return kOk;
    }
    if (*be) {
      BenchOptions opt;
      for (const auto& in : be_inputs) opt.inputs.emplace_back(in);
      opt.scenes = scenes;
      if (!be_format.empty()) opt.format = parse_scan_format(be_format);
      opt.config = config();
      opt.repeats = be_repeats;
      opt.seed = seed;
      emit(bench_csv(run_bench(opt)), be_out);
      return kOk;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
  return kInternalError;
}
