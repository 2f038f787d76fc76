#include "osdet/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <functional>
#include <memory>
#include <limits>
#include <optional>
#include <ostream>
#include <stdexcept>

#include "CLI11.hpp"
#include "json.hpp"
#include "osdet/error.hpp"
#include "osdet/evaluation.hpp"
#include "osdet/io.hpp"
#include "osdet/simulator.hpp"

namespace osdet::cli {

namespace {

using json = nlohmann::json;

// Protocol defaults: entropy threshold swept over [0.1, 2.5], clustering at
// IoU 0.95, ground-truth matching at IoU 0.5, 42 forward passes.
constexpr double kThetaMin = 0.1;
constexpr double kThetaMax = 2.5;
constexpr int kThetaSteps = 25;
constexpr int kDefaultScenes = 100;

struct EvalOptions {
  std::string input;
  std::string ground_truth;
  double cluster_iou = kDefaultClusterIou;
  double match_iou = kDefaultMatchIou;
  int min_detections = 1;
  std::optional<int> passes;
  unsigned workers = 1;
  CLI::Option* cluster_flag = nullptr;
  CLI::Option* passes_flag = nullptr;
};

void add_eval_options(CLI::App& cmd, EvalOptions& o) {
  cmd.add_option("--input", o.input,
                 "Detection file, or a fused-observation file written by 'fuse'")
      ->required();
  cmd.add_option("--ground-truth", o.ground_truth, "Ground-truth file")->required();
  o.cluster_flag = cmd.add_option("--cluster-iou", o.cluster_iou,
                                  "IoU threshold for grouping detections into observations")
                       ->check(CLI::Range(0.0, 1.0));
  cmd.add_option("--match-iou", o.match_iou, "IoU threshold for matching ground truth")
      ->check(CLI::Range(0.0, 1.0));
  cmd.add_option("--min-detections", o.min_detections,
                 "Minimum detections per observation")
      ->check(CLI::PositiveNumber);
  o.passes_flag = cmd.add_option("--passes", o.passes,
                                 "Use only the first N forward passes of each image "
                                 "(default: all passes in the file)")
                      ->check(CLI::PositiveNumber);
  cmd.add_option("--workers", o.workers, "Parallel workers for per-image work")
      ->check(CLI::PositiveNumber);
}

std::vector<FusedScene> load_fused(const EvalOptions& o) {
  const io::GroundTruthFile truth = io::load_ground_truth(o.ground_truth);
  if (io::is_observation_file(o.input)) {
    if (o.cluster_flag->count() > 0 || o.passes_flag->count() > 0) {
      throw std::invalid_argument(
          "--cluster-iou and --passes do not apply to an already fused observation file");
    }
    const io::ObservationFile obs = io::load_observations(o.input);
    if (obs.class_count != truth.class_count) {
      throw ValidationError("observation and ground-truth files disagree on class_count");
    }
    // Reuse the scene join by wrapping observations in an empty detection file.
    io::DetectionFile ids;
    ids.class_count = obs.class_count;
    for (const auto& image : obs.images) ids.images.push_back({image.image_id, {}});
    std::vector<Scene> scenes = io::join_scenes(ids, truth);
    std::vector<FusedScene> fused;
    for (std::size_t i = 0; i < scenes.size(); ++i) {
      FusedScene f{scenes[i].image_id, {}, std::move(scenes[i].ground_truth)};
      if (i < obs.images.size()) f.observations = obs.images[i].observations;
      fused.push_back(std::move(f));
    }
    return fused;
  }
  const io::DetectionFile dets = io::load_detections(o.input);
  const std::vector<Scene> scenes = io::join_scenes(dets, truth);
  std::optional<std::size_t> max_passes;
  if (o.passes) max_passes = static_cast<std::size_t>(*o.passes);
  return fuse_scenes(scenes, o.cluster_iou, max_passes, o.workers);
}

EvalConfig eval_config(const EvalOptions& o) {
  EvalConfig c;
  c.match_iou = o.match_iou;
  c.cluster_iou = o.cluster_iou;
  c.min_detections = o.min_detections;
  return c;
}

json point_json(const CurvePoint& p) {
  return {{"theta", p.theta},         {"tp", p.counts.tp},         {"fp", p.counts.fp},
          {"fn", p.counts.fn},        {"abs_ose", p.counts.abs_ose}, {"precision", p.precision},
          {"recall", p.recall},       {"f1", p.f1}};
}

std::string describe(const CurvePoint& p) {
  char line[200];
  std::snprintf(line, sizeof line, "theta=%.6f f1=%.6f precision=%.6f recall=%.6f abs_ose=%lld",
                p.theta, p.f1, p.precision, p.recall, static_cast<long long>(p.counts.abs_ose));
  return line;
}

// ---------------------------------------------------------------- simulate

struct SimulateOptions {
  std::string output;
  std::string ground_truth;
  std::string config_path;
  int scenes = kDefaultScenes;
  unsigned workers = 1;
  SimulatorConfig config;
  std::vector<std::pair<CLI::Option*, std::function<void(SimulatorConfig&)>>> overrides;
};

template <typename T>
void add_sim_option(CLI::App& cmd, SimulateOptions& o, const std::string& flag, T SimulatorConfig::*member,
                    const std::string& help) {
  auto value = std::make_shared<T>(o.config.*member);
  CLI::Option* opt = cmd.add_option(flag, *value, help)->default_val(o.config.*member);
  o.overrides.emplace_back(opt, [value, member](SimulatorConfig& c) { c.*member = *value; });
}

int run_simulate(const SimulateOptions& o, std::ostream& out) {
  SimulatorConfig config = o.config_path.empty() ? SimulatorConfig{}
                                                 : io::load_simulator_config(o.config_path);
  for (const auto& [opt, apply] : o.overrides) {
    if (opt->count() > 0) apply(config);
  }
  config.validate();
  const std::vector<Scene> scenes = simulate_dataset(config, o.scenes, o.workers);
  io::save_detections(io::detections_from_scenes(scenes, config.class_count), o.output);
  io::save_ground_truth(io::ground_truth_from_scenes(scenes, config.class_count), o.ground_truth);
  out << "simulated " << scenes.size() << " scenes x " << config.passes << " passes (seed "
      << config.seed << ")\n";
  return kSuccess;
}

// -------------------------------------------------------------------- fuse

struct FuseOptions {
  std::string input;
  std::string output;
  double cluster_iou = kDefaultClusterIou;
  std::optional<int> passes;
  unsigned workers = 1;
};

int run_fuse(const FuseOptions& o, std::ostream& out) {
  const io::DetectionFile dets = io::load_detections(o.input);
  std::vector<Scene> scenes;
  for (const auto& image : dets.images) scenes.push_back({image.image_id, {}, image.passes});
  std::optional<std::size_t> max_passes;
  if (o.passes) max_passes = static_cast<std::size_t>(*o.passes);
  const auto fused = fuse_scenes(scenes, o.cluster_iou, max_passes, o.workers);
  io::ObservationFile file;
  file.class_count = dets.class_count;
  file.cluster_iou = o.cluster_iou;
  std::size_t total = 0;
  for (const FusedScene& f : fused) {
    file.images.push_back({f.image_id, f.observations});
    total += f.observations.size();
  }
  io::save_observations(file, o.output);
  out << "fused " << total << " observations from " << fused.size() << " images\n";
  return kSuccess;
}

// ---------------------------------------------------------------- evaluate

int run_evaluate(const EvalOptions& o, std::optional<double> theta, std::ostream& out) {
  EvalConfig config = eval_config(o);
  config.theta = theta.value_or(kDisabledEntropyTest);
  config.validate();
  const auto fused = load_fused(o);
  const double grid[] = {config.theta};
  const auto points = sweep(std::span<const FusedScene>(fused), grid, config, o.workers);
  out << io::format_results(points);
  return kSuccess;
}

// ------------------------------------------------------------------- sweep

struct SweepOptions {
  EvalOptions eval;
  std::string output;
  std::string summary_json;
  double theta_min = kThetaMin;
  double theta_max = kThetaMax;
  int theta_steps = kThetaSteps;
  std::optional<double> reference_f1;
  std::optional<std::int64_t> reference_ose;
};

int run_sweep(const SweepOptions& o, std::ostream& out) {
  EvalConfig config = eval_config(o.eval);
  config.validate();
  const auto grid = theta_grid(o.theta_min, o.theta_max, o.theta_steps);
  const auto fused = load_fused(o.eval);
  const auto points = sweep(std::span<const FusedScene>(fused), grid, config, o.eval.workers);
  io::save_results(points, o.output);

  const CurveSummary summary = curve_analysis(points, o.reference_ose, o.reference_f1);
  out << "max_f1: " << describe(summary.max_f1) << "\n";
  json doc;
  doc["max_f1"] = point_json(summary.max_f1);
  if (o.reference_ose) {
    const auto& hit = summary.f1_at_reference_ose;
    out << "f1_at_reference_ose(" << *o.reference_ose
        << "): " << (hit ? describe(*hit) : "unattainable") << "\n";
    doc["f1_at_reference_ose"] = {{"reference", *o.reference_ose},
                                  {"attainable", hit.has_value()},
                                  {"point", hit ? point_json(*hit) : json(nullptr)}};
  }
  if (o.reference_f1) {
    const auto& hit = summary.ose_at_reference_f1;
    out << "ose_at_reference_f1(" << *o.reference_f1
        << "): " << (hit ? describe(*hit) : "unattainable") << "\n";
    doc["ose_at_reference_f1"] = {{"reference", *o.reference_f1},
                                  {"attainable", hit.has_value()},
                                  {"point", hit ? point_json(*hit) : json(nullptr)}};
  }
  if (!o.summary_json.empty()) io::write_text(o.summary_json, doc.dump(2) + "\n");
  return kSuccess;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Uncertainty-aware fusion and open-set evaluation of multi-pass detections",
               "osdet"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  SimulateOptions sim;
  CLI::App* simulate = app.add_subcommand(
      "simulate", "Generate a synthetic multi-pass detection dataset with ground truth");
  simulate->add_option("--output", sim.output, "Detection file to write")->required();
  simulate->add_option("--ground-truth", sim.ground_truth, "Ground-truth file to write")
      ->required();
  simulate->add_option("--config", sim.config_path,
                       "Simulator config JSON; explicit flags override its values")
      ->check(CLI::ExistingFile);
  simulate->add_option("--scenes", sim.scenes, "Number of scenes")->check(CLI::PositiveNumber);
  simulate->add_option("--workers", sim.workers, "Parallel workers")->check(CLI::PositiveNumber);
  add_sim_option(*simulate, sim, "--seed", &SimulatorConfig::seed, "Master RNG seed");
  add_sim_option(*simulate, sim, "--passes", &SimulatorConfig::passes, "Forward passes per image");
  add_sim_option(*simulate, sim, "--classes", &SimulatorConfig::class_count,
                 "Known class count k (score vectors have k+1 entries)");
  add_sim_option(*simulate, sim, "--known-objects", &SimulatorConfig::num_known_objects,
                 "Known-class objects per scene");
  add_sim_option(*simulate, sim, "--unknown-objects", &SimulatorConfig::num_unknown_objects,
                 "Unknown-class objects per scene");
  add_sim_option(*simulate, sim, "--p-det", &SimulatorConfig::p_det,
                 "Per-pass detection probability of each object");
  add_sim_option(*simulate, sim, "--sigma-box", &SimulatorConfig::sigma_box,
                 "Box corner jitter standard deviation (pixels)");
  add_sim_option(*simulate, sim, "--alpha-hi", &SimulatorConfig::alpha_hi,
                 "Dirichlet concentration on the target class");
  add_sim_option(*simulate, sim, "--alpha-lo", &SimulatorConfig::alpha_lo,
                 "Dirichlet concentration on every other class");
  add_sim_option(*simulate, sim, "--confusion-size", &SimulatorConfig::confusion_size,
                 "Known classes an unknown object flickers between");
  add_sim_option(*simulate, sim, "--clutter-rate", &SimulatorConfig::clutter_rate,
                 "Expected spurious detections per pass");
  add_sim_option(*simulate, sim, "--image-width", &SimulatorConfig::image_width, "Image width");
  add_sim_option(*simulate, sim, "--image-height", &SimulatorConfig::image_height, "Image height");
  add_sim_option(*simulate, sim, "--min-box", &SimulatorConfig::min_box_size,
                 "Smallest object side length");
  add_sim_option(*simulate, sim, "--max-box", &SimulatorConfig::max_box_size,
                 "Largest object side length");

  FuseOptions fuse_opts;
  CLI::App* fuse = app.add_subcommand("fuse", "Partition and fuse detections into observations");
  fuse->add_option("--input", fuse_opts.input, "Detection file")->required();
  fuse->add_option("--output", fuse_opts.output, "Observation file to write")->required();
  fuse->add_option("--cluster-iou", fuse_opts.cluster_iou,
                   "IoU threshold for grouping detections into observations")
      ->check(CLI::Range(0.0, 1.0));
  fuse->add_option("--passes", fuse_opts.passes,
                   "Use only the first N forward passes (default: all)")
      ->check(CLI::PositiveNumber);
  fuse->add_option("--workers", fuse_opts.workers, "Parallel workers")->check(CLI::PositiveNumber);

  EvalOptions eval_opts;
  std::optional<double> theta;
  CLI::App* evaluate =
      app.add_subcommand("evaluate", "Score observations at one entropy threshold");
  add_eval_options(*evaluate, eval_opts);
  evaluate->add_option("--entropy-threshold", theta,
                       "Reject observations with entropy above this (nats); "
                       "omit to disable the entropy test")
      ->check(CLI::NonNegativeNumber);

  SweepOptions sweep_opts;
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "Sweep the entropy threshold and write a CSV curve");
  add_eval_options(*sweep_cmd, sweep_opts.eval);
  sweep_cmd->add_option("--output", sweep_opts.output, "CSV file to write")->required();
  sweep_cmd->add_option("--theta-min", sweep_opts.theta_min, "Smallest entropy threshold")
      ->check(CLI::NonNegativeNumber);
  sweep_cmd->add_option("--theta-max", sweep_opts.theta_max, "Largest entropy threshold")
      ->check(CLI::NonNegativeNumber);
  sweep_cmd->add_option("--theta-steps", sweep_opts.theta_steps, "Number of grid points")
      ->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--reference-f1", sweep_opts.reference_f1,
                        "Report the lowest open-set error reaching this F1");
  sweep_cmd->add_option("--reference-ose", sweep_opts.reference_ose,
                        "Report the highest F1 within this open-set error");
  sweep_cmd->add_option("--summary-json", sweep_opts.summary_json,
                        "Also write the summary as JSON to this path");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const auto selected = app.get_subcommands();
    err << (selected.empty() ? app.help() : selected.front()->help());
    return kUsageError;
  }

  try {
    if (simulate->parsed()) return run_simulate(sim, out);
    if (fuse->parsed()) return run_fuse(fuse_opts, out);
    if (evaluate->parsed()) return run_evaluate(eval_opts, theta, out);
    return run_sweep(sweep_opts, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kValidationError;
  } catch (const std::invalid_argument& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsageError;
  }
}

}  // namespace osdet::cli
