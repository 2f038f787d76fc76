// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
// criterion fails.

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "osdet/cli.hpp"
#include "osdet/evaluation.hpp"
#include "osdet/fusion.hpp"
#include "osdet/io.hpp"
#include "osdet/partition.hpp"
#include "osdet/simulator.hpp"

using namespace osdet;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

constexpr int kSeeds = 30;
constexpr int kScenes = 100;
constexpr std::uint64_t kFirstSeed = 1;
const std::vector<double> kGrid = theta_grid(0.1, 2.5, 25);

struct Outcome {
  bool pass;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const Outcome& o) {
  std::printf("[%s] %d. %s: %s\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), o.detail.c_str());
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// ---------------------------------------------------------------- 1

Outcome partition_equivalence() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<std::size_t> count(0, 100);
  std::uniform_real_distribution<double> pos(0.0, 100.0);
  std::normal_distribution<double> jitter(0.0, 0.5);
  int instances = 0;
  int mismatches = 0;
  for (int trial = 0; trial < 240; ++trial) {
    // Boxes in a 100x100 field, half of them jittered copies of earlier ones
    // so that the high thresholds see real edges.
    std::vector<Detection> dets;
    const std::size_t n = count(rng);
    for (std::size_t i = 0; i < n; ++i) {
      std::array<double, 4> c;
      if (i > 0 && rng() % 2 == 0) {
        c = dets[rng() % dets.size()].box.to_array();
        for (double& v : c) v = std::clamp(v + jitter(rng), 0.0, 100.0);
      } else {
        c = {pos(rng), pos(rng), pos(rng), pos(rng)};
      }
      dets.push_back({{1.0}, {std::min(c[0], c[2]), std::min(c[1], c[3]), std::max(c[0], c[2]),
                              std::max(c[1], c[3])}, 0});
    }
    for (double tau : {0.5, 0.8, 0.95}) {
      ++instances;
      if (partition_detections(dets, tau) != connected_components_bruteforce(dets, tau)) ++mismatches;
    }
  }
  const double secs = seconds_since(t0);
  return {mismatches == 0 && instances >= 200 && secs < 10.0,
          fmt("%d instances, %d mismatches, %.2f s (limit 10 s)", instances, mismatches, secs)};
}

// ---------------------------------------------------------------- 2

Outcome fusion_invariants() {
  std::mt19937_64 rng(202);
  std::uniform_int_distribution<int> members(1, 50);
  std::uniform_int_distribution<int> classes(1, 80);
  std::uniform_real_distribution<double> pos(0.0, 500.0);
  std::normal_distribution<double> jitter(0.0, 3.0);
  std::gamma_distribution<double> gamma(0.5, 1.0);
  int observations = 0;
  int violations = 0;
  double worst_simplex = 0.0, worst_eig = 0.0, worst_perm = 0.0;
  for (; observations < 1200; ++observations) {
    const int k = classes(rng);
    const int n = members(rng);
    const double x = pos(rng), y = pos(rng);
    std::vector<Detection> dets;
    for (int i = 0; i < n; ++i) {
      std::vector<double> s(static_cast<std::size_t>(k) + 1);
      double total = 0.0;
      for (double& v : s) total += (v = gamma(rng));
      for (double& v : s) v /= total;
      const double a = x + jitter(rng), b = y + jitter(rng);
      const double c = x + 40 + jitter(rng), d = y + 30 + jitter(rng);
      dets.push_back({s, {std::min(a, c), std::min(b, d), std::max(a, c), std::max(b, d)}, i});
    }
    const Observation o = fuse_observation(dets);

    double sum = 0.0;
    for (double v : o.fused_scores) sum += v;
    worst_simplex = std::max(worst_simplex, std::abs(sum - 1.0));
    const bool on_simplex = std::abs(sum - 1.0) <= 1e-9;
    const bool entropy_ok = o.entropy >= 0.0 && o.entropy <= std::log(k + 1.0);

    Eigen::Matrix4d m;
    bool symmetric = true;
    for (int r = 0; r < 4; ++r) {
      for (int c = 0; c < 4; ++c) {
        m(r, c) = o.box_covariance[r * 4 + c];
        symmetric = symmetric && o.box_covariance[r * 4 + c] == o.box_covariance[c * 4 + r];
      }
    }
    const double min_eig = Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d>(m).eigenvalues().minCoeff();
    worst_eig = std::min(worst_eig, min_eig);

    std::shuffle(dets.begin(), dets.end(), rng);
    const Observation p = fuse_observation(dets);
    double diff = 0.0;
    for (std::size_t j = 0; j < o.fused_scores.size(); ++j) {
      diff = std::max(diff, std::abs(o.fused_scores[j] - p.fused_scores[j]));
    }
    const auto ba = o.fused_box.to_array(), bb = p.fused_box.to_array();
    for (int j = 0; j < 4; ++j) diff = std::max(diff, std::abs(ba[j] - bb[j]));
    for (int j = 0; j < 16; ++j) diff = std::max(diff, std::abs(o.box_covariance[j] - p.box_covariance[j]));
    worst_perm = std::max(worst_perm, diff);

    bool singleton_ok = true;
    if (n == 1) {
      singleton_ok = o.fused_scores == dets[0].scores && o.fused_box == dets[0].box &&
                     std::all_of(o.box_covariance.begin(), o.box_covariance.end(),
                                 [](double v) { return v == 0.0; }) &&
                     o.entropy == entropy(dets[0].scores);
    }
    if (!(on_simplex && entropy_ok && symmetric && min_eig >= -1e-9 && diff <= 1e-12 && singleton_ok)) {
      ++violations;
    }
  }
  return {violations == 0,
          fmt("%d observations, %d violations; max |sum-1|=%.1e, min eigenvalue=%.1e, "
              "max permutation diff=%.1e",
              observations, violations, worst_simplex, worst_eig, worst_perm)};
}

// ---------------------------------------------------------------- 3

Outcome f1_formula() {
  const double vanilla = f1_score(0.328, 0.165);
  const double bayes42 = f1_score(0.347, 0.278);
  const bool ok = std::abs(vanilla - 0.220) <= 0.0005 && std::abs(bayes42 - 0.309) <= 0.0005;
  return {ok, fmt("F1(P=0.328,R=0.165)=%.5f vs 0.220; F1(P=0.347,R=0.278)=%.5f vs 0.309 (tol 0.0005)",
                  vanilla, bayes42)};
}

// ---------------------------------------------------------------- 4

Outcome hand_scenes() {
  const auto obs = [](int label, BoundingBox box) {
    Observation o;
    o.fused_scores.assign(21, 0.0);
    o.fused_scores[label] = 1.0;
    o.winning_label = label;
    o.fused_box = box;
    o.detection_count = 1;
    return o;
  };
  const EvalConfig c;
  const std::vector<GroundTruthObject> chair{{{0, 0, 10, 10}, 3}};
  const std::vector<GroundTruthObject> unknown{{{50, 50, 60, 60}, 0}};
  const EvalCounts a = score_scene(std::vector{obs(3, {0, 0, 10, 10})}, chair, c);
  const EvalCounts b = score_scene(std::vector{obs(5, {0, 0, 10, 10})}, chair, c);
  const EvalCounts u = score_scene(std::vector{obs(1, {50, 50, 60, 60})}, unknown, c);
  const bool ok = a == EvalCounts{1, 0, 0, 0} && b == EvalCounts{0, 1, 1, 0} && u == EvalCounts{0, 1, 0, 1};
  const auto show = [](const EvalCounts& e) {
    return fmt("(tp=%lld fp=%lld fn=%lld ose=%lld)", (long long)e.tp, (long long)e.fp, (long long)e.fn,
               (long long)e.abs_ose);
  };
  return {ok, "perfect " + show(a) + ", mismatch " + show(b) + ", unknown hit " + show(u)};
}

// ----------------------------------------------------------- shared data

struct SeedRun {
  std::vector<Scene> scenes;
  std::vector<FusedScene> fused42;
  CurvePoint baseline_max;
};

SimulatorConfig default_config(std::uint64_t seed) {
  SimulatorConfig c;
  c.seed = seed;
  return c;
}

SeedRun run_seed(std::uint64_t seed) {
  SeedRun run;
  run.scenes = simulate_dataset(default_config(seed), kScenes);
  const auto baseline = fuse_scenes(run.scenes, kDefaultClusterIou, 1);
  run.baseline_max = max_f1_point(sweep(std::span<const FusedScene>(baseline), kGrid, EvalConfig{}));
  run.fused42 = fuse_scenes(run.scenes, kDefaultClusterIou);
  return run;
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sample_variance(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

// ---------------------------------------------------------------- 5

Outcome ose_reduction(std::vector<SeedRun>& runs) {
  const auto t0 = Clock::now();
  int lower = 0;
  std::vector<double> reductions;
  long long base_total = 0, bayes_total = 0;
  for (int s = 0; s < kSeeds; ++s) {
    runs.push_back(run_seed(kFirstSeed + s));
    const SeedRun& run = runs.back();
    const auto curve = sweep(std::span<const FusedScene>(run.fused42), kGrid, EvalConfig{});
    const auto at_ref = ose_at_reference_f1(curve, run.baseline_max.f1);
    const double base = static_cast<double>(run.baseline_max.counts.abs_ose);
    base_total += run.baseline_max.counts.abs_ose;
    if (at_ref) {
      const double bayes = static_cast<double>(at_ref->counts.abs_ose);
      bayes_total += at_ref->counts.abs_ose;
      if (bayes < base) ++lower;
      reductions.push_back(base > 0 ? 1.0 - bayes / base : 0.0);
    } else {
      reductions.push_back(0.0);  // unattainable reference F1: no reduction credited
    }
  }
  const double secs = seconds_since(t0);
  const double mean_red = mean(reductions);
  return {lower >= 27 && mean_red >= 0.20 && secs < 120.0,
          fmt("42-pass OSE lower in %d/30 seeds (need >=27), mean reduction %.1f%% (need >=20%%); "
              "totals %lld -> %lld; %.1f s (limit 120 s)",
              lower, 100.0 * mean_red, base_total, bayes_total, secs)};
}

// ---------------------------------------------------------------- 6

Outcome pass_trend(const std::vector<SeedRun>& runs) {
  const std::size_t passes[] = {10, 20, 30, 42};
  std::vector<std::vector<double>> max_f1(4);
  for (const SeedRun& run : runs) {
    for (int i = 0; i < 4; ++i) {
      const auto curve = sweep(std::span<const Scene>(run.scenes), kGrid, EvalConfig{}, 1, passes[i]);
      max_f1[i].push_back(max_f1_point(curve).f1);
    }
  }
  bool ok = true;
  std::string detail = "mean max-F1";
  for (int i = 0; i < 4; ++i) detail += fmt(" %zu:%.4f", passes[i], mean(max_f1[i]));
  for (int i = 0; i + 1 < 4; ++i) {
    const double n = static_cast<double>(max_f1[i].size());
    const double pooled_se = std::sqrt((sample_variance(max_f1[i]) + sample_variance(max_f1[i + 1])) / n);
    const bool step_ok = mean(max_f1[i + 1]) >= mean(max_f1[i]) - pooled_se;
    ok = ok && step_ok;
    detail += fmt("; %zu->%zu %+.4f (SE %.4f)%s", passes[i], passes[i + 1],
                  mean(max_f1[i + 1]) - mean(max_f1[i]), pooled_se, step_ok ? "" : " DECREASE");
  }
  return {ok, detail};
}

// ---------------------------------------------------------------- 7

Outcome min_detection_trend(const std::vector<SeedRun>& runs) {
  std::vector<double> ose1, ose3, f1_1, f1_10;
  int unattainable3 = 0;
  for (const SeedRun& run : runs) {
    const auto curve_for = [&](int min_det) {
      EvalConfig c;
      c.min_detections = min_det;
      return sweep(std::span<const FusedScene>(run.fused42), kGrid, c);
    };
    const auto c1 = curve_for(1), c3 = curve_for(3), c10 = curve_for(10);
    const double ref = run.baseline_max.f1;
    const auto r1 = ose_at_reference_f1(c1, ref);
    const auto r3 = ose_at_reference_f1(c3, ref);
    if (r1 && r3) {
      ose1.push_back(static_cast<double>(r1->counts.abs_ose));
      ose3.push_back(static_cast<double>(r3->counts.abs_ose));
    } else if (!r3) {
      ++unattainable3;
    }
    f1_1.push_back(max_f1_point(c1).f1);
    f1_10.push_back(max_f1_point(c10).f1);
  }
  const bool ose_ok = unattainable3 == 0 && !ose1.empty() && mean(ose3) <= mean(ose1);
  const bool f1_ok = mean(f1_10) < mean(f1_1);
  return {ose_ok && f1_ok,
          fmt("mean OSE at reference F1: min_det=1 %.2f, min_det=3 %.2f (%s, %d seeds unattainable); "
              "mean max-F1: min_det=1 %.4f, min_det=10 %.4f (%s)",
              ose1.empty() ? NAN : mean(ose1), ose3.empty() ? NAN : mean(ose3),
              ose_ok ? "not increased" : "INCREASED", unattainable3, mean(f1_1), mean(f1_10),
              f1_ok ? "reduced" : "NOT reduced")};
}

// ---------------------------------------------------------------- 8

Outcome sweep_monotonicity() {
  const auto grid = theta_grid(0.0, 3.2, 161);
  int datasets = 0;
  int violations = 0;
  for (std::uint64_t seed : {501u, 502u, 503u, 504u}) {
    SimulatorConfig c = default_config(seed);
    for (int passes : {1, 10, 42}) {
      c.passes = passes;
      const auto scenes = simulate_dataset(c, 40);
      for (int min_det : {1, 3, 10}) {
        EvalConfig e;
        e.min_detections = min_det;
        const auto pts = sweep(std::span<const Scene>(scenes), grid, e);
        ++datasets;
        for (std::size_t i = 0; i < pts.size(); ++i) {
          if (pts[i].counts.abs_ose > pts[i].counts.fp) ++violations;
          if (i == 0) continue;
          const auto& a = pts[i - 1];
          const auto& b = pts[i];
          if (b.counts.tp < a.counts.tp || b.counts.fp < a.counts.fp ||
              b.counts.abs_ose < a.counts.abs_ose || b.recall < a.recall || b.counts.fn > a.counts.fn) {
            ++violations;
          }
        }
      }
    }
  }
  return {violations == 0,
          fmt("%d simulated sweeps x %zu thresholds, %d violations", datasets, grid.size(), violations)};
}

// ---------------------------------------------------------------- 9

Outcome determinism() {
  const fs::path dir = fs::temp_directory_path() / ("osdet_acceptance_" + std::to_string(std::random_device{}()));
  fs::create_directories(dir);
  const auto p = [&](const char* name) { return (dir / name).string(); };
  std::ostringstream sink;
  const auto cli = [&](std::vector<std::string> args) { return cli::run(args, sink, sink); };

  int rc = 0;
  rc |= cli({"simulate", "--seed", "7", "--output", p("a_det.json"), "--ground-truth", p("a_gt.json")});
  rc |= cli({"simulate", "--seed", "7", "--output", p("b_det.json"), "--ground-truth", p("b_gt.json")});
  const bool files_equal = io::read_text(p("a_det.json")) == io::read_text(p("b_det.json")) &&
                           io::read_text(p("a_gt.json")) == io::read_text(p("b_gt.json"));
  rc |= cli({"sweep", "--input", p("a_det.json"), "--ground-truth", p("a_gt.json"), "--output",
             p("w1.csv"), "--workers", "1"});
  rc |= cli({"sweep", "--input", p("a_det.json"), "--ground-truth", p("a_gt.json"), "--output",
             p("w8.csv"), "--workers", "8"});
  const bool csv_equal = io::read_text(p("w1.csv")) == io::read_text(p("w8.csv"));
  fs::remove_all(dir);
  return {rc == 0 && files_equal && csv_equal,
          fmt("simulate --seed 7 twice: %s; sweep --workers 1 vs 8: %s",
              files_equal ? "byte-identical" : "DIFFERENT", csv_equal ? "identical CSV" : "DIFFERENT")};
}

}  // namespace

int main() {
  const auto t0 = Clock::now();
  report(1, "partition oracle equivalence", partition_equivalence());
  report(2, "fusion invariants", fusion_invariants());
  report(3, "F1 formula vs reported values", f1_formula());
  report(4, "hand-enumerated scoring scenes", hand_scenes());
  std::vector<SeedRun> runs;
  report(5, "OSE at reference F1, 42 passes vs single pass", ose_reduction(runs));
  report(6, "max-F1 trend over forward passes", pass_trend(runs));
  report(7, "minimum-detections trend", min_detection_trend(runs));
  report(8, "sweep monotonicity", sweep_monotonicity());
  report(9, "determinism", determinism());
  std::printf("%d of 9 criteria failed (%.1f s)\n", failures, seconds_since(t0));
  return failures == 0 ? 0 : 1;
}
