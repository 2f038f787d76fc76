#include "osdet/evaluation.hpp"

#include <cmath>
#include <stdexcept>

#include "osdet/parallel.hpp"

namespace osdet {

namespace {

template <typename ObsRange>
EvalCounts score_range(const ObsRange& accepted, std::span<const GroundTruthObject> ground_truth,
                       double match_iou) {
  EvalCounts counts;
  // A known object counts as detected only through a label-agreeing match;
  // one covered solely by wrong-label observations is still a false negative.
  std::vector<bool> detected(ground_truth.size(), false);
  for (const Observation& obs : accepted) {
    bool overlaps_known = false;
    bool label_agrees = false;
    for (std::size_t g = 0; g < ground_truth.size(); ++g) {
      const GroundTruthObject& gt = ground_truth[g];
      if (iou(obs.fused_box, gt.box) < match_iou || gt.label == 0) continue;
      overlaps_known = true;
      if (gt.label == obs.winning_label) {
        label_agrees = true;
        detected[g] = true;
      }
    }
    if (label_agrees) {
      ++counts.tp;
    } else {
      ++counts.fp;
      if (!overlaps_known) ++counts.abs_ose;
    }
  }
  for (std::size_t g = 0; g < ground_truth.size(); ++g) {
    if (ground_truth[g].label != 0 && !detected[g]) ++counts.fn;
  }
  return counts;
}

// Lets score_range walk a vector of pointers as if it held observations.
struct PointerView {
  const std::vector<const Observation*>& items;
  struct iterator {
    std::vector<const Observation*>::const_iterator it;
    const Observation& operator*() const { return **it; }
    iterator& operator++() {
      ++it;
      return *this;
    }
    bool operator!=(const iterator& o) const { return it != o.it; }
  };
  iterator begin() const { return {items.begin()}; }
  iterator end() const { return {items.end()}; }
};

}  // namespace

void EvalConfig::validate() const {
  if (std::isnan(theta) || theta < 0.0) {
    throw std::invalid_argument("entropy threshold must be >= 0");
  }
  if (!(match_iou > 0.0 && match_iou <= 1.0)) {
    throw std::invalid_argument("match IoU threshold must lie in (0, 1]");
  }
  if (!(cluster_iou > 0.0 && cluster_iou <= 1.0)) {
    throw std::invalid_argument("cluster IoU threshold must lie in (0, 1]");
  }
  if (min_detections < 1) throw std::invalid_argument("min_detections must be >= 1");
}

double f1_score(double precision, double recall) {
  const double denom = precision + recall;
  return denom > 0.0 ? 2.0 * precision * recall / denom : 0.0;
}

CurvePoint make_point(double theta, const EvalCounts& counts) {
  CurvePoint p;
  p.theta = theta;
  p.counts = counts;
  const auto ratio = [](std::int64_t num, std::int64_t den) {
    return den > 0 ? static_cast<double>(num) / static_cast<double>(den) : 0.0;
  };
  p.precision = ratio(counts.tp, counts.tp + counts.fp);
  p.recall = ratio(counts.tp, counts.tp + counts.fn);
  p.f1 = f1_score(p.precision, p.recall);
  return p;
}

bool accepts(const Observation& obs, const EvalConfig& config) {
  if (obs.detection_count < config.min_detections) return false;
  if (entropy_test(obs.entropy, config.theta) == EntropyVerdict::reject) return false;
  return obs.winning_label != 0;
}

std::vector<Observation> filter_observations(std::span<const Observation> observations,
                                             const EvalConfig& config) {
  std::vector<Observation> kept;
  for (const Observation& obs : observations) {
    if (accepts(obs, config)) kept.push_back(obs);
  }
  return kept;
}

EvalCounts score_scene(std::span<const Observation> accepted,
                       std::span<const GroundTruthObject> ground_truth,
                       const EvalConfig& config) {
  return score_range(accepted, ground_truth, config.match_iou);
}

CurvePoint aggregate(std::span<const EvalCounts> per_scene, double theta) {
  EvalCounts total;
  for (const EvalCounts& c : per_scene) total += c;
  return make_point(theta, total);
}

std::vector<Detection> flatten_passes(const Scene& scene, std::optional<std::size_t> max_passes) {
  const std::size_t used = std::min(scene.passes.size(), max_passes.value_or(scene.passes.size()));
  std::vector<Detection> flat;
  for (std::size_t p = 0; p < used; ++p) {
    flat.insert(flat.end(), scene.passes[p].begin(), scene.passes[p].end());
  }
  return flat;
}

std::vector<FusedScene> fuse_scenes(std::span<const Scene> scenes, double cluster_iou,
                                    std::optional<std::size_t> max_passes, unsigned workers) {
  std::vector<FusedScene> fused(scenes.size());
  parallel_for(scenes.size(), workers, [&](std::size_t i) {
    const Scene& scene = scenes[i];
    fused[i].image_id = scene.image_id;
    fused[i].ground_truth = scene.ground_truth;
    fused[i].observations = fuse_image(flatten_passes(scene, max_passes), cluster_iou);
  });
  return fused;
}

std::vector<double> theta_grid(double lo, double hi, int steps) {
  if (steps < 1) throw std::invalid_argument("theta grid needs at least one step");
  if (!(lo >= 0.0) || !(hi >= lo)) {
    throw std::invalid_argument("theta grid bounds must satisfy 0 <= min <= max");
  }
  if (steps == 1) return {lo};
  std::vector<double> grid(static_cast<std::size_t>(steps));
  for (int i = 0; i < steps; ++i) {
    grid[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(steps - 1);
  }
  grid.back() = hi;
  return grid;
}

std::vector<CurvePoint> sweep(std::span<const FusedScene> scenes, std::span<const double> thetas,
                              const EvalConfig& config, unsigned workers) {
  if (thetas.empty()) throw std::invalid_argument("empty theta grid");
  for (std::size_t i = 1; i < thetas.size(); ++i) {
    if (thetas[i] < thetas[i - 1]) throw std::invalid_argument("theta grid must be ascending");
  }
  // per_scene[s][t]: counts of scene s at theta t. Reduction happens in scene
  // order afterwards, so the totals do not depend on the worker count.
  std::vector<std::vector<EvalCounts>> per_scene(scenes.size());
  parallel_for(scenes.size(), workers, [&](std::size_t s) {
    EvalConfig at = config;
    std::vector<const Observation*> accepted;
    per_scene[s].reserve(thetas.size());
    for (double theta : thetas) {
      at.theta = theta;
      at.validate();
      accepted.clear();
      for (const Observation& obs : scenes[s].observations) {
        if (accepts(obs, at)) accepted.push_back(&obs);
      }
      per_scene[s].push_back(score_range(PointerView{accepted}, scenes[s].ground_truth,
                                         at.match_iou));
    }
  });

  std::vector<CurvePoint> points;
  points.reserve(thetas.size());
  for (std::size_t t = 0; t < thetas.size(); ++t) {
    EvalCounts total;
    for (const auto& row : per_scene) total += row[t];
    points.push_back(make_point(thetas[t], total));
  }
  return points;
}

std::vector<CurvePoint> sweep(std::span<const Scene> scenes, std::span<const double> thetas,
                              const EvalConfig& config, unsigned workers,
                              std::optional<std::size_t> max_passes) {
  const auto fused = fuse_scenes(scenes, config.cluster_iou, max_passes, workers);
  return sweep(std::span<const FusedScene>(fused), thetas, config, workers);
}

CurvePoint max_f1_point(std::span<const CurvePoint> points) {
  if (points.empty()) throw std::invalid_argument("empty curve");
  const CurvePoint* best = &points.front();
  for (const CurvePoint& p : points) {
    if (p.f1 > best->f1 || (p.f1 == best->f1 && p.theta < best->theta)) best = &p;
  }
  return *best;
}

std::optional<CurvePoint> f1_at_reference_ose(std::span<const CurvePoint> points,
                                              std::int64_t reference_ose) {
  const CurvePoint* best = nullptr;
  for (const CurvePoint& p : points) {
    if (p.counts.abs_ose > reference_ose) continue;
    if (!best || p.f1 > best->f1 || (p.f1 == best->f1 && p.theta < best->theta)) best = &p;
  }
  if (!best) return std::nullopt;
  return *best;
}

std::optional<CurvePoint> ose_at_reference_f1(std::span<const CurvePoint> points,
                                              double reference_f1) {
  const CurvePoint* best = nullptr;
  for (const CurvePoint& p : points) {
    if (p.f1 < reference_f1) continue;
    if (!best || p.counts.abs_ose < best->counts.abs_ose ||
        (p.counts.abs_ose == best->counts.abs_ose && p.theta < best->theta)) {
      best = &p;
    }
  }
  if (!best) return std::nullopt;
  return *best;
}

CurveSummary curve_analysis(std::span<const CurvePoint> points,
                            std::optional<std::int64_t> reference_ose,
                            std::optional<double> reference_f1) {
  CurveSummary summary;
  summary.max_f1 = max_f1_point(points);
  if (reference_ose) summary.f1_at_reference_ose = f1_at_reference_ose(points, *reference_ose);
  if (reference_f1) summary.ose_at_reference_f1 = ose_at_reference_f1(points, *reference_f1);
  return summary;
}

}  // namespace osdet
