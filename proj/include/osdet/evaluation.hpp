#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "osdet/fusion.hpp"
#include "osdet/geometry.hpp"
#include "osdet/partition.hpp"

namespace osdet {

inline constexpr double kDefaultMatchIou = 0.5;
inline constexpr double kDisabledEntropyTest = std::numeric_limits<double>::infinity();

/// Labelled ground-truth box. Label 0 marks an object of an unknown class.
struct GroundTruthObject {
  BoundingBox box;
  int label = 0;

  friend bool operator==(const GroundTruthObject&, const GroundTruthObject&) = default;
};

/// One image: its ground truth plus the detections of every forward pass.
struct Scene {
  std::string image_id;
  std::vector<GroundTruthObject> ground_truth;
  std::vector<std::vector<Detection>> passes;
};

/// One image after partitioning and fusion.
struct FusedScene {
  std::string image_id;
  std::vector<Observation> observations;
  std::vector<GroundTruthObject> ground_truth;
};

struct EvalConfig {
  double theta = kDisabledEntropyTest;
  double match_iou = kDefaultMatchIou;
  int min_detections = 1;
  double cluster_iou = kDefaultClusterIou;

  /// Throws std::invalid_argument on out-of-range settings.
  void validate() const;
};

struct EvalCounts {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  std::int64_t abs_ose = 0;

  EvalCounts& operator+=(const EvalCounts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    abs_ose += o.abs_ose;
    return *this;
  }
  friend bool operator==(const EvalCounts&, const EvalCounts&) = default;
};

struct CurvePoint {
  double theta = 0.0;
  EvalCounts counts;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Precision, recall and F1 from raw counts, each 0 when undefined.
CurvePoint make_point(double theta, const EvalCounts& counts);
double f1_score(double precision, double recall);

/// Detection-count rule, then the entropy test, then self-rejection of
/// observations whose winning label is 0 (unknown).
bool accepts(const Observation& obs, const EvalConfig& config);

std::vector<Observation> filter_observations(std::span<const Observation> observations,
                                             const EvalConfig& config);

/// Counts TP/FP/FN/open-set errors for already-accepted observations. An
/// observation is a TP when its winning label equals the label of any known
/// object it matches (IoU >= match_iou), an FP otherwise, and additionally an
/// open-set error when it matches no known object at all. A known object is
/// an FN unless some observation counted as TP on it.
EvalCounts score_scene(std::span<const Observation> accepted,
                       std::span<const GroundTruthObject> ground_truth,
                       const EvalConfig& config);

/// Micro-average: counts are summed before the ratios are taken.
CurvePoint aggregate(std::span<const EvalCounts> per_scene, double theta = 0.0);

/// Concatenates the detections of the first max_passes passes (all passes
/// when max_passes is empty).
std::vector<Detection> flatten_passes(const Scene& scene,
                                      std::optional<std::size_t> max_passes = std::nullopt);

std::vector<FusedScene> fuse_scenes(std::span<const Scene> scenes, double cluster_iou,
                                    std::optional<std::size_t> max_passes = std::nullopt,
                                    unsigned workers = 1);

/// Evenly spaced thresholds from lo to hi inclusive.
std::vector<double> theta_grid(double lo, double hi, int steps);

/// One CurvePoint per theta. config.theta is ignored; the rest of config
/// applies at every grid point. Fusion is taken as given, so callers fuse
/// once and sweep as many grids as they like.
std::vector<CurvePoint> sweep(std::span<const FusedScene> scenes, std::span<const double> thetas,
                              const EvalConfig& config, unsigned workers = 1);

/// Convenience: fuse once with config.cluster_iou, then sweep.
std::vector<CurvePoint> sweep(std::span<const Scene> scenes, std::span<const double> thetas,
                              const EvalConfig& config, unsigned workers = 1,
                              std::optional<std::size_t> max_passes = std::nullopt);

/// Highest F1; ties go to the lowest theta. Throws on an empty curve.
CurvePoint max_f1_point(std::span<const CurvePoint> points);

/// Highest F1 among points with abs_ose <= reference; nullopt if none qualify.
std::optional<CurvePoint> f1_at_reference_ose(std::span<const CurvePoint> points,
                                              std::int64_t reference_ose);

/// Lowest abs_ose among points with f1 >= reference; nullopt if none qualify.
std::optional<CurvePoint> ose_at_reference_f1(std::span<const CurvePoint> points,
                                              double reference_f1);

struct CurveSummary {
  CurvePoint max_f1;
  std::optional<CurvePoint> f1_at_reference_ose;
  std::optional<CurvePoint> ose_at_reference_f1;
};

CurveSummary curve_analysis(std::span<const CurvePoint> points,
                            std::optional<std::int64_t> reference_ose = std::nullopt,
                            std::optional<double> reference_f1 = std::nullopt);

}  // namespace osdet
