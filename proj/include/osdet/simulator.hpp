#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "osdet/evaluation.hpp"

namespace osdet {

/// Generative model of a dropout-sampled detector. Every forward pass sees
/// the same objects; per pass each object is detected with probability
/// p_det, its corners jittered by N(0, sigma_box^2), and its scores drawn
/// from a Dirichlet peaked (alpha_hi) on a target class. Known objects keep
/// their true label as target; unknown objects re-draw the target each pass
/// from a fixed set of confusion_size known classes. Poisson(clutter_rate)
/// spurious detections with flat-Dirichlet scores are added per pass.
struct SimulatorConfig {
  int image_width = 640;
  int image_height = 480;
  int num_known_objects = 4;
  int num_unknown_objects = 2;
  int class_count = 20;
  int passes = 42;
  double p_det = 0.8;
  double sigma_box = 1.5;
  double alpha_hi = 20.0;
  double alpha_lo = 0.5;
  int confusion_size = 3;
  double clutter_rate = 0.5;
  // Side lengths of ground-truth and clutter boxes are uniform in this range.
  double min_box_size = 96.0;
  double max_box_size = 192.0;
  std::uint64_t seed = 0;

  void validate() const;  // throws std::invalid_argument
};

/// Ground-truth boxes never overlap each other at this IoU or above.
inline constexpr double kPlacementIouLimit = 0.3;

/// Scene `stream_id` of the dataset seeded by config.seed. Passes draw from
/// their own substreams, so a run with fewer passes is a prefix of a run
/// with more. Throws SimulationError when the objects cannot be placed.
Scene simulate_scene(const SimulatorConfig& config, std::uint64_t stream_id);

/// Scenes 0..num_scenes-1; identical for every worker count.
std::vector<Scene> simulate_dataset(const SimulatorConfig& config, int num_scenes,
                                    unsigned workers = 1);

std::string scene_image_id(std::uint64_t stream_id);

}  // namespace osdet
