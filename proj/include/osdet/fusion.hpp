#pragma once

#include <array>
#include <span>
#include <vector>

#include "osdet/geometry.hpp"
#include "osdet/partition.hpp"

namespace osdet {

/// Row-major 4x4 covariance over (x1, y1, x2, y2).
using BoxCovariance = std::array<double, 16>;

/// A group of detections fused into one label distribution and one box.
struct Observation {
  std::vector<Detection> members;
  std::vector<double> fused_scores;
  double entropy = 0.0;  // nats
  BoundingBox fused_box;
  BoxCovariance box_covariance{};
  int winning_label = 0;
  int detection_count = 0;
  /// Set when the covariance is undefined (a single member) and reported as zero.
  bool low_support = false;
};

enum class EntropyVerdict { accept, reject };

/// Elementwise mean of the member score vectors, renormalised when its sum
/// drifts from 1 by more than 1e-12.
/// Throws std::invalid_argument on an empty list or mismatched lengths.
std::vector<double> fuse_scores(std::span<const Detection> members);

/// Shannon entropy in nats, with 0 ln 0 = 0. Clamped to [0, ln(q.size())].
double entropy(std::span<const double> q);

BoundingBox fuse_box(std::span<const Detection> members);

/// Unbiased (n-1) sample covariance of the member box corners; zero for a
/// single member.
BoxCovariance box_covariance(std::span<const Detection> members);

/// Argmax; the lowest index wins ties.
int winning_label(std::span<const double> q);

/// Rejects strictly above the threshold: h == theta is accepted.
EntropyVerdict entropy_test(double h, double theta);

/// Runs every fusion step on one group of detections.
Observation fuse_observation(std::vector<Detection> members);

/// Partitions one image's detections at cluster_iou and fuses each group,
/// in partition order.
std::vector<Observation> fuse_image(std::span<const Detection> detections,
                                    double cluster_iou = kDefaultClusterIou);

}  // namespace osdet
