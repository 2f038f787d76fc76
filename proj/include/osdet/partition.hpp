#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "osdet/geometry.hpp"

namespace osdet {

inline constexpr double kDefaultClusterIou = 0.95;
inline constexpr double kSimplexTolerance = 1e-6;

/// One raw detector output from a single forward pass. scores[0] is the
/// unknown/background class, scores[1..k] the known classes.
struct Detection {
  std::vector<double> scores;
  BoundingBox box;
  int pass_index = 0;

  friend bool operator==(const Detection&, const Detection&) = default;
};

/// Throws ValidationError unless the scores lie on the probability simplex
/// (each in [0,1], sum within kSimplexTolerance of 1) and pass_index >= 0.
void validate_detection(const Detection& d);

/// Indices into an image's detection list, sorted ascending.
struct ObservationGroup {
  std::vector<std::size_t> members;

  friend bool operator==(const ObservationGroup&, const ObservationGroup&) = default;
};

/// Union-find over n elements with path compression and union by rank.
class DisjointSet {
 public:
  explicit DisjointSet(std::size_t n);

  std::size_t find(std::size_t x);
  /// Returns false when a and b were already in the same set.
  bool unite(std::size_t a, std::size_t b);
  std::size_t size() const { return parent_.size(); }

 private:
  std::vector<std::size_t> parent_;
  std::vector<unsigned> rank_;
};

/// Connected components of the graph joining detections whose boxes have
/// IoU >= cluster_iou. Merging is transitive: members of one group need not
/// all overlap each other pairwise. Groups are ordered by smallest member.
std::vector<ObservationGroup> partition_detections(std::span<const Detection> detections,
                                                   double cluster_iou = kDefaultClusterIou);

/// Same contract as partition_detections, computed by breadth-first search
/// over the explicit pairwise IoU graph. Used as a reference implementation.
std::vector<ObservationGroup> connected_components_bruteforce(
    std::span<const Detection> detections, double cluster_iou = kDefaultClusterIou);

}  // namespace osdet
