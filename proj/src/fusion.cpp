#include "osdet/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace osdet {

namespace {

void require_members(std::span<const Detection> members) {
  if (members.empty()) throw std::invalid_argument("observation has no member detections");
}

// Sums are taken over members in a canonical order so that fused values are
// bit-identical for every permutation of the same members.
std::vector<const Detection*> canonical_order(std::span<const Detection> members) {
  std::vector<const Detection*> order;
  order.reserve(members.size());
  for (const Detection& d : members) order.push_back(&d);
  std::sort(order.begin(), order.end(), [](const Detection* a, const Detection* b) {
    const auto ba = a->box.to_array();
    const auto bb = b->box.to_array();
    if (ba != bb) return ba < bb;
    if (a->scores != b->scores) return a->scores < b->scores;
    return a->pass_index < b->pass_index;
  });
  return order;
}

std::array<double, 4> mean_corners(const std::vector<const Detection*>& order) {
  std::array<double, 4> mean{};
  for (const Detection* d : order) {
    const auto c = d->box.to_array();
    for (int i = 0; i < 4; ++i) mean[i] += c[i];
  }
  for (double& m : mean) m /= static_cast<double>(order.size());
  return mean;
}

}  // namespace

std::vector<double> fuse_scores(std::span<const Detection> members) {
  require_members(members);
  const std::size_t len = members.front().scores.size();
  for (const Detection& d : members) {
    if (d.scores.size() != len) {
      throw std::invalid_argument("member score vectors differ in length");
    }
  }
  std::vector<double> q(len, 0.0);
  for (const Detection* d : canonical_order(members)) {
    for (std::size_t j = 0; j < len; ++j) q[j] += d->scores[j];
  }
  double total = 0.0;
  for (double& v : q) {
    v /= static_cast<double>(members.size());
    total += v;
  }
  // Only drift from inputs that sit within tolerance of the simplex is
  // corrected; an exactly normalised mean is left bit-for-bit alone.
  if (std::abs(total - 1.0) > 1e-12) {
    for (double& v : q) v /= total;
  }
  return q;
}

double entropy(std::span<const double> q) {
  if (q.empty()) return 0.0;
  double h = 0.0;
  for (double p : q) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return std::clamp(h, 0.0, std::log(static_cast<double>(q.size())));
}

BoundingBox fuse_box(std::span<const Detection> members) {
  require_members(members);
  const auto m = mean_corners(canonical_order(members));
  // A mean of valid boxes is valid up to rounding; pin the corners so that
  // rounding can never invert them.
  return {m[0], m[1], std::max(m[0], m[2]), std::max(m[1], m[3])};
}

BoxCovariance box_covariance(std::span<const Detection> members) {
  require_members(members);
  BoxCovariance cov{};
  if (members.size() < 2) return cov;
  const auto order = canonical_order(members);
  const auto mean = mean_corners(order);
  for (const Detection* d : order) {
    const auto c = d->box.to_array();
    for (int r = 0; r < 4; ++r) {
      for (int col = r; col < 4; ++col) {
        cov[r * 4 + col] += (c[r] - mean[r]) * (c[col] - mean[col]);
      }
    }
  }
  const double divisor = static_cast<double>(members.size() - 1);
  for (int r = 0; r < 4; ++r) {
    for (int col = r; col < 4; ++col) {
      cov[r * 4 + col] /= divisor;
      cov[col * 4 + r] = cov[r * 4 + col];
    }
  }
  return cov;
}

int winning_label(std::span<const double> q) {
  if (q.empty()) throw std::invalid_argument("empty score vector");
  return static_cast<int>(std::max_element(q.begin(), q.end()) - q.begin());
}

EntropyVerdict entropy_test(double h, double theta) {
  return h > theta ? EntropyVerdict::reject : EntropyVerdict::accept;
}

Observation fuse_observation(std::vector<Detection> members) {
  Observation obs;
  obs.fused_scores = fuse_scores(members);
  obs.entropy = entropy(obs.fused_scores);
  obs.fused_box = fuse_box(members);
  obs.box_covariance = box_covariance(members);
  obs.winning_label = winning_label(obs.fused_scores);
  obs.detection_count = static_cast<int>(members.size());
  obs.low_support = members.size() < 2;
  obs.members = std::move(members);
  return obs;
}

std::vector<Observation> fuse_image(std::span<const Detection> detections, double cluster_iou) {
  std::vector<Observation> observations;
  for (const ObservationGroup& group : partition_detections(detections, cluster_iou)) {
    std::vector<Detection> members;
    members.reserve(group.members.size());
    for (std::size_t idx : group.members) members.push_back(detections[idx]);
    observations.push_back(fuse_observation(std::move(members)));
  }
  return observations;
}

}  // namespace osdet
