#include "osdet/partition.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "osdet/error.hpp"

namespace osdet {

namespace {

void check_threshold(double cluster_iou) {
  if (!(cluster_iou > 0.0 && cluster_iou <= 1.0)) {
    throw std::invalid_argument("cluster IoU threshold must lie in (0, 1]");
  }
}

}  // namespace

void validate_detection(const Detection& d) {
  if (d.pass_index < 0) throw ValidationError("negative pass index");
  if (d.scores.empty()) throw ValidationError("empty score vector");
  double sum = 0.0;
  for (double s : d.scores) {
    if (!std::isfinite(s) || s < 0.0 || s > 1.0) {
      std::ostringstream msg;
      msg << "score " << s << " outside [0,1]";
      throw ValidationError(msg.str());
    }
    sum += s;
  }
  if (std::abs(sum - 1.0) > kSimplexTolerance) {
    std::ostringstream msg;
    msg.precision(10);
    msg << "scores sum to " << sum << ", not 1";
    throw ValidationError(msg.str());
  }
}

DisjointSet::DisjointSet(std::size_t n) : parent_(n), rank_(n, 0) {
  std::iota(parent_.begin(), parent_.end(), std::size_t{0});
}

std::size_t DisjointSet::find(std::size_t x) {
  std::size_t root = x;
  while (parent_[root] != root) root = parent_[root];
  while (parent_[x] != root) {
    const std::size_t next = parent_[x];
    parent_[x] = root;
    x = next;
  }
  return root;
}

bool DisjointSet::unite(std::size_t a, std::size_t b) {
  a = find(a);
  b = find(b);
  if (a == b) return false;
  if (rank_[a] < rank_[b]) std::swap(a, b);
  parent_[b] = a;
  if (rank_[a] == rank_[b]) ++rank_[a];
  return true;
}

std::vector<ObservationGroup> partition_detections(std::span<const Detection> detections,
                                                   double cluster_iou) {
  check_threshold(cluster_iou);
  const std::size_t n = detections.size();
  DisjointSet sets(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (iou(detections[i].box, detections[j].box) >= cluster_iou) sets.unite(i, j);
    }
  }

  // Scanning in index order makes group order follow each group's smallest
  // member, and keeps members ascending.
  std::vector<ObservationGroup> groups;
  std::vector<std::size_t> group_of_root(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t root = sets.find(i);
    if (group_of_root[root] == n) {
      group_of_root[root] = groups.size();
      groups.emplace_back();
    }
    groups[group_of_root[root]].members.push_back(i);
  }
  return groups;
}

std::vector<ObservationGroup> connected_components_bruteforce(
    std::span<const Detection> detections, double cluster_iou) {
  check_threshold(cluster_iou);
  const std::size_t n = detections.size();
  std::vector<std::vector<bool>> adjacent(n, std::vector<bool>(n, false));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      adjacent[i][j] = i != j && iou(detections[i].box, detections[j].box) >= cluster_iou;
    }
  }

  std::vector<bool> visited(n, false);
  std::vector<ObservationGroup> groups;
  for (std::size_t start = 0; start < n; ++start) {
    if (visited[start]) continue;
    ObservationGroup group;
    std::queue<std::size_t> frontier;
    frontier.push(start);
    visited[start] = true;
    while (!frontier.empty()) {
      const std::size_t u = frontier.front();
      frontier.pop();
      group.members.push_back(u);
      for (std::size_t v = 0; v < n; ++v) {
        if (adjacent[u][v] && !visited[v]) {
          visited[v] = true;
          frontier.push(v);
        }
      }
    }
    std::sort(group.members.begin(), group.members.end());
    groups.push_back(std::move(group));
  }
  return groups;
}

}  // namespace osdet
