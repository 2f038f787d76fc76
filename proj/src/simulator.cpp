#include "osdet/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "osdet/error.hpp"
#include "osdet/parallel.hpp"

namespace osdet {

namespace {

constexpr int kPlacementAttempts = 1000;
constexpr std::uint32_t kGroundTruthLane = 0xFFFFFFFFu;

std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream, std::uint32_t lane) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    lane};
  return std::mt19937_64(seq);
}

struct SceneObject {
  GroundTruthObject truth;
  std::vector<int> confusion_set;  // empty for known objects
};

BoundingBox random_box(const SimulatorConfig& c, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> side(c.min_box_size, c.max_box_size);
  const double w = side(rng);
  const double h = side(rng);
  std::uniform_real_distribution<double> x(0.0, c.image_width - w);
  std::uniform_real_distribution<double> y(0.0, c.image_height - h);
  const double x1 = x(rng);
  const double y1 = y(rng);
  return {x1, y1, x1 + w, y1 + h};
}

std::vector<SceneObject> place_objects(const SimulatorConfig& c, std::uint64_t stream) {
  auto rng = make_engine(c.seed, stream, kGroundTruthLane);
  std::uniform_int_distribution<int> known_label(1, c.class_count);
  std::vector<int> known_classes(static_cast<std::size_t>(c.class_count));
  std::iota(known_classes.begin(), known_classes.end(), 1);

  std::vector<SceneObject> objects;
  const int total = c.num_known_objects + c.num_unknown_objects;
  for (int i = 0; i < total; ++i) {
    const bool known = i < c.num_known_objects;
    bool placed = false;
    for (int attempt = 0; attempt < kPlacementAttempts && !placed; ++attempt) {
      const BoundingBox box = random_box(c, rng);
      placed = std::none_of(objects.begin(), objects.end(), [&](const SceneObject& o) {
        return iou(o.truth.box, box) >= kPlacementIouLimit;
      });
      if (placed) {
        SceneObject obj;
        obj.truth.box = box;
        if (known) {
          obj.truth.label = known_label(rng);
        } else {
          obj.truth.label = 0;
          std::sample(known_classes.begin(), known_classes.end(),
                      std::back_inserter(obj.confusion_set), c.confusion_size, rng);
        }
        objects.push_back(std::move(obj));
      }
    }
    if (!placed) {
      throw SimulationError("cannot place " + std::to_string(total) +
                            " non-overlapping objects in scene " + std::to_string(stream));
    }
  }
  return objects;
}

std::vector<double> dirichlet(int size, int target, double alpha_target, double alpha_rest,
                              std::mt19937_64& rng) {
  std::vector<double> s(static_cast<std::size_t>(size));
  double total = 0.0;
  for (int j = 0; j < size; ++j) {
    std::gamma_distribution<double> g(j == target ? alpha_target : alpha_rest, 1.0);
    s[j] = g(rng);
    total += s[j];
  }
  if (!(total > 0.0)) {
    // Every draw underflowed; fall back to the mode.
    std::fill(s.begin(), s.end(), 0.0);
    s[target >= 0 ? target : 0] = 1.0;
    return s;
  }
  for (double& v : s) v /= total;
  return s;
}

BoundingBox jitter(const BoundingBox& b, const SimulatorConfig& c, std::mt19937_64& rng) {
  std::normal_distribution<double> noise(0.0, c.sigma_box);
  const auto clamp_x = [&](double v) { return std::clamp(v, 0.0, double(c.image_width)); };
  const auto clamp_y = [&](double v) { return std::clamp(v, 0.0, double(c.image_height)); };
  double x1 = b.x1(), y1 = b.y1(), x2 = b.x2(), y2 = b.y2();
  if (c.sigma_box > 0.0) {
    x1 = clamp_x(x1 + noise(rng));
    y1 = clamp_y(y1 + noise(rng));
    x2 = clamp_x(x2 + noise(rng));
    y2 = clamp_y(y2 + noise(rng));
  }
  return {std::min(x1, x2), std::min(y1, y2), std::max(x1, x2), std::max(y1, y2)};
}

}  // namespace

void SimulatorConfig::validate() const {
  const auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("simulator config: ") + what);
  };
  require(image_width > 0 && image_height > 0, "image size must be positive");
  require(num_known_objects >= 0 && num_unknown_objects >= 0, "object counts must be >= 0");
  require(class_count >= 1, "class_count must be >= 1");
  require(passes >= 1, "passes must be >= 1");
  require(p_det >= 0.0 && p_det <= 1.0, "p_det must lie in [0, 1]");
  require(sigma_box >= 0.0 && std::isfinite(sigma_box), "sigma_box must be >= 0");
  require(alpha_lo > 0.0 && alpha_hi > alpha_lo && std::isfinite(alpha_hi),
          "alpha_hi > alpha_lo > 0 required");
  require(confusion_size >= 2 && confusion_size <= class_count,
          "confusion_size must lie in [2, class_count]");
  require(clutter_rate >= 0.0 && std::isfinite(clutter_rate), "clutter_rate must be >= 0");
  require(min_box_size > 0.0 && max_box_size >= min_box_size, "box size range is invalid");
  require(max_box_size <= image_width && max_box_size <= image_height,
          "boxes must fit inside the image");
}

std::string scene_image_id(std::uint64_t stream_id) {
  std::string digits = std::to_string(stream_id);
  if (digits.size() < 5) digits.insert(0, 5 - digits.size(), '0');
  return "scene_" + digits;
}

Scene simulate_scene(const SimulatorConfig& config, std::uint64_t stream_id) {
  config.validate();
  const std::vector<SceneObject> objects = place_objects(config, stream_id);
  const int score_len = config.class_count + 1;

  Scene scene;
  scene.image_id = scene_image_id(stream_id);
  for (const SceneObject& o : objects) scene.ground_truth.push_back(o.truth);

  scene.passes.resize(static_cast<std::size_t>(config.passes));
  for (int p = 0; p < config.passes; ++p) {
    auto rng = make_engine(config.seed, stream_id, static_cast<std::uint32_t>(p));
    std::bernoulli_distribution detected(config.p_det);
    auto& out = scene.passes[p];
    for (const SceneObject& o : objects) {
      if (!detected(rng)) continue;
      int target = o.truth.label;
      if (!o.confusion_set.empty()) {
        std::uniform_int_distribution<std::size_t> pick(0, o.confusion_set.size() - 1);
        target = o.confusion_set[pick(rng)];
      }
      Detection d;
      d.box = jitter(o.truth.box, config, rng);
      d.scores = dirichlet(score_len, target, config.alpha_hi, config.alpha_lo, rng);
      d.pass_index = p;
      out.push_back(std::move(d));
    }
    std::poisson_distribution<int> clutter(config.clutter_rate);
    const int n_clutter = config.clutter_rate > 0.0 ? clutter(rng) : 0;
    for (int i = 0; i < n_clutter; ++i) {
      Detection d;
      d.box = random_box(config, rng);
      d.scores = dirichlet(score_len, -1, 1.0, 1.0, rng);
      d.pass_index = p;
      out.push_back(std::move(d));
    }
  }
  return scene;
}

std::vector<Scene> simulate_dataset(const SimulatorConfig& config, int num_scenes,
                                    unsigned workers) {
  if (num_scenes < 1) throw std::invalid_argument("num_scenes must be >= 1");
  config.validate();
  std::vector<Scene> scenes(static_cast<std::size_t>(num_scenes));
  parallel_for(scenes.size(), workers,
               [&](std::size_t i) { scenes[i] = simulate_scene(config, i); });
  return scenes;
}

}  // namespace osdet
