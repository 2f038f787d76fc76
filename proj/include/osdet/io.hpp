#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "osdet/evaluation.hpp"
#include "osdet/fusion.hpp"
#include "osdet/simulator.hpp"

namespace osdet::io {

// File formats (JSON, UTF-8). Boxes are [x1, y1, x2, y2]; score vectors have
// class_count + 1 entries with index 0 reserved for "unknown".
//
// Detections:
//   {"class_count": k, "class_names": [...k+1 strings, optional...],
//    "images": [{"image_id": "...", "passes": [[{"bbox": [...], "scores": [...]}, ...], ...]}]}
// Ground truth:
//   {"class_count": k, "images": [{"image_id": "...", "objects": [{"bbox": [...], "label": 3}]}]}
// Fused observations:
//   {"class_count": k, "cluster_iou": 0.95,
//    "images": [{"image_id": "...", "observations": [{"fused_scores": [...], "entropy": h,
//      "fused_box": [...], "box_covariance": [16 values, row-major], "winning_label": 3,
//      "detection_count": 7, "low_support": false}]}]}
// Sweep results: CSV with header theta,tp,fp,fn,abs_ose,precision,recall,f1.

struct DetectionImage {
  std::string image_id;
  std::vector<std::vector<Detection>> passes;

  friend bool operator==(const DetectionImage&, const DetectionImage&) = default;
};

struct DetectionFile {
  int class_count = 0;
  std::vector<std::string> class_names;  // empty when absent
  std::vector<DetectionImage> images;

  friend bool operator==(const DetectionFile&, const DetectionFile&) = default;
};

struct GroundTruthImage {
  std::string image_id;
  std::vector<GroundTruthObject> objects;

  friend bool operator==(const GroundTruthImage&, const GroundTruthImage&) = default;
};

struct GroundTruthFile {
  int class_count = 0;
  std::vector<GroundTruthImage> images;

  friend bool operator==(const GroundTruthFile&, const GroundTruthFile&) = default;
};

struct ObservationImage {
  std::string image_id;
  std::vector<Observation> observations;  // members are not serialised
};

struct ObservationFile {
  int class_count = 0;
  double cluster_iou = kDefaultClusterIou;
  std::vector<ObservationImage> images;
};

// Parsers throw ParseError, SchemaError or ValidationError; messages name
// the offending image, pass and detection. Loaders add IoError.
DetectionFile parse_detections(const std::string& text);
GroundTruthFile parse_ground_truth(const std::string& text);
ObservationFile parse_observations(const std::string& text);
SimulatorConfig parse_simulator_config(const std::string& text);

DetectionFile load_detections(const std::filesystem::path& path);
GroundTruthFile load_ground_truth(const std::filesystem::path& path);
ObservationFile load_observations(const std::filesystem::path& path);
SimulatorConfig load_simulator_config(const std::filesystem::path& path);

/// True when the document at path holds fused observations rather than raw
/// per-pass detections.
bool is_observation_file(const std::filesystem::path& path);

std::string format_detections(const DetectionFile& file);
std::string format_ground_truth(const GroundTruthFile& file);
std::string format_observations(const ObservationFile& file);

void save_detections(const DetectionFile& file, const std::filesystem::path& path);
void save_ground_truth(const GroundTruthFile& file, const std::filesystem::path& path);
void save_observations(const ObservationFile& file, const std::filesystem::path& path);

/// Throws ValidationError if the in-memory structure breaks a file invariant.
void validate(const DetectionFile& file);
void validate(const GroundTruthFile& file);

std::string format_results(const std::vector<CurvePoint>& points);
std::vector<CurvePoint> parse_results(const std::string& text);
void save_results(const std::vector<CurvePoint>& points, const std::filesystem::path& path);

/// Joins detections and ground truth by image_id, in detection-file order;
/// ground-truth images without detections are appended with no passes.
std::vector<Scene> join_scenes(const DetectionFile& detections, const GroundTruthFile& ground_truth);

DetectionFile detections_from_scenes(const std::vector<Scene>& scenes, int class_count);
GroundTruthFile ground_truth_from_scenes(const std::vector<Scene>& scenes, int class_count);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace osdet::io
