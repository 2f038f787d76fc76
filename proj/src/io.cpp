#include "osdet/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"
#include "osdet/error.hpp"

namespace osdet::io {

namespace {

using json = nlohmann::json;

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    // Also covers out_of_range from numeric literals that overflow a double.
    throw ParseError(std::string("malformed JSON: ") + e.what());
  }
}

const json& field(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) throw SchemaError(where + ": expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(where + ": missing field '" + key + "'");
  return *it;
}

const json& array(const json& value, const std::string& where) {
  if (!value.is_array()) throw SchemaError(where + ": expected an array");
  return value;
}

double number(const json& value, const std::string& where) {
  if (!value.is_number()) throw SchemaError(where + ": expected a number");
  return value.get<double>();
}

long long integer(const json& value, const std::string& where) {
  if (!value.is_number_integer()) throw SchemaError(where + ": expected an integer");
  return value.get<long long>();
}

std::string string_value(const json& value, const std::string& where) {
  if (!value.is_string()) throw SchemaError(where + ": expected a string");
  return value.get<std::string>();
}

int class_count_of(const json& root) {
  const long long k = integer(field(root, "class_count", "document"), "class_count");
  if (k < 1 || k > 1'000'000) throw ValidationError("class_count must be >= 1");
  return static_cast<int>(k);
}

std::vector<double> number_array(const json& value, const std::string& where) {
  std::vector<double> out;
  for (std::size_t i = 0; i < array(value, where).size(); ++i) {
    out.push_back(number(value[i], where + "[" + std::to_string(i) + "]"));
  }
  return out;
}

BoundingBox box_from(const json& value, const std::string& where) {
  const auto c = number_array(value, where);
  if (c.size() != 4) throw SchemaError(where + ": bbox must have 4 elements");
  try {
    return {c[0], c[1], c[2], c[3]};
  } catch (const ValidationError& e) {
    throw ValidationError(where + ": " + e.what());
  }
}

json box_to(const BoundingBox& b) { return json(b.to_array()); }

std::string image_where(std::size_t index, const std::string& image_id) {
  return "images[" + std::to_string(index) + "] (image_id '" + image_id + "')";
}

std::string image_id_of(const json& image, std::size_t index) {
  return string_value(field(image, "image_id", "images[" + std::to_string(index) + "]"),
                      "images[" + std::to_string(index) + "].image_id");
}

void check_unique(std::set<std::string>& seen, const std::string& id) {
  if (!seen.insert(id).second) throw ValidationError("duplicate image_id '" + id + "'");
}

void check_scores(const std::vector<double>& scores, int class_count, const std::string& where) {
  if (scores.size() != static_cast<std::size_t>(class_count) + 1) {
    throw SchemaError(where + ": scores has " + std::to_string(scores.size()) +
                      " entries, expected class_count + 1 = " + std::to_string(class_count + 1));
  }
}

void check_detection(const Detection& d, int class_count, const std::string& where) {
  check_scores(d.scores, class_count, where);
  try {
    validate_detection(d);
  } catch (const ValidationError& e) {
    throw ValidationError(where + ": " + e.what());
  }
}

void check_label(int label, int class_count, const std::string& where) {
  if (label < 0 || label > class_count) {
    throw ValidationError(where + ": label " + std::to_string(label) + " outside [0, " +
                          std::to_string(class_count) + "]");
  }
}

std::string detection_where(const std::string& image, std::size_t pass, std::size_t det) {
  return image + " pass " + std::to_string(pass) + " detection " + std::to_string(det);
}

}  // namespace

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw IoError("failed reading '" + path.string() + "'");
  return buffer.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

// ---------------------------------------------------------------- detections

DetectionFile parse_detections(const std::string& text) {
  const json root = parse_json(text);
  DetectionFile file;
  file.class_count = class_count_of(root);
  if (root.contains("class_names")) {
    const json& names = array(root["class_names"], "class_names");
    for (std::size_t i = 0; i < names.size(); ++i) {
      file.class_names.push_back(string_value(names[i], "class_names[" + std::to_string(i) + "]"));
    }
  }
  const json& images = array(field(root, "images", "document"), "images");
  for (std::size_t i = 0; i < images.size(); ++i) {
    DetectionImage image;
    image.image_id = image_id_of(images[i], i);
    const std::string where = image_where(i, image.image_id);
    const json& passes = array(field(images[i], "passes", where), where + ".passes");
    for (std::size_t p = 0; p < passes.size(); ++p) {
      const json& dets = array(passes[p], where + " pass " + std::to_string(p));
      auto& out = image.passes.emplace_back();
      for (std::size_t d = 0; d < dets.size(); ++d) {
        const std::string dw = detection_where(where, p, d);
        Detection det;
        det.box = box_from(field(dets[d], "bbox", dw), dw + ".bbox");
        det.scores = number_array(field(dets[d], "scores", dw), dw + ".scores");
        det.pass_index = static_cast<int>(p);
        check_scores(det.scores, file.class_count, dw);
        out.push_back(std::move(det));
      }
    }
    file.images.push_back(std::move(image));
  }
  validate(file);
  return file;
}

void validate(const DetectionFile& file) {
  if (file.class_count < 1) throw ValidationError("class_count must be >= 1");
  if (!file.class_names.empty() &&
      file.class_names.size() != static_cast<std::size_t>(file.class_count) + 1) {
    throw ValidationError("class_names must have class_count + 1 entries");
  }
  std::set<std::string> seen;
  for (std::size_t i = 0; i < file.images.size(); ++i) {
    const DetectionImage& image = file.images[i];
    check_unique(seen, image.image_id);
    const std::string where = image_where(i, image.image_id);
    for (std::size_t p = 0; p < image.passes.size(); ++p) {
      for (std::size_t d = 0; d < image.passes[p].size(); ++d) {
        const Detection& det = image.passes[p][d];
        const std::string dw = detection_where(where, p, d);
        check_detection(det, file.class_count, dw);
        if (det.pass_index != static_cast<int>(p)) {
          throw ValidationError(dw + ": pass_index does not match its pass");
        }
      }
    }
  }
}

std::string format_detections(const DetectionFile& file) {
  json root;
  root["class_count"] = file.class_count;
  if (!file.class_names.empty()) root["class_names"] = file.class_names;
  json images = json::array();
  for (const DetectionImage& image : file.images) {
    json passes = json::array();
    for (const auto& pass : image.passes) {
      json dets = json::array();
      for (const Detection& d : pass) {
        dets.push_back({{"bbox", box_to(d.box)}, {"scores", d.scores}});
      }
      passes.push_back(std::move(dets));
    }
    images.push_back({{"image_id", image.image_id}, {"passes", std::move(passes)}});
  }
  root["images"] = std::move(images);
  return root.dump(1) + "\n";
}

DetectionFile load_detections(const std::filesystem::path& path) {
  return parse_detections(read_text(path));
}

void save_detections(const DetectionFile& file, const std::filesystem::path& path) {
  validate(file);
  write_text(path, format_detections(file));
}

// -------------------------------------------------------------- ground truth

GroundTruthFile parse_ground_truth(const std::string& text) {
  const json root = parse_json(text);
  GroundTruthFile file;
  file.class_count = class_count_of(root);
  const json& images = array(field(root, "images", "document"), "images");
  for (std::size_t i = 0; i < images.size(); ++i) {
    GroundTruthImage image;
    image.image_id = image_id_of(images[i], i);
    const std::string where = image_where(i, image.image_id);
    const json& objects = array(field(images[i], "objects", where), where + ".objects");
    for (std::size_t o = 0; o < objects.size(); ++o) {
      const std::string ow = where + " object " + std::to_string(o);
      GroundTruthObject obj;
      obj.box = box_from(field(objects[o], "bbox", ow), ow + ".bbox");
      const long long label = integer(field(objects[o], "label", ow), ow + ".label");
      if (label < 0 || label > file.class_count) {
        throw ValidationError(ow + ": label " + std::to_string(label) + " outside [0, " +
                              std::to_string(file.class_count) + "]");
      }
      obj.label = static_cast<int>(label);
      image.objects.push_back(obj);
    }
    file.images.push_back(std::move(image));
  }
  validate(file);
  return file;
}

void validate(const GroundTruthFile& file) {
  if (file.class_count < 1) throw ValidationError("class_count must be >= 1");
  std::set<std::string> seen;
  for (std::size_t i = 0; i < file.images.size(); ++i) {
    check_unique(seen, file.images[i].image_id);
    for (std::size_t o = 0; o < file.images[i].objects.size(); ++o) {
      check_label(file.images[i].objects[o].label, file.class_count,
                  image_where(i, file.images[i].image_id) + " object " + std::to_string(o));
    }
  }
}

std::string format_ground_truth(const GroundTruthFile& file) {
  json images = json::array();
  for (const GroundTruthImage& image : file.images) {
    json objects = json::array();
    for (const GroundTruthObject& o : image.objects) {
      objects.push_back({{"bbox", box_to(o.box)}, {"label", o.label}});
    }
    images.push_back({{"image_id", image.image_id}, {"objects", std::move(objects)}});
  }
  json root;
  root["class_count"] = file.class_count;
  root["images"] = std::move(images);
  return root.dump(1) + "\n";
}

GroundTruthFile load_ground_truth(const std::filesystem::path& path) {
  return parse_ground_truth(read_text(path));
}

void save_ground_truth(const GroundTruthFile& file, const std::filesystem::path& path) {
  validate(file);
  write_text(path, format_ground_truth(file));
}

// -------------------------------------------------------------- observations

ObservationFile parse_observations(const std::string& text) {
  const json root = parse_json(text);
  ObservationFile file;
  file.class_count = class_count_of(root);
  file.cluster_iou = number(field(root, "cluster_iou", "document"), "cluster_iou");
  if (!(file.cluster_iou > 0.0 && file.cluster_iou <= 1.0)) {
    throw ValidationError("cluster_iou must lie in (0, 1]");
  }
  const json& images = array(field(root, "images", "document"), "images");
  std::set<std::string> seen;
  for (std::size_t i = 0; i < images.size(); ++i) {
    ObservationImage image;
    image.image_id = image_id_of(images[i], i);
    check_unique(seen, image.image_id);
    const std::string where = image_where(i, image.image_id);
    const json& list = array(field(images[i], "observations", where), where + ".observations");
    for (std::size_t n = 0; n < list.size(); ++n) {
      const std::string ow = where + " observation " + std::to_string(n);
      const json& item = list[n];
      Observation obs;
      obs.fused_scores = number_array(field(item, "fused_scores", ow), ow + ".fused_scores");
      check_scores(obs.fused_scores, file.class_count, ow);
      Detection probe{obs.fused_scores, {}, 0};
      check_detection(probe, file.class_count, ow);
      obs.entropy = number(field(item, "entropy", ow), ow + ".entropy");
      if (!(obs.entropy >= 0.0) || !std::isfinite(obs.entropy)) {
        throw ValidationError(ow + ": entropy must be finite and >= 0");
      }
      obs.fused_box = box_from(field(item, "fused_box", ow), ow + ".fused_box");
      const auto cov = number_array(field(item, "box_covariance", ow), ow + ".box_covariance");
      if (cov.size() != 16) throw SchemaError(ow + ": box_covariance must have 16 elements");
      std::copy(cov.begin(), cov.end(), obs.box_covariance.begin());
      const long long label = integer(field(item, "winning_label", ow), ow + ".winning_label");
      if (label < 0 || label > file.class_count) {
        throw ValidationError(ow + ": winning_label outside [0, class_count]");
      }
      obs.winning_label = static_cast<int>(label);
      const long long count = integer(field(item, "detection_count", ow), ow + ".detection_count");
      if (count < 1 || count > 1'000'000'000) {
        throw ValidationError(ow + ": detection_count must be >= 1");
      }
      obs.detection_count = static_cast<int>(count);
      const json& low = field(item, "low_support", ow);
      if (!low.is_boolean()) throw SchemaError(ow + ".low_support: expected a boolean");
      obs.low_support = low.get<bool>();
      image.observations.push_back(std::move(obs));
    }
    file.images.push_back(std::move(image));
  }
  return file;
}

std::string format_observations(const ObservationFile& file) {
  json images = json::array();
  for (const ObservationImage& image : file.images) {
    json list = json::array();
    for (const Observation& o : image.observations) {
      list.push_back({{"fused_scores", o.fused_scores},
                      {"entropy", o.entropy},
                      {"fused_box", box_to(o.fused_box)},
                      {"box_covariance", o.box_covariance},
                      {"winning_label", o.winning_label},
                      {"detection_count", o.detection_count},
                      {"low_support", o.low_support}});
    }
    images.push_back({{"image_id", image.image_id}, {"observations", std::move(list)}});
  }
  json root;
  root["class_count"] = file.class_count;
  root["cluster_iou"] = file.cluster_iou;
  root["images"] = std::move(images);
  return root.dump(1) + "\n";
}

ObservationFile load_observations(const std::filesystem::path& path) {
  return parse_observations(read_text(path));
}

void save_observations(const ObservationFile& file, const std::filesystem::path& path) {
  write_text(path, format_observations(file));
}

bool is_observation_file(const std::filesystem::path& path) {
  const json root = parse_json(read_text(path));
  return root.is_object() && root.contains("cluster_iou");
}

// ------------------------------------------------------------ simulator config

SimulatorConfig parse_simulator_config(const std::string& text) {
  const json root = parse_json(text);
  if (!root.is_object()) throw SchemaError("simulator config must be a JSON object");
  SimulatorConfig c;
  const auto pair_of = [](const json& v, const std::string& key) {
    const auto values = number_array(v, key);
    if (values.size() != 2) throw SchemaError(key + ": expected 2 elements");
    return values;
  };
  const auto as_int = [](const json& v, const std::string& key) {
    const long long x = integer(v, key);
    if (x < -1'000'000'000 || x > 1'000'000'000) throw ValidationError(key + ": out of range");
    return static_cast<int>(x);
  };
  for (const auto& [key, value] : root.items()) {
    if (key == "image_size") {
      const auto v = pair_of(value, key);
      c.image_width = static_cast<int>(v[0]);
      c.image_height = static_cast<int>(v[1]);
    } else if (key == "box_size_range") {
      const auto v = pair_of(value, key);
      c.min_box_size = v[0];
      c.max_box_size = v[1];
    } else if (key == "num_known_objects") {
      c.num_known_objects = as_int(value, key);
    } else if (key == "num_unknown_objects") {
      c.num_unknown_objects = as_int(value, key);
    } else if (key == "class_count") {
      c.class_count = as_int(value, key);
    } else if (key == "passes") {
      c.passes = as_int(value, key);
    } else if (key == "confusion_size") {
      c.confusion_size = as_int(value, key);
    } else if (key == "p_det") {
      c.p_det = number(value, key);
    } else if (key == "sigma_box") {
      c.sigma_box = number(value, key);
    } else if (key == "alpha_hi") {
      c.alpha_hi = number(value, key);
    } else if (key == "alpha_lo") {
      c.alpha_lo = number(value, key);
    } else if (key == "clutter_rate") {
      c.clutter_rate = number(value, key);
    } else if (key == "seed") {
      if (!value.is_number_unsigned()) throw SchemaError("seed: expected a non-negative integer");
      c.seed = value.get<std::uint64_t>();
    } else {
      throw SchemaError("unknown simulator config field '" + key + "'");
    }
  }
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ValidationError(e.what());
  }
  return c;
}

SimulatorConfig load_simulator_config(const std::filesystem::path& path) {
  return parse_simulator_config(read_text(path));
}

// ------------------------------------------------------------------- results

std::string format_results(const std::vector<CurvePoint>& points) {
  std::string out = "theta,tp,fp,fn,abs_ose,precision,recall,f1\n";
  char line[256];
  for (const CurvePoint& p : points) {
    std::snprintf(line, sizeof line, "%.6f,%lld,%lld,%lld,%lld,%.6f,%.6f,%.6f\n", p.theta,
                  static_cast<long long>(p.counts.tp), static_cast<long long>(p.counts.fp),
                  static_cast<long long>(p.counts.fn), static_cast<long long>(p.counts.abs_ose),
                  p.precision, p.recall, p.f1);
    out += line;
  }
  return out;
}

std::vector<CurvePoint> parse_results(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "theta,tp,fp,fn,abs_ose,precision,recall,f1") {
    throw ParseError("results CSV: unexpected header");
  }
  std::vector<CurvePoint> points;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream cells_in(line);
    for (std::string cell; std::getline(cells_in, cell, ',');) cells.push_back(cell);
    if (cells.size() != 8) throw ParseError("results CSV row " + std::to_string(row) + ": expected 8 fields");
    const auto real = [&](const std::string& s) {
      double v = 0.0;
      const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc{} || end != s.data() + s.size()) {
        throw ParseError("results CSV row " + std::to_string(row) + ": bad number '" + s + "'");
      }
      return v;
    };
    const auto whole = [&](const std::string& s) {
      long long v = 0;
      const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc{} || end != s.data() + s.size()) {
        throw ParseError("results CSV row " + std::to_string(row) + ": bad integer '" + s + "'");
      }
      return static_cast<std::int64_t>(v);
    };
    CurvePoint p;
    p.theta = real(cells[0]);
    p.counts = {whole(cells[1]), whole(cells[2]), whole(cells[3]), whole(cells[4])};
    p.precision = real(cells[5]);
    p.recall = real(cells[6]);
    p.f1 = real(cells[7]);
    points.push_back(p);
  }
  return points;
}

void save_results(const std::vector<CurvePoint>& points, const std::filesystem::path& path) {
  write_text(path, format_results(points));
}

// -------------------------------------------------------------------- scenes

std::vector<Scene> join_scenes(const DetectionFile& detections, const GroundTruthFile& ground_truth) {
  if (detections.class_count != ground_truth.class_count) {
    throw ValidationError("detection and ground-truth files disagree on class_count");
  }
  std::map<std::string, const GroundTruthImage*> truth_by_id;
  for (const GroundTruthImage& image : ground_truth.images) truth_by_id[image.image_id] = &image;

  std::vector<Scene> scenes;
  std::set<std::string> used;
  for (const DetectionImage& image : detections.images) {
    const auto it = truth_by_id.find(image.image_id);
    if (it == truth_by_id.end()) {
      throw ValidationError("no ground truth for image_id '" + image.image_id + "'");
    }
    scenes.push_back({image.image_id, it->second->objects, image.passes});
    used.insert(image.image_id);
  }
  for (const GroundTruthImage& image : ground_truth.images) {
    if (!used.count(image.image_id)) scenes.push_back({image.image_id, image.objects, {}});
  }
  return scenes;
}

DetectionFile detections_from_scenes(const std::vector<Scene>& scenes, int class_count) {
  DetectionFile file;
  file.class_count = class_count;
  for (const Scene& s : scenes) file.images.push_back({s.image_id, s.passes});
  return file;
}

GroundTruthFile ground_truth_from_scenes(const std::vector<Scene>& scenes, int class_count) {
  GroundTruthFile file;
  file.class_count = class_count;
  for (const Scene& s : scenes) file.images.push_back({s.image_id, s.ground_truth});
  return file;
}

}  // namespace osdet::io
