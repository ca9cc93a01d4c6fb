// Copyright 2026 The derain3d Authors
// SPDX-License-Identifier: Apache-2.0
//
// JSON documents for scenes, calibrations, rain and filter configs, and the
// CSV results table. Readers validate against the schema and report the JSON
// pointer of the first offending value.

#pragma once

#include <cstdio>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "derain/annotate.hpp"
#include "derain/eval.hpp"
#include "derain/filters.hpp"
#include "derain/rainsim.hpp"
#include "derain/scene.hpp"

namespace derain {

using Json = nlohmann::json;

namespace detail {

[[noreturn]] inline void schema_error(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::SchemaError, what, std::nullopt, path.empty() ? "/" : path);
}

/// Cursor into a JSON document that remembers its pointer for errors.
class JsonCursor {
 public:
  JsonCursor(const Json& j, std::string path) : j_(j), path_(std::move(path)) {}

  const Json& value() const { return j_; }
  const std::string& path() const { return path_; }

  bool has(const char* key) const { return j_.is_object() && j_.contains(key); }

  JsonCursor at(const char* key) const {
    if (!j_.is_object()) schema_error(path_, "expected an object");
    if (!j_.contains(key)) schema_error(path_ + "/" + key, "missing required key");
    return {j_.at(key), path_ + "/" + key};
  }

  JsonCursor at(std::size_t i) const { return {j_.at(i), path_ + "/" + std::to_string(i)}; }

  std::size_t array_size() const {
    if (!j_.is_array()) schema_error(path_, "expected an array");
    return j_.size();
  }

  double number() const {
    if (!j_.is_number()) schema_error(path_, "expected a number");
    return j_.get<double>();
  }

  long long integer() const {
    if (!j_.is_number_integer()) schema_error(path_, "expected an integer");
    return j_.get<long long>();
  }

  bool boolean() const {
    if (!j_.is_boolean()) schema_error(path_, "expected a boolean");
    return j_.get<bool>();
  }

  std::string string() const {
    if (!j_.is_string()) schema_error(path_, "expected a string");
    return j_.get<std::string>();
  }

  std::vector<double> numbers() const {
    std::vector<double> out(array_size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = at(i).number();
    return out;
  }

  Vec3 vec3() const {
    if (array_size() != 3) schema_error(path_, "expected 3 numbers");
    return {at(std::size_t{0}).number(), at(1).number(), at(2).number()};
  }

  Vec2 vec2() const {
    if (array_size() != 2) schema_error(path_, "expected 2 numbers");
    return {at(std::size_t{0}).number(), at(1).number()};
  }

 private:
  const Json& j_;
  std::string path_;
};

inline Json parse_json(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    schema_error("", std::string("malformed JSON: ") + e.what());
  }
}

inline Json vec_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

inline SemanticClass class_from(const JsonCursor& c) {
  const long long id = c.integer();
  if (id < 0 || id >= kNumClasses) schema_error(c.path(), "class_id must be in 0..7");
  return static_cast<SemanticClass>(id);
}

inline std::vector<Vec2> polygon_from(const JsonCursor& c) {
  std::vector<Vec2> poly(c.array_size());
  for (std::size_t i = 0; i < poly.size(); ++i) poly[i] = c.at(i).vec2();
  return poly;
}

inline Json polygon_json(const std::vector<Vec2>& poly) {
  Json arr = Json::array();
  for (const Vec2& v : poly) arr.push_back(Json::array({v.x(), v.y()}));
  return arr;
}

inline OrientedBox box_from(const JsonCursor& c) {
  OrientedBox b;
  b.center = c.at("center").vec3();
  b.half_extents = c.at("half_extents").vec3();
  b.yaw = c.has("yaw") ? c.at("yaw").number() : 0.0;
  return b;
}

inline Json box_json(const OrientedBox& b) {
  return Json{{"center", vec_json(b.center)},
              {"half_extents", vec_json(b.half_extents)},
              {"yaw", b.yaw}};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// SceneSpec

inline Json to_json(const SceneSpec& s) {
  Json boxes = Json::array();
  for (const SceneBox& b : s.boxes) {
    Json jb = detail::box_json(b.box);
    jb["class_id"] = static_cast<int>(b.class_id);
    jb["reflectance"] = b.reflectance;
    boxes.push_back(jb);
  }
  return Json{{"ground_plane",
               {{"normal", detail::vec_json(s.ground_plane.normal)},
                {"offset", s.ground_plane.offset}}},
              {"boxes", boxes},
              {"road_polygon", detail::polygon_json(s.road_polygon)},
              {"ground_reflectance", s.ground_reflectance}};
}

inline SceneSpec scene_from_json(const Json& j) {
  const detail::JsonCursor root(j, "");
  SceneSpec s;
  const auto gp = root.at("ground_plane");
  s.ground_plane.normal = gp.at("normal").vec3();
  s.ground_plane.offset = gp.at("offset").number();
  const auto boxes = root.at("boxes");
  for (std::size_t i = 0; i < boxes.array_size(); ++i) {
    const auto jb = boxes.at(i);
    SceneBox b;
    b.box = detail::box_from(jb);
    b.class_id = detail::class_from(jb.at("class_id"));
    b.reflectance = jb.has("reflectance") ? jb.at("reflectance").number() : 0.5;
    s.boxes.push_back(b);
  }
  s.road_polygon = detail::polygon_from(root.at("road_polygon"));
  s.ground_reflectance = root.has("ground_reflectance") ? root.at("ground_reflectance").number() : 0.3;
  validate_scene(s);
  return s;
}

inline SceneSpec read_scene_json(const std::string& text) {
  return scene_from_json(detail::parse_json(text));
}

// ---------------------------------------------------------------------------
// AnnotationScene

inline Json to_json(const AnnotationScene& s) {
  auto list = [](const std::vector<LabeledBox>& boxes) {
    Json arr = Json::array();
    for (const LabeledBox& b : boxes) {
      Json jb = detail::box_json(b.box);
      jb["class_id"] = static_cast<int>(b.class_id);
      arr.push_back(jb);
    }
    return arr;
  };
  return Json{{"sprinkler_boxes", list(s.sprinkler_boxes)},
              {"object_boxes", list(s.object_boxes)},
              {"road_polygon", detail::polygon_json(s.road_polygon)}};
}

inline AnnotationScene annotation_scene_from_json(const Json& j) {
  const detail::JsonCursor root(j, "");
  AnnotationScene s;
  auto read_list = [](const detail::JsonCursor& c, std::vector<LabeledBox>& out) {
    for (std::size_t i = 0; i < c.array_size(); ++i) {
      const auto jb = c.at(i);
      out.push_back(LabeledBox{detail::box_from(jb), detail::class_from(jb.at("class_id"))});
    }
  };
  read_list(root.at("sprinkler_boxes"), s.sprinkler_boxes);
  read_list(root.at("object_boxes"), s.object_boxes);
  s.road_polygon = detail::polygon_from(root.at("road_polygon"));
  validate_annotation_scene(s);
  return s;
}

inline AnnotationScene read_annotation_scene_json(const std::string& text) {
  return annotation_scene_from_json(detail::parse_json(text));
}

// ---------------------------------------------------------------------------
// SensorCalibration

inline Json to_json(const SensorCalibration& c) {
  return Json{{"elevations", c.elevations}, {"azimuths", c.azimuths},
              {"r_min", c.r_min},           {"r_max", c.r_max},
              {"sensor_height", c.sensor_height}};
}

inline SensorCalibration calibration_from_json(const Json& j) {
  const detail::JsonCursor root(j, "");
  SensorCalibration c;
  c.elevations = root.at("elevations").numbers();
  c.azimuths = root.at("azimuths").numbers();
  c.r_min = root.has("r_min") ? root.at("r_min").number() : 0.0;
  c.r_max = root.at("r_max").number();
  c.sensor_height = root.has("sensor_height") ? root.at("sensor_height").number() : 0.0;
  validate_calibration(c);
  return c;
}

// ---------------------------------------------------------------------------
// RainConfig

inline Json to_json(const RainConfig& c) {
  return Json{{"rate", c.rate},
              {"d_min", c.d_min},
              {"d_max", c.d_max},
              {"n0", c.n0},
              {"beam_divergence", c.beam_divergence},
              {"rain_reflectance", c.rain_reflectance},
              {"occlude_returns", c.occlude_returns},
              {"seed", c.seed}};
}

inline RainConfig rain_config_from_json(const Json& j) {
  const detail::JsonCursor root(j, "");
  RainConfig c;
  c.rate = root.at("rate").number();
  if (root.has("d_min")) c.d_min = root.at("d_min").number();
  if (root.has("d_max")) c.d_max = root.at("d_max").number();
  if (root.has("n0")) c.n0 = root.at("n0").number();
  if (root.has("beam_divergence")) c.beam_divergence = root.at("beam_divergence").number();
  if (root.has("rain_reflectance")) c.rain_reflectance = root.at("rain_reflectance").number();
  if (root.has("occlude_returns")) c.occlude_returns = root.at("occlude_returns").boolean();
  if (root.has("seed")) {
    const auto s = root.at("seed");
    if (!s.value().is_number_unsigned()) detail::schema_error(s.path(), "expected unsigned integer");
    c.seed = s.value().get<std::uint64_t>();
  }
  validate_rain_config(c);
  return c;
}

// ---------------------------------------------------------------------------
// FilterParams: {"kind": "dsor", "k": 5, "s": 0.01, "r": 0.05}

inline Json to_json(const FilterParams& params) {
  return std::visit(
      [](const auto& p) -> Json {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, RorParams>) {
          return {{"kind", "ror"}, {"radius", p.radius}, {"min_neighbors", p.min_neighbors}};
        } else if constexpr (std::is_same_v<T, SorParams>) {
          return {{"kind", "sor"}, {"k", p.k}, {"s", p.s}};
        } else if constexpr (std::is_same_v<T, DrorParams>) {
          return {{"kind", "dror"},
                  {"alpha", p.alpha},
                  {"beta", p.beta},
                  {"k_min", p.k_min},
                  {"sr_min", p.sr_min}};
        } else {
          return {{"kind", "dsor"}, {"k", p.k}, {"s", p.s}, {"r", p.r}};
        }
      },
      params);
}

/// Accepts a bare parameter object or one wrapped as {"params": {...}} (the
/// shape the tuner writes).
inline FilterParams filter_params_from_json(const Json& j) {
  detail::JsonCursor root(j, "");
  if (root.has("params")) return filter_params_from_json(j.at("params"));
  const auto kind_cursor = root.at("kind");
  FilterKind kind;
  try {
    kind = parse_kind(kind_cursor.string());
  } catch (const Error&) {
    detail::schema_error(kind_cursor.path(), "kind must be one of ror, sor, dror, dsor");
  }
  auto integer = [&](const char* key) {
    const auto c = root.at(key);
    const long long v = c.integer();
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
      detail::schema_error(c.path(), "integer out of range");
    }
    return static_cast<int>(v);
  };
  auto number = [&](const char* key) { return root.at(key).number(); };
  FilterParams p;
  switch (kind) {
    case FilterKind::Ror: p = RorParams{number("radius"), integer("min_neighbors")}; break;
    case FilterKind::Sor: p = SorParams{integer("k"), number("s")}; break;
    case FilterKind::Dror:
      p = DrorParams{number("alpha"), number("beta"), integer("k_min"), number("sr_min")};
      break;
    case FilterKind::Dsor: p = DsorParams{integer("k"), number("s"), number("r")}; break;
  }
  validate_params(p);
  return p;
}

inline FilterParams read_filter_json(const std::string& text) {
  return filter_params_from_json(detail::parse_json(text));
}

// ---------------------------------------------------------------------------
// Results CSV: filter,rain_density,precision,recall,f1,rain_iou,time_ms
// Metrics in percent with two decimals, time in whole milliseconds.

inline constexpr const char* kResultsHeader = "filter,rain_density,precision,recall,f1,rain_iou,time_ms";

inline std::string write_results_csv(const ResultsTable& table) {
  std::string out = std::string(kResultsHeader) + "\n";
  char buf[256];
  for (const ResultRow& r : table.rows) {
    const MetricReport& m = r.metrics;
    std::snprintf(buf, sizeof buf, ",%.2f,%.2f,%.2f,%.2f,%lld\n", 100.0 * m.precision,
                  100.0 * m.recall, 100.0 * m.f1, 100.0 * m.rain_iou,
                  static_cast<long long>(std::llround(m.wall_time_ms)));
    out += r.filter + "," + r.rain_density + buf;
  }
  return out;
}

inline ResultsTable read_results_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kResultsHeader) {
    detail::schema_error("/0", "results CSV header mismatch");
  }
  ResultsTable table;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() != 7) detail::schema_error("/" + std::to_string(row), "expected 7 columns");
    ResultRow r;
    r.filter = cells[0];
    r.rain_density = cells[1];
    try {
      r.metrics.precision = std::stod(cells[2]) / 100.0;
      r.metrics.recall = std::stod(cells[3]) / 100.0;
      r.metrics.f1 = std::stod(cells[4]) / 100.0;
      r.metrics.rain_iou = std::stod(cells[5]) / 100.0;
      r.metrics.wall_time_ms = static_cast<double>(std::stoll(cells[6]));
    } catch (const std::exception&) {
      detail::schema_error("/" + std::to_string(row), "non-numeric metric");
    }
    table.rows.push_back(r);
  }
  return table;
}

}  // namespace derain
