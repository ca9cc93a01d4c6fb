// Copyright 2026 The derain3d Authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line frontend. run() is the whole program minus process setup so
// tests can drive it in-process. Exit codes: 0 success, 1 invalid input
// (missing files, malformed data), 2 usage error.

#pragma once

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "derain/derain.hpp"

namespace derain::cli {

namespace fs = std::filesystem;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline double density_rate(const std::string& density) {
  if (density == "heavy") return 50.0;
  if (density == "medium") return 25.0;
  if (density == "light") return 10.0;
  throw UsageError("--density must be heavy, medium or light (got '" + density + "')");
}

inline void require_file(const std::string& flag, const std::string& path) {
  if (!fs::is_regular_file(path)) {
    throw Error(ErrorCode::InvalidInput, flag + ": no such file '" + path + "'");
  }
}

/// Inline JSON when the value starts with '{', otherwise a path to a JSON file.
inline std::string json_argument(const std::string& flag, const std::string& value) {
  if (!value.empty() && value.front() == '{') return value;
  require_file(flag, value);
  return read_text_file(value);
}

inline std::string scan_stem(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "scan_%06zu", i);
  return buf;
}

/// Dataset layout: each immediate subdirectory of `root` is one rain-density
/// group; .bin files directly in `root` form a group named after `root`.
/// Every .bin needs a .label with the same stem. The clean/ and grid/
/// subdirectories written by `simulate` are skipped.
inline std::vector<BenchSample> load_dataset(const fs::path& root) {
  if (!fs::is_directory(root)) {
    throw Error(ErrorCode::InvalidInput, "--data: no such directory '" + root.string() + "'");
  }
  std::vector<BenchSample> out;
  auto load_group = [&](const fs::path& dir, const std::string& tag) {
    std::vector<fs::path> bins;
    for (const auto& e : fs::directory_iterator(dir)) {
      if (e.is_regular_file() && e.path().extension() == ".bin") bins.push_back(e.path());
    }
    std::sort(bins.begin(), bins.end());
    for (const fs::path& bin : bins) {
      fs::path label = bin;
      label.replace_extension(".label");
      require_file("--data", label.string());
      BenchSample s;
      s.data.cloud = read_cloud(read_file(bin));
      s.data.labels = read_labels(read_file(label));
      validate_labels(s.data.labels, s.data.cloud.size());
      s.density = tag;
      out.push_back(std::move(s));
    }
  };
  fs::path canonical = fs::weakly_canonical(root);
  load_group(root, canonical.filename().string());
  std::vector<fs::path> subdirs;
  for (const auto& e : fs::directory_iterator(root)) {
    const std::string name = e.path().filename().string();
    if (e.is_directory() && name != "clean" && name != "grid") subdirs.push_back(e.path());
  }
  std::sort(subdirs.begin(), subdirs.end());
  for (const fs::path& d : subdirs) load_group(d, d.filename().string());
  if (out.empty()) {
    throw Error(ErrorCode::EmptyDataset, "no .bin/.label pairs under '" + root.string() + "'");
  }
  return out;
}

inline void emit(std::ostream& out, const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    out << text;
  } else {
    write_text_file(path, text);
  }
}

// ---------------------------------------------------------------------------

struct SceneOpts {
  std::string name;
  bool annotation = false;
  double margin = 0.05;
  std::optional<double> sensor_height;
  std::string out;
};

inline void cmd_scene(const SceneOpts& o, std::ostream& out) {
  const SceneSpec spec = builtin_scene(o.name);
  Json j;
  if (o.annotation) {
    const double h = o.sensor_height.value_or(desk_calibration().sensor_height);
    j = to_json(annotation_scene_from(spec, h, o.margin));
  } else {
    j = to_json(spec);
  }
  emit(out, o.out, j.dump(2) + "\n");
}

struct SimulateOpts {
  std::string scene;
  std::string calib;
  std::string rain_config;
  std::optional<double> rate;
  std::string density;
  std::uint64_t seed = 0;
  double noise = 0.01;
  std::size_t count = 1;
  std::string out = ".";
  bool no_occlusion = false;
  bool emit_grid = false;
};

inline void cmd_simulate(const SimulateOpts& o, std::ostream& out) {
  if (o.rate && !o.density.empty()) throw UsageError("--rate and --density are exclusive");
  if (o.count == 0) throw UsageError("--count must be >= 1");
  if (!(o.noise >= 0.0)) throw UsageError("--noise must be >= 0");

  SceneSpec spec;
  if (fs::is_regular_file(o.scene)) {
    spec = read_scene_json(read_text_file(o.scene));
  } else {
    spec = builtin_scene(o.scene);
  }
  const SensorCalibration calib =
      o.calib.empty() ? desk_calibration()
                      : calibration_from_json(detail::parse_json(json_argument("--calib", o.calib)));
  RainConfig rain;
  if (!o.rain_config.empty()) {
    rain = rain_config_from_json(detail::parse_json(json_argument("--rain-config", o.rain_config)));
  }
  if (o.rate) rain.rate = *o.rate;
  if (!o.density.empty()) rain.rate = density_rate(o.density);
  if (o.no_occlusion) rain.occlude_returns = false;
  validate_rain_config(rain);

  const fs::path dir(o.out);
  std::size_t total_rain = 0;
  for (std::size_t i = 0; i < o.count; ++i) {
    const std::string stem = scan_stem(i);
    const ScanWithLabels clean =
        raycast_scene(spec, calib, o.noise, derive_seed(o.seed, "simulate/noise/" + stem));
    RainConfig cfg = rain;
    cfg.seed = derive_seed(o.seed, "simulate/rain/" + stem);
    const RainResult wet = inject_rain(clean.pgm, clean.labels, calib, cfg);
    total_rain += wet.injected;

    const LabeledCloud clean_pts = returned_points(clean.pgm, clean.labels);
    const LabeledCloud wet_pts = returned_points(wet.pgm, wet.labels);
    write_file(dir / "clean" / (stem + ".bin"), write_cloud(clean_pts.cloud));
    write_file(dir / "clean" / (stem + ".label"), write_labels(clean_pts.labels));
    write_file(dir / (stem + ".bin"), write_cloud(wet_pts.cloud));
    write_file(dir / (stem + ".label"), write_labels(wet_pts.labels));
    if (o.emit_grid) {
      const FlatScan flat = flatten(wet.pgm);
      write_file(dir / "grid" / (stem + ".bin"), write_cloud(flat.cloud));
      write_file(dir / "grid" / (stem + ".label"), write_labels(wet.labels));
      write_file(dir / "grid" / (stem + ".mask"), write_mask(flat.unreturned));
    }
  }
  out << "simulated " << o.count << " scan(s) at " << rain.rate << " mm/h, " << total_rain
      << " rain points -> " << dir.string() << "\n";
}

struct DerainOpts {
  std::string in;
  std::string filter;
  std::string mask_out;
  std::string out;
  std::string labels;
  std::string labels_out;
};

inline void cmd_derain(const DerainOpts& o, std::ostream& out) {
  require_file("--in", o.in);
  if (!o.labels.empty()) require_file("--labels", o.labels);
  if (!o.labels_out.empty() && o.labels.empty()) throw UsageError("--labels-out needs --labels");
  const FilterParams params = read_filter_json(json_argument("--filter", o.filter));
  const PointCloud cloud = read_cloud(read_file(o.in));
  LabelSet labels;
  if (!o.labels.empty()) {
    labels = read_labels(read_file(o.labels));
    validate_labels(labels, cloud.size());
  }

  const Mask keep = apply_filter(cloud, params);
  PointCloud kept;
  LabelSet kept_labels;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (!keep[i]) continue;
    kept.push_back(cloud.coords[i], cloud.intensity[i]);
    if (!labels.empty()) kept_labels.push_back(labels[i]);
  }
  if (!o.mask_out.empty()) write_file(o.mask_out, write_mask(keep));
  if (!o.out.empty()) write_file(o.out, write_cloud(kept));
  if (!o.labels_out.empty()) write_file(o.labels_out, write_labels(kept_labels));
  out << "kept " << kept.size() << " of " << cloud.size() << " points ("
      << kind_name(kind_of(params)) << ")\n";
}

struct AnnotateOpts {
  std::string in;
  std::string scene;
  std::string builtin;
  double margin = 0.05;
  std::optional<double> sensor_height;
  std::string out;
  std::uint64_t seed = 0;
  int iterations = 200;
  double threshold = 0.05;
  double tolerance = 0.1;
};

inline void cmd_annotate(const AnnotateOpts& o, std::ostream& out) {
  if (o.scene.empty() == o.builtin.empty()) throw UsageError("give exactly one of --scene, --builtin");
  require_file("--in", o.in);
  AnnotationScene scene;
  if (!o.scene.empty()) {
    scene = read_annotation_scene_json(json_argument("--scene", o.scene));
  } else {
    scene = annotation_scene_from(builtin_scene(o.builtin),
                                  o.sensor_height.value_or(desk_calibration().sensor_height),
                                  o.margin);
  }
  const PointCloud cloud = read_cloud(read_file(o.in));
  AnnotateConfig cfg;
  cfg.ransac = {o.iterations, o.threshold, derive_seed(o.seed, "annotate/ransac")};
  cfg.plane_tolerance = o.tolerance;
  const Annotation a = auto_annotate_with_plane(cloud, scene, cfg);
  write_file(o.out, write_labels(a.labels));
  std::size_t rain = std::count(a.labels.begin(), a.labels.end(), SemanticClass::Rain);
  out << "labeled " << a.labels.size() << " points, " << rain << " rain; plane n=("
      << a.plane.normal.x() << ", " << a.plane.normal.y() << ", " << a.plane.normal.z()
      << ") d=" << a.plane.offset << "\n";
}

struct TransferOpts {
  std::string src;
  std::string src_labels;
  std::string dst;
  std::string out;
};

inline void cmd_transfer(const TransferOpts& o, std::ostream& out) {
  require_file("--src", o.src);
  require_file("--src-labels", o.src_labels);
  require_file("--dst", o.dst);
  const PointCloud src = read_cloud(read_file(o.src));
  const LabelSet src_labels = read_labels(read_file(o.src_labels));
  const PointCloud dst = read_cloud(read_file(o.dst));
  const LabelSet labels = transfer_labels(src, src_labels, dst);
  write_file(o.out, write_labels(labels));
  out << "transferred labels to " << labels.size() << " points\n";
}

struct EvalOpts {
  std::vector<std::string> masks;
  std::vector<std::string> labels;
  std::string name = "filter";
  std::string density = "all";
  std::string out;
};

inline void cmd_eval(const EvalOpts& o, std::ostream& out) {
  if (o.masks.size() != o.labels.size()) throw UsageError("--mask and --labels must pair up");
  ConfusionCounts pooled;
  for (std::size_t i = 0; i < o.masks.size(); ++i) {
    require_file("--mask", o.masks[i]);
    require_file("--labels", o.labels[i]);
    const Mask keep = read_mask(read_file(o.masks[i]));
    const LabelSet gt = read_labels(read_file(o.labels[i]));
    pooled += confusion_from_keep(keep, gt);
  }
  ResultsTable t;
  t.rows.push_back({o.name, o.density, derive_metrics(pooled)});
  emit(out, o.out, write_results_csv(t));
}

struct TuneOpts {
  std::string data;
  std::string kind;
  std::size_t samples = 100;
  std::size_t trials = 100;
  std::uint64_t seed = 0;
  std::string density;
  std::string out;
};

inline void cmd_tune(const TuneOpts& o, std::ostream& out) {
  FilterKind kind;
  try {
    kind = parse_kind(o.kind);
  } catch (const Error&) {
    throw UsageError("--kind must be one of ror, sor, dror, dsor");
  }
  if (o.trials == 0) throw UsageError("--trials must be >= 1");
  std::vector<LabeledCloud> clouds;
  for (BenchSample& s : load_dataset(o.data)) {
    if (o.density.empty() || s.density == o.density) clouds.push_back(std::move(s.data));
  }
  if (clouds.empty()) throw Error(ErrorCode::EmptyDataset, "no clouds in group '" + o.density + "'");
  TuneConfig cfg;
  cfg.n_samples = o.samples;
  cfg.n_trials = o.trials;
  cfg.seed = derive_seed(o.seed, "tune");
  cfg.space = default_search_space(kind);
  const TuneResult r = tune_filter(kind, clouds, cfg);
  Json j{{"params", to_json(r.best)},
         {"f1", r.best_f1},
         {"samples", r.subset.size()},
         {"trials", r.trials.size()}};
  emit(out, o.out, j.dump(2) + "\n");
}

struct BenchOpts {
  std::string data;
  std::vector<std::string> filters;
  bool no_timing = false;
  std::string out;
};

inline void cmd_bench(const BenchOpts& o, std::ostream& out) {
  std::vector<NamedFilter> filters;
  for (const std::string& f : o.filters) {
    const Json j = detail::parse_json(json_argument("--filter", f));
    NamedFilter nf;
    nf.params = filter_params_from_json(j);
    if (j.contains("name") && j.at("name").is_string()) {
      nf.name = j.at("name").get<std::string>();
    } else {
      nf.name = kind_name(kind_of(nf.params));
      std::transform(nf.name.begin(), nf.name.end(), nf.name.begin(),
                     [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    }
    if (nf.name.find_first_of(",\n") != std::string::npos) {
      throw UsageError("filter name must not contain commas or newlines");
    }
    filters.push_back(std::move(nf));
  }
  const std::vector<BenchSample> dataset = load_dataset(o.data);
  BenchOptions bo;
  bo.measure_time = !o.no_timing;
  emit(out, o.out, write_results_csv(benchmark_run(dataset, filters, bo)));
}

// ---------------------------------------------------------------------------

inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app{"LiDAR rain simulation, annotation and de-raining benchmark", "derain3d"};
  app.require_subcommand(1);

  SceneOpts scene;
  auto* s_scene = app.add_subcommand("scene", "Emit a builtin scene as JSON");
  s_scene->add_option("--name", scene.name, "minimal | corridor | rehearse-like")->required();
  s_scene->add_flag("--annotation", scene.annotation,
                    "Emit annotation geometry (sensor frame) instead of the scene");
  s_scene->add_option("--margin", scene.margin, "Annotation box margin in meters");
  s_scene->add_option("--sensor-height", scene.sensor_height, "Sensor height in meters");
  s_scene->add_option("--out", scene.out, "Output path (default stdout)");

  SimulateOpts sim;
  auto* s_sim = app.add_subcommand("simulate", "Ray-cast a scene and inject rain");
  s_sim->add_option("--scene", sim.scene, "Builtin scene name or scene JSON path")->required();
  s_sim->add_option("--calib", sim.calib, "Calibration JSON (default: 32x192 desk sensor)");
  s_sim->add_option("--rain-config", sim.rain_config, "Rain config JSON");
  s_sim->add_option("--rate", sim.rate, "Rain rate in mm/h");
  s_sim->add_option("--density", sim.density, "heavy (50) | medium (25) | light (10)");
  s_sim->add_option("--seed", sim.seed, "Global seed");
  s_sim->add_option("--noise", sim.noise, "Range noise sigma in meters");
  s_sim->add_option("--count", sim.count, "Number of scans");
  s_sim->add_option("--out", sim.out, "Output directory");
  s_sim->add_flag("--no-occlusion", sim.no_occlusion, "Rain only fills unreturned beams");
  s_sim->add_flag("--emit-grid", sim.emit_grid, "Also write full grids with .mask sidecars");

  DerainOpts der;
  auto* s_der = app.add_subcommand("derain", "Filter a cloud");
  s_der->add_option("--in", der.in, "Input .bin")->required();
  s_der->add_option("--filter", der.filter, "Filter JSON (path or inline)")->required();
  s_der->add_option("--mask-out", der.mask_out, "Inlier mask output (.mask)");
  s_der->add_option("--out", der.out, "Filtered cloud output (.bin)");
  s_der->add_option("--labels", der.labels, "Labels of the input cloud");
  s_der->add_option("--labels-out", der.labels_out, "Labels of the kept points");

  AnnotateOpts ann;
  auto* s_ann = app.add_subcommand("annotate", "Automatically label a cloud");
  s_ann->add_option("--in", ann.in, "Input .bin")->required();
  s_ann->add_option("--scene", ann.scene, "Annotation scene JSON");
  s_ann->add_option("--builtin", ann.builtin, "Derive annotation geometry from a builtin scene");
  s_ann->add_option("--margin", ann.margin, "Box margin for --builtin");
  s_ann->add_option("--sensor-height", ann.sensor_height, "Sensor height for --builtin");
  s_ann->add_option("--out", ann.out, "Output .label")->required();
  s_ann->add_option("--seed", ann.seed, "Global seed");
  s_ann->add_option("--iterations", ann.iterations, "RANSAC iterations");
  s_ann->add_option("--threshold", ann.threshold, "RANSAC inlier threshold (m)");
  s_ann->add_option("--tolerance", ann.tolerance, "Road/rain height tolerance (m)");

  TransferOpts tr;
  auto* s_tr = app.add_subcommand("transfer", "Nearest-neighbor label transfer");
  s_tr->add_option("--src", tr.src, "Labeled source .bin")->required();
  s_tr->add_option("--src-labels", tr.src_labels, "Source .label")->required();
  s_tr->add_option("--dst", tr.dst, "Destination .bin")->required();
  s_tr->add_option("--out", tr.out, "Destination .label")->required();

  EvalOpts ev;
  auto* s_ev = app.add_subcommand("eval", "Score inlier masks against ground truth");
  s_ev->add_option("--mask", ev.masks, "Inlier mask (repeatable)")->required();
  s_ev->add_option("--labels", ev.labels, "Ground-truth .label (repeatable)")->required();
  s_ev->add_option("--name", ev.name, "Filter name for the report");
  s_ev->add_option("--density", ev.density, "Rain density tag for the report");
  s_ev->add_option("--out", ev.out, "CSV output (default stdout)");

  TuneOpts tu;
  auto* s_tu = app.add_subcommand("tune", "Random-search filter parameters");
  s_tu->add_option("--data", tu.data, "Dataset directory")->required();
  s_tu->add_option("--kind", tu.kind, "ror | sor | dror | dsor")->required();
  s_tu->add_option("--samples", tu.samples, "Clouds drawn for the search");
  s_tu->add_option("--trials", tu.trials, "Parameter vectors evaluated");
  s_tu->add_option("--seed", tu.seed, "Global seed");
  s_tu->add_option("--density", tu.density, "Restrict to one density group");
  s_tu->add_option("--out", tu.out, "Best-params JSON (default stdout)");

  BenchOpts be;
  auto* s_be = app.add_subcommand("bench", "Per-filter, per-density results table");
  s_be->add_option("--data", be.data, "Dataset directory")->required();
  s_be->add_option("--filter", be.filters, "Filter JSON, path or inline (repeatable)")->required();
  s_be->add_flag("--no-timing", be.no_timing, "Write 0 for time_ms");
  s_be->add_option("--out", be.out, "CSV output (default stdout)");

  std::vector<std::string> argv_store;
  argv_store.reserve(args.size() + 1);
  argv_store.push_back("derain3d");
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (std::string& a : argv_store) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::Success& e) {
    app.exit(e, out, err);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*s_scene) cmd_scene(scene, out);
    else if (*s_sim) cmd_simulate(sim, out);
    else if (*s_der) cmd_derain(der, out);
    else if (*s_ann) cmd_annotate(ann, out);
    else if (*s_tr) cmd_transfer(tr, out);
    else if (*s_ev) cmd_eval(ev, out);
    else if (*s_tu) cmd_tune(tu, out);
    else if (*s_be) cmd_bench(be, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace derain::cli
