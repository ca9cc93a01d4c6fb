// Copyright 2026 The derain3d Authors
// SPDX-License-Identifier: Apache-2.0
//
// Acceptance criteria 1-10. Prints one [PASS]/[FAIL] line per criterion and
// exits nonzero if any fails. `--only N` runs a single criterion.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>

#include "cli_app.hpp"
#include "test_support.hpp"

namespace derain::acceptance {
namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void check(bool ok, const std::string& what) {
    pass = pass && ok;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [miss]");
  }
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// 1 ------------------------------------------------------------------------

Outcome metric_rows() {
  Outcome o;
  struct Row {
    const char* name;
    double p, r, f1, iou;
  };
  for (const Row& row : {Row{"row A", 96.35, 98.48, 97.40, 94.94},
                         Row{"row B", 95.81, 99.07, 97.41, 94.92}}) {
    const MetricReport m = metrics_from_rates(row.p / 100, row.r / 100);
    const double f1 = 100 * m.f1, iou = 100 * m.rain_iou;
    o.check(std::abs(f1 - row.f1) <= 0.01 + 1e-9,
            fmt("%s F1 %.4f vs %.2f+-0.01", row.name, f1, row.f1));
    o.check(std::abs(iou - row.iou) <= 0.02 + 1e-9,
            fmt("%s IoU %.4f vs %.2f+-0.02", row.name, iou, row.iou));
  }
  return o;
}

// 2 ------------------------------------------------------------------------

Outcome iou_identity() {
  std::mt19937_64 rng(derive_seed(2, "acceptance/iou"));
  std::uniform_int_distribution<int> mag(0, 9);
  double worst = 0.0;
  int checked = 0;
  for (int i = 0; i < 10000; ++i) {
    auto draw = [&] {
      std::uniform_int_distribution<std::uint64_t> d(0, std::uint64_t{1} << (3 * mag(rng)));
      return d(rng);
    };
    const ConfusionCounts c{draw(), draw(), draw(), draw()};
    if (c.tp + c.fp + c.fn == 0) continue;
    const MetricReport m = derive_metrics(c);
    worst = std::max(worst, std::abs(m.rain_iou - m.f1 / (2 - m.f1)));
    ++checked;
  }
  Outcome o;
  o.check(worst <= 1e-12, fmt("%d matrices, max |IoU - F1/(2-F1)| = %.3g", checked, worst));
  return o;
}

// 3 ------------------------------------------------------------------------

Outcome pgm_round_trip() {
  const SensorCalibration calib =
      uniform_calibration(64, 512, deg2rad(-25.0), deg2rad(15.0), -std::numbers::pi,
                          std::numbers::pi, 0.5, 100.0, 1.8);
  double worst = 0.0;
  bool count_ok = true, unreturned_ok = true;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    std::mt19937_64 rng(derive_seed(seed, "acceptance/pgm"));
    const double fill = 0.2 + 0.75 * static_cast<double>(seed) / 49.0;
    const testing::AlignedScan scan = testing::aligned_scan(calib, fill, rng);
    const FlatScan flat = flatten(project_to_pgm(scan.cloud, calib));
    count_ok = count_ok && flat.cloud.size() == calib.rows() * calib.cols() &&
               flat.unreturned.size() == flat.cloud.size();
    Mask hit(flat.cloud.size(), 0);
    for (std::size_t i = 0; i < scan.cells.size(); ++i) {
      const std::size_t cell = scan.cells[i];
      hit[cell] = 1;
      if (flat.unreturned[cell]) {
        worst = std::numeric_limits<double>::infinity();
        continue;
      }
      worst = std::max(worst, (flat.cloud.coords[cell] - scan.cloud.coords[i]).norm());
    }
    for (std::size_t cell = 0; cell < hit.size(); ++cell) {
      if (hit[cell]) continue;
      const double range = flat.cloud.coords[cell].norm();
      unreturned_ok = unreturned_ok && flat.unreturned[cell] &&
                      std::abs(range - calib.r_max) < 1e-9 && flat.cloud.intensity[cell] == 0.0;
    }
  }
  Outcome o;
  o.check(worst <= 1e-3, fmt("max point error %.3g m over 50 scans", worst));
  o.check(unreturned_ok, "unreturned cells at r_max with zero intensity");
  o.check(count_ok, "output count = 64*512");
  return o;
}

// 4 ------------------------------------------------------------------------

FilterParams random_params(FilterKind kind, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> k(1, 12);
  std::uniform_int_distribution<int> m(0, 10);
  switch (kind) {
    case FilterKind::Ror: return RorParams{0.05 + 2.0 * u(rng), m(rng)};
    case FilterKind::Sor: return SorParams{k(rng), 3.0 * u(rng)};
    case FilterKind::Dror:
      return DrorParams{0.001 + 0.02 * u(rng), 1.0 + 4.0 * u(rng), m(rng), 0.5 * u(rng)};
    case FilterKind::Dsor: return DsorParams{k(rng), 2.0 * u(rng), 0.005 + 0.5 * u(rng)};
  }
  return RorParams{};
}

Outcome filter_oracle() {
  std::mt19937_64 rng(derive_seed(4, "acceptance/filters"));
  std::uniform_int_distribution<std::size_t> size(50, 500);
  std::size_t compared = 0, mismatched = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = size(rng);
    const PointCloud c = trial % 3 == 0 ? testing::tie_heavy_cloud(n, rng)
                                        : testing::random_cloud(n, rng, trial % 3 == 1 ? 3.0 : 20.0);
    for (FilterKind kind : {FilterKind::Ror, FilterKind::Sor, FilterKind::Dror, FilterKind::Dsor}) {
      const FilterParams p = random_params(kind, rng);
      ++compared;
      mismatched += apply_filter(c, p) != brute_force_mask(c, p);
    }
  }
  Outcome o;
  o.check(mismatched == 0, fmt("%zu of %zu masks differ from brute force", mismatched, compared));
  return o;
}

// 5 ------------------------------------------------------------------------

Outcome drop_distribution() {
  Outcome o;
  for (double rate : {10.0, 25.0, 50.0}) {
    RainConfig c;
    c.rate = rate;
    c.seed = derive_seed(static_cast<std::uint64_t>(rate), "acceptance/ks");
    const double lambda = marshall_palmer_lambda(rate);
    DropSampler sampler(c, Aabb{Vec3::Zero(), Vec3(1000, 1000, 1000)});
    std::vector<double> d(100000);
    for (double& x : d) x = sampler.next().diameter;
    const double ks = testing::ks_statistic(
        d, [&](double x) { return testing::truncated_exp_cdf(x, lambda, c.d_min, c.d_max); });
    o.check(ks < 0.01, fmt("KS@%g = %.4f", rate, ks));

    const Aabb box{Vec3(-1, -1, -1), Vec3(1, 1, 1)};
    double total = 0.0;
    for (std::uint64_t s = 0; s < 100; ++s) {
      c.seed = derive_seed(s, "acceptance/concentration");
      total += static_cast<double>(sample_drop_field(c, box).size());
    }
    const double empirical = total / 100.0 / 8.0;
    const double expected = expected_drop_concentration(c);
    o.check(std::abs(empirical / expected - 1) <= 0.03,
            fmt("conc@%g %.1f vs %.1f m^-3", rate, empirical, expected));
  }
  return o;
}

// 6 ------------------------------------------------------------------------

Outcome rain_monotonicity() {
  const SceneSpec scene = builtin_scene("rehearse-like");
  const SensorCalibration calib = desk_calibration();
  const std::array<double, 3> rates{10.0, 25.0, 50.0};
  std::array<double, 3> mean{};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const ScanWithLabels clean = raycast_scene(scene, calib, 0.01, derive_seed(seed, "noise"));
    for (std::size_t r = 0; r < rates.size(); ++r) {
      RainConfig cfg;
      cfg.rate = rates[r];
      cfg.seed = derive_seed(seed, "rain");
      mean[r] += static_cast<double>(inject_rain(clean.pgm, clean.labels, calib, cfg).injected) / 20.0;
    }
  }
  Outcome o;
  o.check(mean[0] < mean[1] && mean[1] < mean[2],
          fmt("mean rain points %.1f < %.1f < %.1f", mean[0], mean[1], mean[2]));
  return o;
}

// 7 ------------------------------------------------------------------------

Outcome ransac_recovery() {
  int good = 0;
  double worst_angle = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(derive_seed(seed, "acceptance/ransac"));
    std::uniform_real_distribution<double> xy(-15.0, 15.0), z_out(-3.0, 3.0), u(0.0, 1.0);
    std::normal_distribution<double> noise(0.0, 0.02);
    PointCloud c;
    for (int i = 0; i < 1000; ++i) {
      const bool outlier = u(rng) < 0.3;
      const double x = xy(rng), y = xy(rng);
      c.push_back(Vec3(x, y, outlier ? z_out(rng) : noise(rng)), 0.2);
    }
    const PlaneModel m = ransac_plane(c, RansacConfig{200, 0.05, seed});
    const double angle = std::acos(std::clamp(m.normal.dot(Vec3::UnitZ()), -1.0, 1.0)) * 180 /
                         std::numbers::pi;
    worst_angle = std::max(worst_angle, angle);
    good += angle <= 1.0 && std::abs(m.offset) < 0.03;
  }
  Outcome o;
  o.check(good >= 95, fmt("%d/100 seeds within 1 deg and 0.03 m (worst %.3f deg)", good, worst_angle));
  return o;
}

// 8 ------------------------------------------------------------------------

Outcome annotation_end_to_end() {
  const SceneSpec scene = builtin_scene("rehearse-like");
  const SensorCalibration calib = desk_calibration();
  const AnnotationScene ann = annotation_scene_from(scene, calib.sensor_height, 0.05);
  const AnnotateConfig cfg;
  const Plane truth_plane{scene.ground_plane.normal,
                          scene.ground_plane.offset + calib.sensor_height};
  std::size_t points = 0, agree = 0, subset = 0, recalled = 0, rain = 0, rain_hit = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const LabeledCloud lc = testing::rainy_scan("rehearse-like", 50.0, seed, 0.005, calib);
    const LabelSet labels = auto_annotate(lc.cloud, ann, cfg);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      ++points;
      agree += labels[i] == lc.labels[i];
      if (lc.labels[i] != SemanticClass::Rain) continue;
      ++rain;
      rain_hit += labels[i] == SemanticClass::Rain;
      const Vec3& p = lc.cloud.coords[i];
      const bool in_box =
          std::any_of(ann.sprinkler_boxes.begin(), ann.sprinkler_boxes.end(),
                      [&](const LabeledBox& b) { return b.box.contains(p); }) ||
          std::any_of(ann.object_boxes.begin(), ann.object_boxes.end(),
                      [&](const LabeledBox& b) { return b.box.contains(p); });
      if (truth_plane.signed_distance(p) > cfg.plane_tolerance &&
          point_in_polygon(p.head<2>(), ann.road_polygon) && !in_box) {
        ++subset;
        recalled += labels[i] == SemanticClass::Rain;
      }
    }
  }
  Outcome o;
  const double agreement = static_cast<double>(agree) / static_cast<double>(points);
  o.check(agreement >= 0.99, fmt("agreement %.4f over %zu points", agreement, points));
  o.check(subset > 0 && recalled == subset,
          fmt("recall %zu/%zu on rain above plane, in polygon, outside boxes", recalled, subset));
  o.detail += fmt(" (all rain: %zu/%zu)", rain_hit, rain);
  return o;
}

// 9 ------------------------------------------------------------------------

Outcome tuned_dsor() {
  const SensorCalibration calib = desk_calibration();
  std::vector<LabeledCloud> train, held_out;
  for (std::uint64_t seed = 0; seed < 120; ++seed) {
    const char* scene = seed % 2 ? "corridor" : "rehearse-like";
    (seed < 100 ? train : held_out)
        .push_back(testing::rainy_scan(scene, 50.0, derive_seed(seed, "acceptance/tune"), 0.01, calib));
  }
  TuneConfig cfg;
  cfg.n_samples = 100;
  cfg.n_trials = 100;
  cfg.seed = 9;
  cfg.space = default_search_space(FilterKind::Dsor);
  const TuneResult tuned = tune_filter(FilterKind::Dsor, train, cfg);
  const MetricReport t = derive_metrics(evaluate_filter(held_out, tuned.best));
  const MetricReport d = derive_metrics(evaluate_filter(held_out, default_params(FilterKind::Dsor)));
  const auto& p = std::get<DsorParams>(tuned.best);
  Outcome o;
  o.check(t.recall >= 0.90, fmt("held-out recall %.4f", t.recall));
  o.check(t.f1 > d.f1, fmt("held-out F1 tuned %.4f vs default %.4f", t.f1, d.f1));
  o.detail += fmt(" (k=%d s=%.3f r=%.4f, train F1 %.4f)", p.k, p.s, p.r, tuned.best_f1);
  return o;
}

// 10 -----------------------------------------------------------------------

int cli(std::vector<std::string> args, std::string* err = nullptr) {
  std::ostringstream out, e;
  const int code = cli::run(args, out, e);
  if (err) *err = e.str();
  return code;
}

/// Runs every subcommand into `dir` and returns the first failure message.
std::string run_all_commands(const std::string& dir) {
  const std::string data = dir + "/data";
  const std::string scan = data + "/scan_000001";
  const std::string filt = R"({"kind":"dsor","k":4,"s":0.2,"r":0.05})";
  const std::vector<std::vector<std::string>> commands{
      {"scene", "--name", "rehearse-like", "--out", dir + "/scene.json"},
      {"scene", "--name", "rehearse-like", "--annotation", "--sensor-height", "1.8", "--out",
       dir + "/annotation.json"},
      {"simulate", "--scene", dir + "/scene.json", "--density", "medium", "--seed", "31", "--count",
       "3", "--out", data, "--emit-grid"},
      {"derain", "--in", scan + ".bin", "--filter", filt, "--mask-out", dir + "/m.mask", "--out",
       dir + "/kept.bin", "--labels", scan + ".label", "--labels-out", dir + "/kept.label"},
      {"annotate", "--in", scan + ".bin", "--scene", dir + "/annotation.json", "--seed", "5", "--out", dir + "/auto.label"},
      {"transfer", "--src", scan + ".bin", "--src-labels", dir + "/auto.label", "--dst",
       dir + "/kept.bin", "--out", dir + "/transfer.label"},
      {"eval", "--mask", dir + "/m.mask", "--labels", scan + ".label", "--density", "medium",
       "--out", dir + "/eval.csv"},
      {"tune", "--data", data, "--kind", "dsor", "--samples", "2", "--trials", "5", "--seed", "3",
       "--out", dir + "/tuned.json"},
      {"bench", "--data", data, "--filter", filt, "--filter", dir + "/tuned.json", "--no-timing",
       "--out", dir + "/bench.csv"}};
  for (const auto& args : commands) {
    std::string err;
    if (cli(args, &err) != 0) return args[0] + ": " + err;
  }
  return {};
}

Outcome determinism_and_io() {
  Outcome o;
  testing::TempDir root("acceptance");
  std::vector<std::vector<std::pair<std::string, Bytes>>> snaps;
  for (const auto& [tag, threads] : {std::pair{"a", "1"}, std::pair{"b", "1"}, std::pair{"c", "4"}}) {
    testing::ScopedEnv env("DERAIN_THREADS", threads);
    const std::string dir = root.str(tag);
    const std::string failure = run_all_commands(dir);
    if (!failure.empty()) {
      o.check(false, "command failed: " + failure);
      return o;
    }
    snaps.push_back(testing::snapshot(dir));
  }
  o.check(snaps[0] == snaps[1], fmt("two runs byte-identical (%zu files)", snaps[0].size()));
  o.check(snaps[0] == snaps[2], "1 vs 4 threads byte-identical");

  std::mt19937_64 rng(derive_seed(10, "acceptance/fuzz"));
  std::uniform_int_distribution<std::uint32_t> bits;
  std::uniform_int_distribution<int> len(0, 64);
  std::size_t rounds = 0, failures = 0;
  for (int i = 0; i < 20000; ++i) {
    Bytes b;
    const int n = len(rng);
    switch (i % 4) {
      case 0:  // arbitrary bytes, any length
        for (int j = 0; j < n; ++j) b.push_back(static_cast<std::uint8_t>(bits(rng)));
        break;
      case 1:  // valid cloud records built from random float bit patterns
        for (int j = 0; j < n; ++j) {
          for (int f = 0; f < 3; ++f) {
            float v;
            do v = std::bit_cast<float>(bits(rng));
            while (!std::isfinite(v));
            detail::put_f32(b, v);
          }
          detail::put_f32(b, std::bit_cast<float>(bits(rng) % 0x3f800001u));
        }
        break;
      case 2:  // valid labels
        for (int j = 0; j < n; ++j) detail::put_u32(b, bits(rng) % 8);
        break;
      default:  // valid masks
        for (int j = 0; j < n; ++j) b.push_back(static_cast<std::uint8_t>(bits(rng) % 2));
    }
    auto attempt = [&](auto read, auto write, bool must_parse) {
      try {
        ++rounds;
        failures += write(read(b)) != b;
      } catch (const Error&) {
        failures += must_parse;
      }
    };
    attempt(read_cloud, write_cloud, i % 4 == 1);
    attempt(read_labels, write_labels, i % 4 == 2);
    attempt(read_mask, write_mask, i % 4 == 3);
  }
  o.check(failures == 0, fmt("%zu fuzzed binary round trips, %zu not bit-exact", rounds, failures));
  return o;
}

struct Criterion {
  int id;
  const char* title;
  double budget_s;
  std::function<Outcome()> run;
};

}  // namespace
}  // namespace derain::acceptance

int main(int argc, char** argv) {
  using namespace derain::acceptance;
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--only" && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else {
      std::cerr << "usage: derain_acceptance [--only N]\n";
      return 2;
    }
  }
  const std::vector<Criterion> criteria{
      {1, "metric reproduction", 1, metric_rows},
      {2, "IoU identity", 1, iou_identity},
      {3, "grid map round trip", 10, pgm_round_trip},
      {4, "filter oracle equivalence", 30, filter_oracle},
      {5, "drop-size distribution", 30, drop_distribution},
      {6, "rain monotonicity", 60, rain_monotonicity},
      {7, "RANSAC recovery", 20, ransac_recovery},
      {8, "end-to-end annotation", 30, annotation_end_to_end},
      {9, "tuned DSOR efficacy", 300, tuned_dsor},
      {10, "determinism and I/O", 60, determinism_and_io},
  };
  int failed = 0, ran = 0;
  for (const Criterion& c : criteria) {
    if (only && c.id != only) continue;
    ++ran;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.check(false, std::string("threw: ") + e.what());
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    o.check(secs < c.budget_s, fmt("%.2f s of %g s", secs, c.budget_s));
    failed += !o.pass;
    std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << c.id << ": " << c.title << " (" << o.detail
              << ")" << std::endl;
  }
  if (ran == 0) {
    std::cerr << "no criterion " << only << "\n";
    return 2;
  }
  return failed ? 1 : 0;
}
