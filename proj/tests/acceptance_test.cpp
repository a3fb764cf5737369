/* Copyright 2026 The Roadeval Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure.

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "roadeval/annotations.hpp"
#include "roadeval/cli.hpp"
#include "roadeval/errors.hpp"
#include "roadeval/geometry.hpp"
#include "roadeval/matching.hpp"
#include "roadeval/metrics.hpp"
#include "roadeval/oracle.hpp"
#include "roadeval/report.hpp"

namespace fs = std::filesystem;
using namespace roadeval;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int number, const std::string& name,
            const std::function<Outcome()>& criterion) {
  const auto start = Clock::now();
  Outcome o;
  try {
    o = criterion();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double elapsed = seconds_since(start);
  if (!o.pass) ++failures;
  std::printf("[%s] %2d %-28s %s (%.3f s)\n", o.pass ? "PASS" : "FAIL", number,
              name.c_str(), o.detail.c_str(), elapsed);
  std::fflush(stdout);
}

Annotation gt(std::int64_t id, int class_id, BBox box, std::int64_t image = 1) {
  Annotation a;
  a.id = id;
  a.image_id = image;
  a.class_id = class_id;
  a.bbox = box;
  a.area = box.area();
  return a;
}

Detection det(std::int64_t id, int class_id, BBox box, double score,
              std::int64_t image = 1) {
  Detection d;
  d.id = id;
  d.image_id = image;
  d.class_id = class_id;
  d.bbox = box;
  d.score = score;
  d.area = box.area();
  return d;
}

// Scenario family shared by criteria 4 and 5.
oracle::ScenarioConfig differential_config(std::uint64_t seed) {
  oracle::ScenarioConfig c;
  c.seed = seed;
  c.images = 1;
  c.min_gts = 0;
  c.max_gts = 3 + static_cast<int>(seed % 8);
  c.drop_rate = 0.15;
  c.jitter_px = static_cast<double>(seed % 9);
  c.class_swap_rate = 0.3;
  c.clutter_rate = 0.3;
  c.overlap_rate = (seed % 3) * 0.3;
  c.classes = seed % 2 ? 12 : 3;
  c.image_width = 160;
  c.image_height = 128;
  c.min_side = 8;
  c.max_side = 60;
  return c;
}

bool conserved(const std::vector<Annotation>& gts,
               const std::vector<Detection>& dets, const LabelMap& labels,
               const Thresholds& t, const MatchingResult& r) {
  ConfusionMatrix cm(labels);
  cm.add(r);
  std::int64_t visible = 0;
  for (const Category& c : labels.entries()) {
    const std::size_t k = *labels.index_of(c.id);
    std::int64_t n_gt = 0;
    std::int64_t n_det = 0;
    for (const Annotation& g : gts) n_gt += g.class_id == c.id;
    for (const Detection& d : dets) {
      n_det += d.class_id == c.id && d.score >= t.confidence_threshold;
    }
    visible += n_det;
    if (cm.row_sum(k) != n_gt || cm.col_sum(k) != n_det) return false;
  }
  return cm.at(cm.background(), cm.background()) == 0 &&
         cm.total() == static_cast<std::int64_t>(gts.size()) + visible -
                           static_cast<std::int64_t>(r.matched.size());
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

// Per-class counts of the road-damage testing set.
constexpr int kTestingCounts[12] = {455, 101, 219, 77, 187, 14,
                                    52,  12,  212, 297, 576, 17};

// 2,219 polygon ground truths and 3,000 detections over 220 960x540 images.
void write_testing_scale_dataset(const fs::path& dir) {
  std::mt19937_64 rng(2219);
  auto unit = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(); };

  GroundTruthSet g;
  g.labels = LabelMap::road_damage();
  for (int i = 1; i <= 220; ++i) {
    g.images.push_back({i, "test_" + std::to_string(i) + ".jpg", 960, 540});
  }
  std::vector<int> classes;
  for (int c = 0; c < 12; ++c) {
    for (int k = 0; k < kTestingCounts[c]; ++k) classes.push_back(c + 1);
  }
  auto shape = [](const BBox& b) {
    const double c = 0.25 * std::min(b.w, b.h);
    return Polygon{{{b.x + c, b.y},
                    {b.right() - c, b.y},
                    {b.right(), b.y + c},
                    {b.right(), b.bottom() - c},
                    {b.right() - c, b.bottom()},
                    {b.x + c, b.bottom()},
                    {b.x, b.bottom() - c},
                    {b.x, b.y + c}}};
  };
  for (std::size_t k = 0; k < classes.size(); ++k) {
    const double w = uniform(12, 220);
    const double h = uniform(12, 160);
    Annotation a = gt(static_cast<std::int64_t>(k + 1), classes[k],
                      {uniform(0, 960 - w), uniform(0, 540 - h), w, h},
                      static_cast<std::int64_t>(k % 220 + 1));
    a.segmentation = std::vector<Polygon>{shape(a.bbox)};
    g.annotations.push_back(a);
  }
  DetectionSet d;
  d.labels = g.labels;
  for (int k = 0; k < 3000; ++k) {
    const Annotation& src = g.annotations[static_cast<std::size_t>(k) %
                                          g.annotations.size()];
    BBox b = src.bbox;
    b.x = std::clamp(b.x + uniform(-6, 6), 0.0, 960 - b.w);
    b.y = std::clamp(b.y + uniform(-6, 6), 0.0, 540 - b.h);
    int c = src.class_id;
    if (unit() < 0.2) c = 1 + static_cast<int>(rng() % 12);
    Detection x = det(k + 1, c, b, uniform(0.05, 1.0), src.image_id);
    x.segmentation = std::vector<Polygon>{shape(b)};
    d.detections.push_back(x);
  }
  fs::create_directories(dir);
  write_file(dir / "gt.json", dump_ground_truth(g));
  write_file(dir / "det.json", dump_detections(d));
}

int run_cli(const std::vector<std::string>& args, std::string* err = nullptr) {
  std::ostringstream out;
  std::ostringstream e;
  const int code = cli::run(args, out, e);
  if (err != nullptr) *err = e.str();
  return code;
}

}  // namespace

int main() {
  const fs::path work = fs::temp_directory_path() /
                        ("roadeval_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(work);
  fs::create_directories(work);

  report(1, "recall fixture", [] {
    ConfusionMatrix cm(LabelMap::road_damage());
    cm.at(0, 0) = 116;
    cm.at(0, cm.background()) = 455 - 116;
    const auto start = Clock::now();
    const std::string text = format_ratio(precision_recall(cm)[0].recall);
    const double ms = seconds_since(start) * 1e3;
    return Outcome{text == "0.2549" && ms < 1.0,
                   "recall=" + text + " in " + std::to_string(ms) +
                       " ms (want \"0.2549\", < 1 ms)"};
  });

  report(2, "divergence fixture", [] {
    const LabelMap labels({{1, "X"}, {2, "Y"}});
    const std::vector<Annotation> gts = {gt(1, 1, {0, 0, 10, 10})};
    const std::vector<Detection> dets = {det(1, 2, {0, 0, 9, 10}, 0.9),
                                         det(2, 1, {0, 0, 6, 10}, 0.8)};
    ConfusionMatrix a(labels);
    ConfusionMatrix b(labels);
    a.add(match_conventional(gts, dets, {}));
    b.add(match_modified(gts, dets, {}));
    return Outcome{a.diagonal_sum() == 0 && b.diagonal_sum() == 1,
                   "diagonal conventional=" + std::to_string(a.diagonal_sum()) +
                       " modified=" + std::to_string(b.diagonal_sum()) +
                       " (want 0 and 1)"};
  });

  report(3, "literal-steps divergence", [] {
    const std::vector<Annotation> gts = {gt(1, 1, {0, 0, 10, 10}),
                                         gt(2, 1, {0, 0, 9, 10.0 / 0.95})};
    const std::vector<Detection> dets = {det(1, 1, {0, 0, 9, 10}, 0.9),
                                         det(2, 1, {1.5, 0, 8.5, 10}, 0.9)};
    const auto matched = match_conventional(gts, dets, {}).matched.size();
    const auto best = oracle::max_matching(gts, dets, 0.5, false);
    return Outcome{matched == 1 && best == 2,
                   "conventional=" + std::to_string(matched) +
                       " max_matching=" + std::to_string(best) +
                       " (want 1 and 2)"};
  });

  // Criteria 4 and 5 share one pass over the scenarios.
  long mismatches = 0;
  long violations = 0;
  long checks = 0;
  double differential_seconds = 0.0;
  {
    const auto start = Clock::now();
    for (std::uint64_t seed = 0; seed < 10000; ++seed) {
      const oracle::Scenario s = oracle::generate(differential_config(seed));
      const auto& gts = s.gt.annotations;
      const auto& dets = s.dets.detections;
      for (GeometryMode mode : {GeometryMode::kBoxes, GeometryMode::kMasks}) {
        Thresholds t;
        t.geometry_mode = mode;
        const MatchingResult conv = match_conventional(gts, dets, t);
        const MatchingResult ref = oracle::reference_conventional(gts, dets, t);
        ConfusionMatrix a(s.gt.labels);
        ConfusionMatrix b(s.gt.labels);
        a.add(conv);
        b.add(ref);
        if (!(a == b) || !(conv == ref)) ++mismatches;
        const MatchingResult mod = match_modified(gts, dets, t);
        if (!conserved(gts, dets, s.gt.labels, t, conv)) ++violations;
        if (!conserved(gts, dets, s.gt.labels, t, mod)) ++violations;
        ++checks;
      }
    }
    differential_seconds = seconds_since(start);
  }
  report(4, "differential equivalence", [&] {
    return Outcome{mismatches == 0 && differential_seconds < 60.0,
                   std::to_string(mismatches) + " mismatches over " +
                       std::to_string(checks) +
                       " scenario-modes (10,000 x boxes/masks), " +
                       std::to_string(differential_seconds) + " s (< 60 s)"};
  });
  report(5, "conservation suite", [&] {
    return Outcome{violations == 0,
                   std::to_string(violations) + " violations over " +
                       std::to_string(checks * 2) + " matrices"};
  });

  report(6, "agreement suite", [] {
    long checked = 0;
    long violations = 0;
    long skipped = 0;
    for (std::uint64_t seed = 0; checked < 1000; ++seed) {
      oracle::ScenarioConfig c = differential_config(seed);
      c.overlap_rate = 0.0;
      c.clutter_rate = 0.0;
      c.jitter_px = 3.0;
      const oracle::Scenario s = oracle::generate(c);
      const auto& gts = s.gt.annotations;
      const auto& dets = s.dets.detections;
      bool unambiguous = true;
      for (GeometryMode mode : {GeometryMode::kBoxes, GeometryMode::kMasks}) {
        Thresholds t;
        t.geometry_mode = mode;
        std::vector<int> dg(gts.size()), dd(dets.size());
        for (const MatchPair& p : iou_table(gts, dets, t)) {
          unambiguous = unambiguous && ++dg[p.gt] <= 1 && ++dd[p.det] <= 1;
        }
      }
      if (!unambiguous) {
        ++skipped;
        continue;
      }
      ++checked;
      for (GeometryMode mode : {GeometryMode::kBoxes, GeometryMode::kMasks}) {
        Thresholds t;
        t.geometry_mode = mode;
        ConfusionMatrix a(s.gt.labels);
        ConfusionMatrix b(s.gt.labels);
        a.add(match_conventional(gts, dets, t));
        b.add(match_modified(gts, dets, t));
        if (!(a == b)) ++violations;
      }
    }
    return Outcome{violations == 0,
                   std::to_string(violations) + " violations on " +
                       std::to_string(checked) + " unambiguous scenarios (" +
                       std::to_string(skipped) + " ambiguous skipped)"};
  });

  report(7, "oracle monotonicity", [] {
    long violations = 0;
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
      oracle::ScenarioConfig c = differential_config(seed);
      c.max_gts = 6;
      c.overlap_rate = 0.5;
      const oracle::Scenario s = oracle::generate(c);
      for (bool constrained : {false, true}) {
        std::size_t previous = SIZE_MAX;
        for (double t : {0.3, 0.5, 0.75, 0.9}) {
          const std::size_t m = oracle::max_matching(
              s.gt.annotations, s.dets.detections, t, constrained);
          if (m > previous) ++violations;
          previous = m;
        }
      }
    }
    return Outcome{violations == 0,
                   std::to_string(violations) +
                       " violations on 1000 scenarios, iou in {.3,.5,.75,.9}"};
  });

  report(8, "AP oracle", [] {
    const LabelMap labels({{1, "X"}});
    const std::vector<Annotation> gts = {gt(1, 1, {0, 0, 10, 10}),
                                         gt(2, 1, {20, 0, 10, 10})};
    const std::vector<Detection> dets = {det(1, 1, {0, 0, 10, 10}, 0.9),
                                         det(2, 1, {50, 50, 10, 10}, 0.8),
                                         det(3, 1, {20, 0, 10, 10}, 0.7)};
    const double ap = average_precision(gts, dets, 1, 0.5, std::nullopt, 100,
                                        GeometryMode::kBoxes);
    const double want = (51.0 + 50.0 * (2.0 / 3.0)) / 101.0;
    const std::vector<Annotation> one = {gt(1, 1, {0, 0, 10, 10})};
    const std::vector<Detection> six = {det(1, 1, {0, 0, 6, 10}, 0.9)};
    const AggregateMetrics m = mean_ap(one, six, labels, GeometryMode::kBoxes);
    const bool ok = std::abs(ap - want) <= 1e-9 && m.map_50 == 1.0 &&
                    m.map_75 == 0.0 && m.map_50_95 == 0.3;
    char buf[200];
    std::snprintf(buf, sizeof(buf),
                  "AP=%.12f (want %.12f +-1e-9); map_50=%g map_75=%g "
                  "map_50_95=%.17g (want 1, 0, 0.3 exactly)",
                  ap, want, m.map_50, m.map_75, m.map_50_95);
    return Outcome{ok, buf};
  });

  report(9, "geometry consistency", [] {
    std::mt19937_64 rng(9);
    std::uniform_int_distribution<int> pos(0, 40);
    std::uniform_int_distribution<int> side(1, 24);
    long iou_mismatch = 0;
    for (int k = 0; k < 1000; ++k) {
      const BBox a{double(pos(rng)), double(pos(rng)), double(side(rng)),
                   double(side(rng))};
      const BBox b{double(pos(rng)), double(pos(rng)), double(side(rng)),
                   double(side(rng))};
      const BitMask ma = rasterize(box_polygon(a), 64, 64);
      const BitMask mb = rasterize(box_polygon(b), 64, 64);
      if (mask_iou(ma, mb) != box_iou(a, b)) ++iou_mismatch;
    }
    long rle_mismatch = 0;
    std::uniform_int_distribution<int> dim(1, 40);
    std::uniform_real_distribution<double> density(0.0, 1.0);
    for (int k = 0; k < 1000; ++k) {
      BitMask m(dim(rng), dim(rng));
      const double p = density(rng);
      for (int r = 0; r < m.height(); ++r) {
        for (int c = 0; c < m.width(); ++c) {
          if (density(rng) < p) m.set(r, c);
        }
      }
      if (!(rle_decode(rle_encode(m)) == m)) ++rle_mismatch;
    }
    return Outcome{iou_mismatch == 0 && rle_mismatch == 0,
                   std::to_string(iou_mismatch) + "/1000 IoU mismatches, " +
                       std::to_string(rle_mismatch) + "/1000 RLE mismatches"};
  });

  report(10, "diagonal gain direction", [&] {
    std::vector<oracle::ScenarioConfig> configs;
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
      oracle::ScenarioConfig c;
      c.seed = 100000 + seed;
      c.images = 1;
      c.min_gts = 2;
      c.max_gts = 10;
      c.drop_rate = 0.1;
      c.jitter_px = 8.0;
      c.class_swap_rate = 0.3;
      c.clutter_rate = 0.3;
      c.overlap_rate = 0.6;
      configs.push_back(c);
    }
    const oracle::DeltaStats d = oracle::compare(configs, Thresholds{});
    const std::string table = comparison_csv(d);
    write_file(work / "class_metrics_boxes.csv", table);
    std::printf("%s", table.c_str());
    return Outcome{d.diagonal_delta >= 0,
                   "diagonal delta (modified - conventional) = " +
                       std::to_string(d.diagonal_delta) + ", off-diagonal " +
                       std::to_string(d.off_diagonal_delta) +
                       " over 1000 box scenarios (want >= 0)"};
  });

  report(11, "performance", [&] {
    const fs::path data = work / "testing_scale";
    write_testing_scale_dataset(data);
    const auto start = Clock::now();
    std::string err;
    int codes = 0;
    for (const char* mode : {"boxes", "masks"}) {
      codes |= run_cli({"evaluate", "--gt", (data / "gt.json").string(),
                        "--det", (data / "det.json").string(), "--mode", mode,
                        "--out", (work / "perf" / mode).string()},
                       &err);
    }
    const double s = seconds_since(start);
    return Outcome{codes == 0 && s < 10.0,
                   "2219 gts / 3000 dets / 220 images, both modes in " +
                       std::to_string(s) + " s (< 10 s)" +
                       (codes ? " exit " + err : "")};
  });

  report(12, "determinism", [&] {
    const fs::path data = work / "testing_scale";
    int codes = 0;
    for (const char* run_name : {"a", "b"}) {
      const fs::path out = work / "det" / run_name;
      for (const char* mode : {"boxes", "masks"}) {
        codes |= run_cli({"evaluate", "--gt", (data / "gt.json").string(),
                          "--det", (data / "det.json").string(), "--mode", mode,
                          "--format", "json", "--format", "csv", "--format",
                          "svg", "--out", (out / mode).string()});
      }
      codes |= run_cli({"split", "--gt", (data / "gt.json").string(), "--seed",
                        "7", "--out", (out / "split").string()});
    }
    long files = 0;
    long differ = 0;
    for (const auto& e : fs::recursive_directory_iterator(work / "det" / "a")) {
      if (!e.is_regular_file()) continue;
      const fs::path rel = fs::relative(e.path(), work / "det" / "a");
      ++files;
      if (read_file(e.path()) != read_file(work / "det" / "b" / rel)) ++differ;
    }
    return Outcome{codes == 0 && differ == 0 && files == 12,
                   std::to_string(differ) + " of " + std::to_string(files) +
                       " output files differ across repeated runs"};
  });

  fs::remove_all(work);
  std::printf("%d of 12 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
