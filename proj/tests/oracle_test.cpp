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

#include "roadeval/oracle.hpp"

#include <algorithm>
#include <vector>

#include <gtest/gtest.h>

#include "roadeval/errors.hpp"
#include "roadeval/report.hpp"
#include "test_support.hpp"

namespace roadeval::oracle {
namespace {

using roadeval::testing::box_with_iou_tenths;
using roadeval::testing::make_det;
using roadeval::testing::make_gt;

const BBox kUnit{0, 0, 10, 10};

ScenarioConfig busy(std::uint64_t seed) {
  ScenarioConfig c;
  c.seed = seed;
  c.images = 2;
  c.min_gts = 0;
  c.max_gts = 8;
  c.drop_rate = 0.2;
  c.jitter_px = 6.0;
  c.class_swap_rate = 0.3;
  c.clutter_rate = 0.3;
  c.overlap_rate = 0.5;
  c.classes = 4;
  c.image_width = 160;
  c.image_height = 120;
  c.min_side = 8;
  c.max_side = 50;
  return c;
}

TEST(GenerateTest, Deterministic) {
  const Scenario a = generate(busy(17));
  const Scenario b = generate(busy(17));
  EXPECT_EQ(dump_ground_truth(a.gt), dump_ground_truth(b.gt));
  EXPECT_EQ(dump_detections(a.dets), dump_detections(b.dets));
  const Scenario c = generate(busy(18));
  EXPECT_NE(dump_ground_truth(a.gt), dump_ground_truth(c.gt));
}

TEST(GenerateTest, ValidOutput) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Scenario s = generate(busy(seed));
    EXPECT_TRUE(validate(s.gt).empty()) << seed;
    EXPECT_TRUE(validate(s.dets, s.gt.images).empty()) << seed;
    for (const Annotation& a : s.gt.annotations) EXPECT_NE(a.mask, nullptr);
    // Survives a trip through the file format.
    const GroundTruthSet again = parse_ground_truth(dump_ground_truth(s.gt));
    EXPECT_EQ(again, s.gt);
  }
}

TEST(GenerateTest, FullDropGivesNoDetections) {
  ScenarioConfig c = busy(3);
  c.drop_rate = 1.0;
  c.clutter_rate = 0.0;
  c.images = 10;
  EXPECT_TRUE(generate(c).dets.detections.empty());
}

TEST(GenerateTest, NoNoiseReproducesGroundTruth) {
  ScenarioConfig c = busy(4);
  c.drop_rate = 0.0;
  c.jitter_px = 0.0;
  c.class_swap_rate = 0.0;
  c.clutter_rate = 0.0;
  c.images = 10;
  const Scenario s = generate(c);
  ASSERT_EQ(s.dets.detections.size(), s.gt.annotations.size());
  for (GeometryMode mode : {GeometryMode::kBoxes, GeometryMode::kMasks}) {
    Thresholds t;
    t.geometry_mode = mode;
    for (const ImageItems& items : group_by_image(s.gt, s.dets)) {
      const MatchingResult r = match_conventional(items.gts, items.dets, t);
      EXPECT_EQ(r.matched.size(), items.gts.size());
      for (const MatchPair& p : r.matched) {
        EXPECT_EQ(p.iou, 1.0);
        EXPECT_TRUE(p.same_class);
      }
    }
  }
}

TEST(GenerateTest, RejectsBadConfig) {
  ScenarioConfig c;
  c.drop_rate = 1.5;
  EXPECT_THROW(generate(c), ConfigError);
  c = ScenarioConfig{};
  c.min_gts = 5;
  c.max_gts = 2;
  EXPECT_THROW(generate(c), ConfigError);
}

TEST(MaxMatchingTest, Examples) {
  EXPECT_EQ(max_matching({}, {}, 0.5, false), 0u);

  const std::vector<Annotation> gts = {make_gt(1, 1, kUnit),
                                       make_gt(2, 1, {0, 0, 9, 10.0 / 0.95})};
  const std::vector<Detection> dets = {make_det(1, 1, {0, 0, 9, 10}, 0.9),
                                       make_det(2, 1, {1.5, 0, 8.5, 10}, 0.9)};
  EXPECT_EQ(max_matching(gts, dets, 0.5, false), 2u);

  const std::vector<Annotation> x = {make_gt(1, 1, kUnit)};
  const std::vector<Detection> y = {make_det(1, 2, kUnit, 0.9)};
  EXPECT_EQ(max_matching(x, y, 0.5, false), 1u);
  EXPECT_EQ(max_matching(x, y, 0.5, true), 0u);
}

TEST(MaxMatchingTest, TooLarge) {
  std::vector<Annotation> gts;
  for (int k = 0; k < 13; ++k) gts.push_back(make_gt(k + 1, 1, kUnit));
  const std::vector<Detection> dets = {make_det(1, 1, kUnit, 0.9)};
  EXPECT_THROW(max_matching(gts, dets, 0.5, false), SizeError);
  EXPECT_THROW(max_matching(dets.empty() ? gts : std::vector<Annotation>{},
                            std::vector<Detection>(13, dets[0]), 0.5, false),
               SizeError);
}

// Straight enumeration over injective assignments, for small sizes only.
std::size_t enumerate_matching(const std::vector<Annotation>& gts,
                               const std::vector<Detection>& dets, double t,
                               bool same_class, std::size_t g,
                               std::vector<bool>& used) {
  if (g == gts.size()) return 0;
  std::size_t best = enumerate_matching(gts, dets, t, same_class, g + 1, used);
  for (std::size_t d = 0; d < dets.size(); ++d) {
    if (used[d]) continue;
    if (same_class && gts[g].class_id != dets[d].class_id) continue;
    if (box_iou(gts[g].bbox, dets[d].bbox) < t) continue;
    used[d] = true;
    best = std::max(best,
                    1 + enumerate_matching(gts, dets, t, same_class, g + 1, used));
    used[d] = false;
  }
  return best;
}

TEST(MaxMatchingTest, AgreesWithEnumerationAndBoundsMatchers) {
  int checked = 0;
  for (std::uint64_t seed = 0; seed < 400; ++seed) {
    ScenarioConfig c = busy(seed);
    c.images = 1;
    const Scenario s = generate(c);
    const auto& gts = s.gt.annotations;
    const std::vector<Detection> dets = above_confidence(s.dets.detections, {});
    if (gts.size() > 7 || dets.size() > 7) continue;
    ++checked;
    std::size_t previous = dets.size() + 1;
    for (double t : {0.3, 0.5, 0.75, 0.9}) {
      std::vector<bool> used(dets.size(), false);
      const std::size_t free = max_matching(gts, dets, t, false);
      const std::size_t same = max_matching(gts, dets, t, true);
      EXPECT_EQ(free, enumerate_matching(gts, dets, t, false, 0, used));
      EXPECT_EQ(same, enumerate_matching(gts, dets, t, true, 0, used));
      EXPECT_LE(same, free);
      EXPECT_LE(free, previous);
      previous = free;

      Thresholds th;
      th.iou_threshold = t;
      EXPECT_LE(match_conventional(gts, dets, th).matched.size(), free);
      EXPECT_LE(match_modified(gts, dets, th).matched.size(), free);
      EXPECT_LE(match_greedy_global(gts, dets, th).matched.size(), free);
    }
  }
  EXPECT_GT(checked, 150);
}

TEST(ReferenceConventionalTest, SmallCases) {
  const std::vector<Annotation> gts = {make_gt(1, 1, kUnit)};
  const MatchingResult none = reference_conventional(gts, {}, {});
  EXPECT_TRUE(none.matched.empty());
  EXPECT_EQ(none.unmatched_gts.size(), 1u);

  const std::vector<Detection> dets = {
      make_det(1, 1, box_with_iou_tenths(8), 0.9)};
  EXPECT_EQ(reference_conventional(gts, dets, {}).matched.size(), 1u);
}

TEST(ReferenceConventionalTest, EqualsMatcher) {
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    const Scenario s = generate(busy(seed));
    for (GeometryMode mode : {GeometryMode::kBoxes, GeometryMode::kMasks}) {
      Thresholds t;
      t.geometry_mode = mode;
      for (const ImageItems& items : group_by_image(s.gt, s.dets)) {
        EXPECT_EQ(reference_conventional(items.gts, items.dets, t),
                  match_conventional(items.gts, items.dets, t))
            << "seed " << seed;
      }
    }
  }
}

TEST(GreedyGlobalTest, DiffersFromLiteralSteps) {
  const std::vector<Annotation> gts = {make_gt(1, 1, kUnit),
                                       make_gt(2, 1, {0, 0, 9, 10.0 / 0.95})};
  const std::vector<Detection> dets = {make_det(1, 1, {0, 0, 9, 10}, 0.9),
                                       make_det(2, 1, {1.5, 0, 8.5, 10}, 0.9)};
  EXPECT_EQ(match_greedy_global(gts, dets, {}).matched.size(), 2u);
  EXPECT_EQ(match_conventional(gts, dets, {}).matched.size(), 1u);
}

Scenario crafted_cross_class() {
  Scenario s;
  s.gt.labels = LabelMap::road_damage();
  s.dets.labels = s.gt.labels;
  s.gt.images = {{1, "crafted", 64, 64}};
  s.gt.annotations = {make_gt(1, 1, kUnit)};
  s.dets.detections = {make_det(1, 2, box_with_iou_tenths(9), 0.9),
                       make_det(2, 1, box_with_iou_tenths(6), 0.8)};
  return s;
}

TEST(CompareTest, CraftedCrossClass) {
  const std::vector<Scenario> scenarios = {crafted_cross_class()};
  const DeltaStats d = compare(scenarios, Thresholds{});
  EXPECT_EQ(d.scenarios, 1);
  EXPECT_EQ(d.conventional.diagonal_sum(), 0);
  EXPECT_EQ(d.modified.diagonal_sum(), 1);
  EXPECT_EQ(d.diagonal_delta, 1);
  EXPECT_EQ(d.off_diagonal_delta, -1);
  EXPECT_EQ(d.per_class[0].tp, 1);
  EXPECT_EQ(d.per_class[0].fp, -1);
  EXPECT_EQ(d.per_class[0].fn, -1);
  EXPECT_EQ(d.per_class[1].tp, 0);
  EXPECT_EQ(d.per_class[1].fp, 0);
}

TEST(CompareTest, NoNoiseNoDelta) {
  std::vector<ScenarioConfig> configs;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    ScenarioConfig c = busy(seed);
    c.drop_rate = 0.0;
    c.jitter_px = 0.0;
    c.class_swap_rate = 0.0;
    c.clutter_rate = 0.0;
    configs.push_back(c);
  }
  for (GeometryMode mode : {GeometryMode::kBoxes, GeometryMode::kMasks}) {
    Thresholds t;
    t.geometry_mode = mode;
    const DeltaStats d = compare(configs, t);
    EXPECT_EQ(d.scenarios, 50);
    EXPECT_EQ(d.conventional, d.modified);
    EXPECT_EQ(d.diagonal_delta, 0);
    for (const ClassDelta& c : d.per_class) {
      EXPECT_EQ(c.tp, 0);
      EXPECT_EQ(c.fp, 0);
      EXPECT_EQ(c.fn, 0);
    }
  }
}

TEST(CompareTest, MixedClassCountsRejected) {
  std::vector<ScenarioConfig> configs = {busy(1), busy(2)};
  configs[1].classes = 5;
  EXPECT_THROW(compare(configs, Thresholds{}), ConfigError);
}

TEST(CompareTest, CsvLayout) {
  const std::vector<Scenario> scenarios = {crafted_cross_class()};
  const std::string csv = comparison_csv(compare(scenarios, Thresholds{}));
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "category,precision_@0.5IoU,recall_@0.5IoU,category,"
            "precision_@0.5IoU,recall_@0.5IoU,delta_tp,delta_fp,delta_fn");
  EXPECT_NE(
      csv.find("\nCrack1,0.0000,0.0000,Crack1,1.0000,1.0000,1,-1,-1\n"),
            std::string::npos)
      << csv;
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 13);
}

}  // namespace
}  // namespace roadeval::oracle
