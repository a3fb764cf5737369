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

#ifndef ROADEVAL_ORACLE_HPP_
#define ROADEVAL_ORACLE_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "roadeval/annotations.hpp"
#include "roadeval/matching.hpp"

namespace roadeval::oracle {

// Synthetic scenario parameters. Ground truths are laid out one per grid cell
// unless `overlap_rate` stacks them; detections are derived from ground truths.
struct ScenarioConfig {
  std::uint64_t seed = 0;
  int images = 1;
  int min_gts = 1;
  int max_gts = 6;
  // Per ground truth: probability of emitting no detection.
  double drop_rate = 0.0;
  // Uniform +-jitter_px applied to each box coordinate.
  double jitter_px = 0.0;
  // Probability that a derived detection carries a different class.
  double class_swap_rate = 0.0;
  // Per ground truth: probability of an extra overlapping detection with a
  // random class and a random score.
  double clutter_rate = 0.0;
  // Per ground truth after the first: probability of being placed on top of
  // an earlier ground truth instead of in its own cell.
  double overlap_rate = 0.0;
  int classes = 12;
  int image_width = 256;
  int image_height = 256;
  double min_side = 12.0;
  double max_side = 80.0;
  // Emit polygon segmentations (chamfered boxes) for every instance.
  bool masks = true;

  // Throws ConfigError.
  void check() const;
};

struct Scenario {
  GroundTruthSet gt;
  DetectionSet dets;
};

// Pure function of `config`.
Scenario generate(const ScenarioConfig& config);

// Label map used by generated scenarios: the road-damage classes when
// `classes` is 12, else class1..classN.
LabelMap scenario_labels(int classes);

// Hard limit of the exhaustive matcher, per side.
inline constexpr std::size_t kMaxOracleItems = 12;

// Size of a maximum injective gt/det pairing with IoU >= iou_threshold,
// optionally restricted to same-class pairs. Exact, via memoized search over
// subsets of detections. Throws SizeError past kMaxOracleItems.
std::size_t max_matching(std::span<const Annotation> gts,
                         std::span<const Detection> dets, double iou_threshold,
                         bool class_constrained,
                         GeometryMode mode = GeometryMode::kBoxes);

// Independent transcription of the IoU-prioritized steps; shares no code
// with match_conventional.
MatchingResult reference_conventional(std::span<const Annotation> gts,
                                      std::span<const Detection> dets,
                                      const Thresholds& t);

// Greedy global matcher: all over-threshold pairs by IoU, accepted when both
// sides are free. Not the literal-steps conventional matcher.
MatchingResult match_greedy_global(std::span<const Annotation> gts,
                                   std::span<const Detection> dets,
                                   const Thresholds& t);

// Detections with score >= the confidence threshold, in input order.
std::vector<Detection> above_confidence(std::span<const Detection> dets,
                                        const Thresholds& t);

struct ClassDelta {
  int class_id = 0;
  std::string name;
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
};

// Modified minus conventional, summed over scenarios.
struct DeltaStats {
  GeometryMode mode = GeometryMode::kBoxes;
  std::int64_t scenarios = 0;
  ConfusionMatrix conventional;
  ConfusionMatrix modified;
  std::vector<ClassDelta> per_class;
  std::int64_t diagonal_delta = 0;
  std::int64_t off_diagonal_delta = 0;
};

// Runs both matchers over every scenario in `t.geometry_mode`. All configs
// must share one class count.
DeltaStats compare(std::span<const ScenarioConfig> configs,
                   const Thresholds& t);
// Same, over scenarios already in hand.
DeltaStats compare(std::span<const Scenario> scenarios, const Thresholds& t);

}  // namespace roadeval::oracle

#endif  // ROADEVAL_ORACLE_HPP_
