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

#ifndef ROADEVAL_MATCHING_HPP_
#define ROADEVAL_MATCHING_HPP_

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "roadeval/annotations.hpp"

namespace roadeval {

enum class GeometryMode { kBoxes, kMasks };
enum class Algorithm { kConventional, kModified };

std::string_view to_string(GeometryMode mode);
std::string_view to_string(Algorithm algorithm);
// Throw ConfigError on unknown names.
GeometryMode parse_geometry_mode(std::string_view name);
Algorithm parse_algorithm(std::string_view name);

struct Thresholds {
  double iou_threshold = 0.5;
  double confidence_threshold = 0.5;
  GeometryMode geometry_mode = GeometryMode::kBoxes;

  // Throws ConfigError unless both thresholds lie in (0, 1].
  void check() const;
};

// IoU of two instances under `mode`. In mask mode an instance without a mask
// falls back to its box.
double instance_iou(const Annotation& gt, const Detection& det,
                    GeometryMode mode);
bool uses_box_fallback(const Annotation& gt, const Detection& det,
                       GeometryMode mode);

// `gt` and `det` index into the spans handed to the matcher.
struct MatchPair {
  std::size_t gt = 0;
  std::size_t det = 0;
  double iou = 0.0;
  bool same_class = false;
  int gt_class = 0;
  int det_class = 0;

  friend bool operator==(const MatchPair&, const MatchPair&) = default;
};

struct Unmatched {
  std::size_t index = 0;
  int class_id = 0;

  friend bool operator==(const Unmatched&, const Unmatched&) = default;
};

// matched is ordered by gt index; the unmatched lists by index.
struct MatchingResult {
  std::vector<MatchPair> matched;
  std::vector<Unmatched> unmatched_gts;
  // Only detections with score >= confidence_threshold appear anywhere.
  std::vector<Unmatched> unmatched_dets;

  friend bool operator==(const MatchingResult&, const MatchingResult&) = default;
};

// Every (gt, det) pair with IoU >= iou_threshold among detections whose score
// clears the confidence threshold, ordered by (gt, det). All items must share
// one image.
std::vector<MatchPair> iou_table(std::span<const Annotation> gts,
                                 std::span<const Detection> dets,
                                 const Thresholds& t);

// IoU-prioritized matcher, class-agnostic:
//   1. over-threshold pairs, 2. sorted by IoU,
//   3. each gt keeps only its best candidate,
//   4-5. each detection keeps only its best remaining gt.
// Ties: IoU desc, score desc, det id asc, gt id asc.
MatchingResult match_conventional(std::span<const Annotation> gts,
                                  std::span<const Detection> dets,
                                  const Thresholds& t);

// Class-prioritized matcher iterated to a fixed point. An unmatched gt claims
// its best candidate ranked by (same class, IoU, score, det id); a detection
// held by another gt is taken over when the claimant ranks higher for it by
// (same class, IoU, gt id), and the displaced gt re-enters the pool.
MatchingResult match_modified(std::span<const Annotation> gts,
                              std::span<const Detection> dets,
                              const Thresholds& t);

MatchingResult match(Algorithm algorithm, std::span<const Annotation> gts,
                     std::span<const Detection> dets, const Thresholds& t);

// (C+1) x (C+1) counts. Rows: true class in label order, then "unclassified
// detection". Columns: predicted class, then "left detection".
class ConfusionMatrix {
 public:
  ConfusionMatrix() = default;
  explicit ConfusionMatrix(LabelMap labels);

  const LabelMap& labels() const { return labels_; }
  std::size_t classes() const { return labels_.size(); }
  // Row/column index of the extra "unclassified detection" row and
  // "left detection" column.
  std::size_t background() const { return labels_.size(); }

  std::int64_t at(std::size_t row, std::size_t col) const {
    return counts_[row * (classes() + 1) + col];
  }
  std::int64_t& at(std::size_t row, std::size_t col) {
    return counts_[row * (classes() + 1) + col];
  }
  std::int64_t row_sum(std::size_t row) const;
  std::int64_t col_sum(std::size_t col) const;
  std::int64_t total() const;
  std::int64_t diagonal_sum() const;

  // Adds one image's result. Throws ReferenceError for unknown classes.
  void add(const MatchingResult& result);
  ConfusionMatrix& operator+=(const ConfusionMatrix& other);

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  LabelMap labels_;
  std::vector<std::int64_t> counts_ = std::vector<std::int64_t>(1, 0);
};

ConfusionMatrix accumulate(std::span<const MatchingResult> results,
                           const LabelMap& labels);

// Items of one image, addressed by position in the owning set.
struct ImageItems {
  std::int64_t image_id = 0;
  std::vector<Annotation> gts;
  std::vector<Detection> dets;
};

// Groups the sets per ground-truth image (in image order). Detections for
// images absent from the ground truth throw ReferenceError.
std::vector<ImageItems> group_by_image(const GroundTruthSet& gt,
                                       const DetectionSet& dets);

// Matches every image and sums the matrices.
ConfusionMatrix build_confusion_matrix(std::span<const ImageItems> images,
                                       const LabelMap& labels,
                                       Algorithm algorithm,
                                       const Thresholds& t);

}  // namespace roadeval

#endif  // ROADEVAL_MATCHING_HPP_
