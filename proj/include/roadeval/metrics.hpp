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

#ifndef ROADEVAL_METRICS_HPP_
#define ROADEVAL_METRICS_HPP_

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "roadeval/annotations.hpp"
#include "roadeval/matching.hpp"

namespace roadeval {

struct PerClassMetrics {
  int class_id = 0;
  std::string name;
  double precision = 0.0;
  double recall = 0.0;
  std::int64_t true_positives = 0;
  std::int64_t support_gt = 0;   // row sum
  std::int64_t support_det = 0;  // column sum
  // Set when the denominator was 0 and the ratio was reported as 0.
  bool precision_undefined = false;
  bool recall_undefined = false;
};

// precision = diagonal / column sum, recall = diagonal / row sum.
std::vector<PerClassMetrics> precision_recall(const ConfusionMatrix& cm);

// -1 means no eligible ground truth.
inline constexpr double kNoGroundTruth = -1.0;

struct AggregateMetrics {
  double map_50_95 = kNoGroundTruth;
  double map_50 = kNoGroundTruth;
  double map_75 = kNoGroundTruth;
  double map_small = kNoGroundTruth;
  double map_medium = kNoGroundTruth;
  double map_large = kNoGroundTruth;
  double ar_1 = kNoGroundTruth;
  double ar_10 = kNoGroundTruth;
  double ar_100 = kNoGroundTruth;
  double ar_100_small = kNoGroundTruth;
  double ar_100_medium = kNoGroundTruth;
  double ar_100_large = kNoGroundTruth;

  friend bool operator==(const AggregateMetrics&, const AggregateMetrics&) = default;
};

struct IndexValue {
  std::string_view index;  // e.g. "Precision mAP@.50IOU"
  std::string_view key;    // e.g. "map_50"
  double value;
};

// The twelve indices in report order.
std::array<IndexValue, 12> indices(const AggregateMetrics& m);

// IoU thresholds 0.50, 0.55, ..., 0.95.
std::array<double, 10> iou_sweep();

// COCO-style evaluation: per class and image, detections in score order
// greedily take the best unmatched ground truth with IoU >= threshold.
// Ground truths outside a size filter are ignore regions, as are unmatched
// detections outside it. AP is the 101-point interpolated precision envelope.
class CocoEvaluator {
 public:
  CocoEvaluator(std::span<const ImageItems> images, const LabelMap& labels,
                GeometryMode mode);

  // -1 when the class has no eligible ground truth.
  double average_precision(int class_id, double iou_threshold,
                           std::optional<SizeClass> size, int max_dets) const;
  double recall(int class_id, double iou_threshold,
                std::optional<SizeClass> size, int max_dets) const;
  // Eligible ground-truth count for a class under a size filter.
  std::int64_t eligible_gts(int class_id, std::optional<SizeClass> size) const;

  // Mean over classes (skipping -1) of the mean over the threshold sweep.
  double mean_ap(std::optional<SizeClass> size, int max_dets = 100) const;
  double mean_ap_at(double iou_threshold, int max_dets = 100) const;
  double mean_recall(std::optional<SizeClass> size, int max_dets) const;

  AggregateMetrics summarize() const;

 private:
  struct Cell {
    std::vector<double> gt_area;
    std::vector<double> det_area;
    std::vector<double> det_score;  // sorted descending
    std::vector<double> iou;        // det-major, det_score order
  };
  struct Curve {
    std::vector<double> recall;
    std::vector<double> precision;
    std::int64_t eligible = 0;
  };

  Curve curve(int class_id, double iou_threshold, std::optional<SizeClass> size,
              int max_dets) const;

  LabelMap labels_;
  // cells_[class index][image]
  std::vector<std::vector<Cell>> cells_;
};

// Convenience wrappers over a flat list of instances spanning any number of
// images (grouped by image_id).
double average_precision(std::span<const Annotation> gts,
                         std::span<const Detection> dets, int class_id,
                         double iou_threshold, std::optional<SizeClass> size,
                         int max_dets, GeometryMode mode);
double average_recall(std::span<const Annotation> gts,
                      std::span<const Detection> dets, const LabelMap& labels,
                      int max_dets, std::optional<SizeClass> size,
                      GeometryMode mode);
// Fills the six mAP fields; the AR fields stay at -1.
AggregateMetrics mean_ap(std::span<const Annotation> gts,
                         std::span<const Detection> dets,
                         const LabelMap& labels, GeometryMode mode);

struct MetricsReport {
  std::vector<PerClassMetrics> per_class;
  AggregateMetrics aggregate;
  Thresholds thresholds;
  Algorithm algorithm = Algorithm::kConventional;
  // Instances without a mask, evaluated by box geometry in mask mode.
  std::int64_t mask_fallbacks = 0;
  std::int64_t images = 0;
  std::int64_t ground_truths = 0;
  std::int64_t detections = 0;
};

struct FullReport {
  MetricsReport report;
  ConfusionMatrix matrix;
};

// Confusion matrix and per-class P/R from `algorithm`; AP/AR from the
// COCO-style evaluator, which does not depend on `algorithm`.
FullReport full_report(const GroundTruthSet& gt, const DetectionSet& dets,
                       const Thresholds& thresholds, Algorithm algorithm);

}  // namespace roadeval

#endif  // ROADEVAL_METRICS_HPP_
