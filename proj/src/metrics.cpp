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

#include "roadeval/metrics.hpp"

#include <algorithm>
#include <map>
#include <numeric>

namespace roadeval {

namespace {

constexpr int kRecallPoints = 101;

bool in_size(double area, std::optional<SizeClass> size) {
  return !size || size_class(area) == *size;
}

// Evaluated detections of one (class, image) cell.
struct CellMatch {
  std::vector<std::uint8_t> matched;
  std::vector<std::uint8_t> ignored;
  std::int64_t eligible = 0;
};

std::vector<ImageItems> group_flat(std::span<const Annotation> gts,
                                   std::span<const Detection> dets) {
  std::map<std::int64_t, ImageItems> grouped;
  for (const Annotation& a : gts) {
    auto& item = grouped[a.image_id];
    item.image_id = a.image_id;
    item.gts.push_back(a);
  }
  for (const Detection& d : dets) {
    auto& item = grouped[d.image_id];
    item.image_id = d.image_id;
    item.dets.push_back(d);
  }
  std::vector<ImageItems> out;
  out.reserve(grouped.size());
  for (auto& [id, item] : grouped) out.push_back(std::move(item));
  return out;
}

LabelMap labels_for(std::span<const Annotation> gts,
                    std::span<const Detection> dets) {
  std::map<int, bool> ids;
  for (const Annotation& a : gts) ids[a.class_id] = true;
  for (const Detection& d : dets) ids[d.class_id] = true;
  std::vector<Category> entries;
  for (const auto& [id, unused] : ids) {
    entries.push_back({id, "class" + std::to_string(id)});
  }
  return LabelMap(std::move(entries));
}

double mean_of_valid(const std::vector<double>& values) {
  double sum = 0.0;
  int count = 0;
  for (double v : values) {
    if (v <= kNoGroundTruth) continue;
    sum += v;
    ++count;
  }
  return count == 0 ? kNoGroundTruth : sum / count;
}

}  // namespace

std::vector<PerClassMetrics> precision_recall(const ConfusionMatrix& cm) {
  std::vector<PerClassMetrics> out;
  const auto entries = cm.labels().entries();
  for (std::size_t c = 0; c < cm.classes(); ++c) {
    PerClassMetrics m;
    m.class_id = entries[c].id;
    m.name = entries[c].name;
    m.true_positives = cm.at(c, c);
    m.support_gt = cm.row_sum(c);
    m.support_det = cm.col_sum(c);
    if (m.support_det == 0) {
      m.precision_undefined = true;
    } else {
      m.precision = static_cast<double>(m.true_positives) /
                    static_cast<double>(m.support_det);
    }
    if (m.support_gt == 0) {
      m.recall_undefined = true;
    } else {
      m.recall = static_cast<double>(m.true_positives) /
                 static_cast<double>(m.support_gt);
    }
    out.push_back(std::move(m));
  }
  return out;
}

std::array<IndexValue, 12> indices(const AggregateMetrics& m) {
  return {{{"Precision mAP", "map_50_95", m.map_50_95},
           {"Precision mAP@.50IOU", "map_50", m.map_50},
           {"Precision mAP@.75IOU", "map_75", m.map_75},
           {"Precision mAP (large)", "map_large", m.map_large},
           {"Precision mAP (medium)", "map_medium", m.map_medium},
           {"Precision mAP (small)", "map_small", m.map_small},
           {"Recall AR@1", "ar_1", m.ar_1},
           {"Recall AR@10", "ar_10", m.ar_10},
           {"Recall AR@100", "ar_100", m.ar_100},
           {"Recall AR@100 (large)", "ar_100_large", m.ar_100_large},
           {"Recall AR@100 (medium)", "ar_100_medium", m.ar_100_medium},
           {"Recall AR@100 (small)", "ar_100_small", m.ar_100_small}}};
}

std::array<double, 10> iou_sweep() {
  std::array<double, 10> t{};
  for (int i = 0; i < 10; ++i) t[i] = (50 + 5 * i) / 100.0;
  return t;
}

// ---------------------------------------------------------------------------

CocoEvaluator::CocoEvaluator(std::span<const ImageItems> images,
                             const LabelMap& labels, GeometryMode mode)
    : labels_(labels), cells_(labels.size()) {
  for (auto& per_class : cells_) per_class.resize(images.size());
  for (std::size_t img = 0; img < images.size(); ++img) {
    const ImageItems& items = images[img];
    std::vector<std::vector<std::size_t>> gts_of(labels.size());
    std::vector<std::vector<std::size_t>> dets_of(labels.size());
    for (std::size_t g = 0; g < items.gts.size(); ++g) {
      if (auto c = labels.index_of(items.gts[g].class_id)) gts_of[*c].push_back(g);
    }
    for (std::size_t d = 0; d < items.dets.size(); ++d) {
      if (auto c = labels.index_of(items.dets[d].class_id)) {
        dets_of[*c].push_back(d);
      }
    }
    for (std::size_t c = 0; c < labels.size(); ++c) {
      Cell& cell = cells_[c][img];
      std::vector<std::size_t>& dl = dets_of[c];
      std::stable_sort(dl.begin(), dl.end(), [&](std::size_t a, std::size_t b) {
        return items.dets[a].score > items.dets[b].score;
      });
      for (std::size_t g : gts_of[c]) cell.gt_area.push_back(items.gts[g].area);
      cell.iou.reserve(dl.size() * gts_of[c].size());
      for (std::size_t d : dl) {
        const Detection& det = items.dets[d];
        cell.det_score.push_back(det.score);
        cell.det_area.push_back(
            mode == GeometryMode::kMasks && det.mask
                ? static_cast<double>(det.mask->area())
                : det.bbox.area());
        for (std::size_t g : gts_of[c]) {
          cell.iou.push_back(instance_iou(items.gts[g], det, mode));
        }
      }
    }
  }
}

CocoEvaluator::Curve CocoEvaluator::curve(int class_id, double iou_threshold,
                                          std::optional<SizeClass> size,
                                          int max_dets) const {
  Curve out;
  const auto c = labels_.index_of(class_id);
  if (!c) return out;

  struct Scored {
    double score;
    bool tp;
  };
  std::vector<Scored> scored;
  const double threshold = std::min(iou_threshold, 1.0 - 1e-10);
  for (const Cell& cell : cells_[*c]) {
    const std::size_t n_gt = cell.gt_area.size();
    const std::size_t n_det =
        std::min(cell.det_score.size(), static_cast<std::size_t>(max_dets));

    // Non-ignored ground truths first, stable.
    std::vector<std::size_t> gt_order(n_gt);
    std::iota(gt_order.begin(), gt_order.end(), 0);
    std::vector<std::uint8_t> gt_ignore(n_gt);
    for (std::size_t g = 0; g < n_gt; ++g) {
      gt_ignore[g] = in_size(cell.gt_area[g], size) ? 0 : 1;
      if (!gt_ignore[g]) ++out.eligible;
    }
    std::stable_sort(gt_order.begin(), gt_order.end(),
                     [&](std::size_t a, std::size_t b) {
                       return gt_ignore[a] < gt_ignore[b];
                     });

    std::vector<std::uint8_t> gt_taken(n_gt, 0);
    for (std::size_t d = 0; d < n_det; ++d) {
      double best = threshold;
      std::ptrdiff_t m = -1;
      for (std::size_t g : gt_order) {
        if (gt_taken[g]) continue;
        if (m >= 0 && !gt_ignore[m] && gt_ignore[g]) break;
        const double iou = cell.iou[d * n_gt + g];
        if (iou < best) continue;
        best = iou;
        m = static_cast<std::ptrdiff_t>(g);
      }
      bool ignored;
      bool tp = false;
      if (m >= 0) {
        gt_taken[m] = 1;
        ignored = gt_ignore[m] != 0;
        tp = true;
      } else {
        ignored = !in_size(cell.det_area[d], size);
      }
      if (!ignored) scored.push_back({cell.det_score[d], tp});
    }
  }
  if (out.eligible == 0) return out;

  std::stable_sort(scored.begin(), scored.end(),
                   [](const Scored& a, const Scored& b) {
                     return a.score > b.score;
                   });
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  for (const Scored& s : scored) {
    s.tp ? ++tp : ++fp;
    out.recall.push_back(static_cast<double>(tp) / out.eligible);
    out.precision.push_back(static_cast<double>(tp) / (tp + fp));
  }
  return out;
}

double CocoEvaluator::average_precision(int class_id, double iou_threshold,
                                        std::optional<SizeClass> size,
                                        int max_dets) const {
  Curve cv = curve(class_id, iou_threshold, size, max_dets);
  if (cv.eligible == 0) return kNoGroundTruth;
  auto& pr = cv.precision;
  for (std::size_t i = pr.size(); i-- > 1;) {
    pr[i - 1] = std::max(pr[i - 1], pr[i]);
  }
  double sum = 0.0;
  for (int r = 0; r < kRecallPoints; ++r) {
    const double level = r / 100.0;
    auto it = std::lower_bound(cv.recall.begin(), cv.recall.end(), level);
    if (it == cv.recall.end()) continue;
    sum += pr[static_cast<std::size_t>(it - cv.recall.begin())];
  }
  return sum / kRecallPoints;
}

double CocoEvaluator::recall(int class_id, double iou_threshold,
                             std::optional<SizeClass> size,
                             int max_dets) const {
  Curve cv = curve(class_id, iou_threshold, size, max_dets);
  if (cv.eligible == 0) return kNoGroundTruth;
  return cv.recall.empty() ? 0.0 : cv.recall.back();
}

std::int64_t CocoEvaluator::eligible_gts(int class_id,
                                         std::optional<SizeClass> size) const {
  const auto c = labels_.index_of(class_id);
  if (!c) return 0;
  std::int64_t n = 0;
  for (const Cell& cell : cells_[*c]) {
    for (double area : cell.gt_area) n += in_size(area, size) ? 1 : 0;
  }
  return n;
}

double CocoEvaluator::mean_ap(std::optional<SizeClass> size,
                              int max_dets) const {
  std::vector<double> per_class;
  for (const Category& cat : labels_.entries()) {
    if (eligible_gts(cat.id, size) == 0) continue;
    double sum = 0.0;
    for (double t : iou_sweep()) {
      sum += average_precision(cat.id, t, size, max_dets);
    }
    per_class.push_back(sum / 10);
  }
  return mean_of_valid(per_class);
}

double CocoEvaluator::mean_ap_at(double iou_threshold, int max_dets) const {
  std::vector<double> per_class;
  for (const Category& cat : labels_.entries()) {
    per_class.push_back(
        average_precision(cat.id, iou_threshold, std::nullopt, max_dets));
  }
  return mean_of_valid(per_class);
}

double CocoEvaluator::mean_recall(std::optional<SizeClass> size,
                                  int max_dets) const {
  std::vector<double> per_class;
  for (const Category& cat : labels_.entries()) {
    if (eligible_gts(cat.id, size) == 0) continue;
    double sum = 0.0;
    for (double t : iou_sweep()) sum += recall(cat.id, t, size, max_dets);
    per_class.push_back(sum / 10);
  }
  return mean_of_valid(per_class);
}

AggregateMetrics CocoEvaluator::summarize() const {
  AggregateMetrics m;
  m.map_50_95 = mean_ap(std::nullopt);
  m.map_50 = mean_ap_at(0.5);
  m.map_75 = mean_ap_at(0.75);
  m.map_small = mean_ap(SizeClass::kSmall);
  m.map_medium = mean_ap(SizeClass::kMedium);
  m.map_large = mean_ap(SizeClass::kLarge);
  m.ar_1 = mean_recall(std::nullopt, 1);
  m.ar_10 = mean_recall(std::nullopt, 10);
  m.ar_100 = mean_recall(std::nullopt, 100);
  m.ar_100_small = mean_recall(SizeClass::kSmall, 100);
  m.ar_100_medium = mean_recall(SizeClass::kMedium, 100);
  m.ar_100_large = mean_recall(SizeClass::kLarge, 100);
  return m;
}

// ---------------------------------------------------------------------------

double average_precision(std::span<const Annotation> gts,
                         std::span<const Detection> dets, int class_id,
                         double iou_threshold, std::optional<SizeClass> size,
                         int max_dets, GeometryMode mode) {
  const std::vector<ImageItems> images = group_flat(gts, dets);
  const CocoEvaluator eval(images, labels_for(gts, dets), mode);
  return eval.average_precision(class_id, iou_threshold, size, max_dets);
}

double average_recall(std::span<const Annotation> gts,
                      std::span<const Detection> dets, const LabelMap& labels,
                      int max_dets, std::optional<SizeClass> size,
                      GeometryMode mode) {
  const std::vector<ImageItems> images = group_flat(gts, dets);
  const CocoEvaluator eval(images, labels, mode);
  return eval.mean_recall(size, max_dets);
}

AggregateMetrics mean_ap(std::span<const Annotation> gts,
                         std::span<const Detection> dets,
                         const LabelMap& labels, GeometryMode mode) {
  const std::vector<ImageItems> images = group_flat(gts, dets);
  const CocoEvaluator eval(images, labels, mode);
  AggregateMetrics m;
  m.map_50_95 = eval.mean_ap(std::nullopt);
  m.map_50 = eval.mean_ap_at(0.5);
  m.map_75 = eval.mean_ap_at(0.75);
  m.map_small = eval.mean_ap(SizeClass::kSmall);
  m.map_medium = eval.mean_ap(SizeClass::kMedium);
  m.map_large = eval.mean_ap(SizeClass::kLarge);
  return m;
}

FullReport full_report(const GroundTruthSet& gt, const DetectionSet& dets,
                       const Thresholds& thresholds, Algorithm algorithm) {
  thresholds.check();
  const std::vector<ImageItems> images = group_by_image(gt, dets);
  FullReport out;
  out.matrix =
      build_confusion_matrix(images, gt.labels, algorithm, thresholds);
  MetricsReport& r = out.report;
  r.per_class = precision_recall(out.matrix);
  r.aggregate =
      CocoEvaluator(images, gt.labels, thresholds.geometry_mode).summarize();
  r.thresholds = thresholds;
  r.algorithm = algorithm;
  r.images = static_cast<std::int64_t>(gt.images.size());
  r.ground_truths = static_cast<std::int64_t>(gt.annotations.size());
  r.detections = static_cast<std::int64_t>(dets.detections.size());
  if (thresholds.geometry_mode == GeometryMode::kMasks) {
    for (const Annotation& a : gt.annotations) r.mask_fallbacks += a.mask ? 0 : 1;
    for (const Detection& d : dets.detections) r.mask_fallbacks += d.mask ? 0 : 1;
  }
  return out;
}

}  // namespace roadeval
