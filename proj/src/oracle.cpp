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
#include <cmath>
#include <random>

#include "roadeval/errors.hpp"

namespace roadeval::oracle {

namespace {

// Portable sampling on top of mt19937_64 (the standard distributions are
// implementation-defined).
class Sampler {
 public:
  explicit Sampler(std::uint64_t seed) : rng_(seed) {}

  double unit() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }
  int integer(int lo, int hi) {  // inclusive
    return lo + static_cast<int>(rng_() % static_cast<std::uint64_t>(hi - lo + 1));
  }
  bool chance(double p) { return unit() < p; }

 private:
  std::mt19937_64 rng_;
};

Polygon chamfered(const BBox& b) {
  const double c = 0.25 * std::min(b.w, b.h);
  return Polygon{{{b.x + c, b.y},
                  {b.right() - c, b.y},
                  {b.right(), b.y + c},
                  {b.right(), b.bottom() - c},
                  {b.right() - c, b.bottom()},
                  {b.x + c, b.bottom()},
                  {b.x, b.bottom() - c},
                  {b.x, b.y + c}}};
}

BBox clamp_box(BBox b, int width, int height) {
  b.w = std::max(b.w, 1.0);
  b.h = std::max(b.h, 1.0);
  b.x = std::clamp(b.x, 0.0, width - b.w);
  b.y = std::clamp(b.y, 0.0, height - b.h);
  return b;
}

BBox jitter_box(const BBox& b, double px, Sampler& s, int width, int height) {
  if (px <= 0.0) return b;
  return clamp_box({b.x + s.uniform(-px, px), b.y + s.uniform(-px, px),
                    b.w + s.uniform(-px, px), b.h + s.uniform(-px, px)},
                   width, height);
}

int other_class(int class_id, int classes, Sampler& s) {
  if (classes < 2) return class_id;
  const int pick = s.integer(1, classes - 1);
  return pick >= class_id ? pick + 1 : pick;
}

// IoU, written independently of the geometry module.
double oracle_iou(const Annotation& g, const Detection& d, GeometryMode mode) {
  if (mode == GeometryMode::kMasks && g.mask && d.mask) {
    const MaskPatch& a = *g.mask;
    const MaskPatch& b = *d.mask;
    if (a.frame_width() != b.frame_width() ||
        a.frame_height() != b.frame_height()) {
      throw GeometryError("oracle: mask frames differ");
    }
    std::int64_t inter = 0;
    for (int r = 0; r < a.local().height(); ++r) {
      const int fy = r + a.offset_y();
      const int br = fy - b.offset_y();
      if (br < 0 || br >= b.local().height()) continue;
      for (int c = 0; c < a.local().width(); ++c) {
        if (!a.local().get(r, c)) continue;
        const int bc = c + a.offset_x() - b.offset_x();
        if (bc >= 0 && bc < b.local().width() && b.local().get(br, bc)) ++inter;
      }
    }
    const std::int64_t uni = a.area() + b.area() - inter;
    return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
  }
  const BBox& p = g.bbox;
  const BBox& q = d.bbox;
  const double w = std::min(p.x + p.w, q.x + q.w) - std::max(p.x, q.x);
  const double h = std::min(p.y + p.h, q.y + q.h) - std::max(p.y, q.y);
  const double inter = (w > 0.0 && h > 0.0) ? w * h : 0.0;
  const double uni = (p.x + p.w - p.x) * (p.y + p.h - p.y) +
                     (q.x + q.w - q.x) * (q.y + q.h - q.y) - inter;
  return uni <= 0.0 ? 0.0 : inter / uni;
}

struct Edge {
  std::size_t g;
  std::size_t d;
  double iou;
};

}  // namespace

void ScenarioConfig::check() const {
  auto rate = [](double r, const char* name) {
    if (!(r >= 0.0 && r <= 1.0)) {
      throw ConfigError(std::string(name) + " must lie in [0, 1]");
    }
  };
  rate(drop_rate, "drop_rate");
  rate(class_swap_rate, "class_swap_rate");
  rate(clutter_rate, "clutter_rate");
  rate(overlap_rate, "overlap_rate");
  if (images < 1 || min_gts < 0 || max_gts < min_gts || max_gts < 1) {
    throw ConfigError("scenario ranges must be nonempty");
  }
  if (classes < 1 || image_width < 8 || image_height < 8) {
    throw ConfigError("scenario needs >= 1 class and an image of >= 8x8");
  }
  if (!(min_side >= 1.0 && max_side >= min_side) || jitter_px < 0.0) {
    throw ConfigError("invalid object size or jitter range");
  }
}

LabelMap scenario_labels(int classes) {
  if (classes == 12) return LabelMap::road_damage();
  std::vector<Category> entries;
  for (int c = 1; c <= classes; ++c) {
    entries.push_back({c, "class" + std::to_string(c)});
  }
  return LabelMap(std::move(entries));
}

Scenario generate(const ScenarioConfig& config) {
  config.check();
  Sampler s(config.seed);
  Scenario out;
  out.gt.labels = scenario_labels(config.classes);
  out.dets.labels = out.gt.labels;

  const int cols =
      static_cast<int>(std::ceil(std::sqrt(static_cast<double>(config.max_gts))));
  const int rows = (config.max_gts + cols - 1) / cols;
  const double cell_w = static_cast<double>(config.image_width) / cols;
  const double cell_h = static_cast<double>(config.image_height) / rows;
  const int W = config.image_width;
  const int H = config.image_height;

  std::int64_t ann_id = 0;
  std::int64_t det_id = 0;
  for (int img = 1; img <= config.images; ++img) {
    out.gt.images.push_back(
        {img, "synthetic_" + std::to_string(img) + ".png", W, H});
    const int n = s.integer(config.min_gts, config.max_gts);

    std::vector<int> cells(static_cast<std::size_t>(cols * rows));
    for (std::size_t k = 0; k < cells.size(); ++k) cells[k] = static_cast<int>(k);
    for (std::size_t k = cells.size(); k > 1; --k) {
      std::swap(cells[k - 1], cells[static_cast<std::size_t>(
                                  s.integer(0, static_cast<int>(k) - 1))]);
    }

    std::vector<BBox> boxes;
    for (int k = 0; k < n; ++k) {
      BBox box;
      if (k > 0 && s.chance(config.overlap_rate)) {
        const BBox& base = boxes[static_cast<std::size_t>(
            s.integer(0, static_cast<int>(boxes.size()) - 1))];
        box.w = base.w * s.uniform(0.7, 1.3);
        box.h = base.h * s.uniform(0.7, 1.3);
        box.x = base.x + s.uniform(-0.25, 0.25) * base.w;
        box.y = base.y + s.uniform(-0.25, 0.25) * base.h;
        box = clamp_box(box, W, H);
      } else {
        const int cell = cells[static_cast<std::size_t>(k)];
        const double cx = (cell % cols) * cell_w;
        const double cy = (cell / cols) * cell_h;
        const double max_w = std::max(1.0, std::min(config.max_side, cell_w - 2));
        const double max_h = std::max(1.0, std::min(config.max_side, cell_h - 2));
        box.w = s.uniform(std::min(config.min_side, max_w), max_w);
        box.h = s.uniform(std::min(config.min_side, max_h), max_h);
        box.x = cx + 1 + s.uniform(0.0, std::max(0.0, cell_w - 2 - box.w));
        box.y = cy + 1 + s.uniform(0.0, std::max(0.0, cell_h - 2 - box.h));
        box = clamp_box(box, W, H);
      }
      boxes.push_back(box);

      Annotation a;
      a.id = ++ann_id;
      a.image_id = img;
      a.class_id = s.integer(1, config.classes);
      a.bbox = box;
      if (config.masks) a.segmentation = std::vector<Polygon>{chamfered(box)};
      out.gt.annotations.push_back(a);

      if (!s.chance(config.drop_rate)) {
        Detection d;
        d.id = ++det_id;
        d.image_id = img;
        d.class_id = s.chance(config.class_swap_rate)
                         ? other_class(a.class_id, config.classes, s)
                         : a.class_id;
        d.bbox = jitter_box(box, config.jitter_px, s, W, H);
        d.score = s.uniform(0.5, 1.0);
        if (config.masks) {
          d.segmentation = std::vector<Polygon>{chamfered(d.bbox)};
        }
        out.dets.detections.push_back(d);
      }
      if (s.chance(config.clutter_rate)) {
        Detection d;
        d.id = ++det_id;
        d.image_id = img;
        d.class_id = s.integer(1, config.classes);
        const double spread = 0.2 * std::min(box.w, box.h);
        d.bbox = jitter_box(box, std::max(config.jitter_px, spread), s, W, H);
        d.score = s.unit();
        if (config.masks) {
          d.segmentation = std::vector<Polygon>{chamfered(d.bbox)};
        }
        out.dets.detections.push_back(d);
      }
    }
  }
  materialize_masks(out.gt);
  materialize_masks(out.dets, out.gt.images);
  return out;
}

std::size_t max_matching(std::span<const Annotation> gts,
                         std::span<const Detection> dets, double iou_threshold,
                         bool class_constrained, GeometryMode mode) {
  if (gts.size() > kMaxOracleItems || dets.size() > kMaxOracleItems) {
    throw SizeError("max_matching: instance " + std::to_string(gts.size()) +
                    "x" + std::to_string(dets.size()) + " exceeds " +
                    std::to_string(kMaxOracleItems) + "x" +
                    std::to_string(kMaxOracleItems));
  }
  const std::size_t n_gt = gts.size();
  const std::size_t n_det = dets.size();
  std::vector<std::uint32_t> allowed(n_gt, 0);  // bitset of dets per gt
  for (std::size_t g = 0; g < n_gt; ++g) {
    for (std::size_t d = 0; d < n_det; ++d) {
      if (class_constrained && gts[g].class_id != dets[d].class_id) continue;
      if (oracle_iou(gts[g], dets[d], mode) >= iou_threshold) {
        allowed[g] |= 1u << d;
      }
    }
  }
  // best[g][used] = largest matching among gts g.. with dets `used` taken.
  const std::size_t masks = std::size_t{1} << n_det;
  std::vector<int> memo((n_gt + 1) * masks, -1);
  auto solve = [&](auto&& self, std::size_t g, std::uint32_t used) -> int {
    if (g == n_gt) return 0;
    int& slot = memo[g * masks + used];
    if (slot >= 0) return slot;
    int best = self(self, g + 1, used);
    for (std::uint32_t free = allowed[g] & ~used; free != 0; free &= free - 1) {
      const std::uint32_t bit = free & (~free + 1);
      best = std::max(best, 1 + self(self, g + 1, used | bit));
    }
    slot = best;
    return best;
  };
  return static_cast<std::size_t>(solve(solve, 0, 0));
}

std::vector<Detection> above_confidence(std::span<const Detection> dets,
                                        const Thresholds& t) {
  std::vector<Detection> out;
  for (const Detection& d : dets) {
    if (d.score >= t.confidence_threshold) out.push_back(d);
  }
  return out;
}

MatchingResult reference_conventional(std::span<const Annotation> gts,
                                      std::span<const Detection> dets,
                                      const Thresholds& t) {
  // Step 1: every over-threshold candidate.
  std::vector<Edge> candidates;
  for (std::size_t g = 0; g < gts.size(); ++g) {
    for (std::size_t d = 0; d < dets.size(); ++d) {
      if (dets[d].score < t.confidence_threshold) continue;
      const double iou = oracle_iou(gts[g], dets[d], t.geometry_mode);
      if (iou >= t.iou_threshold) candidates.push_back({g, d, iou});
    }
  }
  // Steps 2 and 4 ("descending order") as a strict "better than" relation.
  auto better = [&](const Edge& a, const Edge& b) {
    if (a.iou > b.iou) return true;
    if (a.iou < b.iou) return false;
    if (dets[a.d].score > dets[b.d].score) return true;
    if (dets[a.d].score < dets[b.d].score) return false;
    if (dets[a.d].id < dets[b.d].id) return true;
    if (dets[a.d].id > dets[b.d].id) return false;
    return gts[a.g].id < gts[b.g].id;
  };
  // Step 3: one survivor per ground truth.
  std::vector<Edge> survivors;
  for (std::size_t g = 0; g < gts.size(); ++g) {
    const Edge* best = nullptr;
    for (const Edge& e : candidates) {
      if (e.g == g && (best == nullptr || better(e, *best))) best = &e;
    }
    if (best != nullptr) survivors.push_back(*best);
  }
  // Step 5: one survivor per detection.
  std::vector<const Edge*> by_det(dets.size(), nullptr);
  for (const Edge& e : survivors) {
    if (by_det[e.d] == nullptr || better(e, *by_det[e.d])) by_det[e.d] = &e;
  }
  // Steps 6-10.
  MatchingResult result;
  std::vector<bool> det_matched(dets.size(), false);
  for (std::size_t g = 0; g < gts.size(); ++g) {
    const Edge* hit = nullptr;
    for (const Edge* e : by_det) {
      if (e != nullptr && e->g == g) hit = e;
    }
    if (hit != nullptr) {
      det_matched[hit->d] = true;
      result.matched.push_back({g, hit->d, hit->iou,
                                gts[g].class_id == dets[hit->d].class_id,
                                gts[g].class_id, dets[hit->d].class_id});
    } else {
      result.unmatched_gts.push_back({g, gts[g].class_id});
    }
  }
  for (std::size_t d = 0; d < dets.size(); ++d) {
    if (!det_matched[d] && dets[d].score >= t.confidence_threshold) {
      result.unmatched_dets.push_back({d, dets[d].class_id});
    }
  }
  return result;
}

MatchingResult match_greedy_global(std::span<const Annotation> gts,
                                   std::span<const Detection> dets,
                                   const Thresholds& t) {
  std::vector<Edge> edges;
  for (std::size_t g = 0; g < gts.size(); ++g) {
    for (std::size_t d = 0; d < dets.size(); ++d) {
      if (dets[d].score < t.confidence_threshold) continue;
      const double iou = oracle_iou(gts[g], dets[d], t.geometry_mode);
      if (iou >= t.iou_threshold) edges.push_back({g, d, iou});
    }
  }
  std::sort(edges.begin(), edges.end(), [&](const Edge& a, const Edge& b) {
    if (a.iou != b.iou) return a.iou > b.iou;
    if (dets[a.d].score != dets[b.d].score) {
      return dets[a.d].score > dets[b.d].score;
    }
    if (dets[a.d].id != dets[b.d].id) return dets[a.d].id < dets[b.d].id;
    return gts[a.g].id < gts[b.g].id;
  });
  std::vector<std::ptrdiff_t> gt_to(gts.size(), -1);
  std::vector<bool> det_used(dets.size(), false);
  std::vector<double> gt_iou(gts.size(), 0.0);
  for (const Edge& e : edges) {
    if (gt_to[e.g] >= 0 || det_used[e.d]) continue;
    gt_to[e.g] = static_cast<std::ptrdiff_t>(e.d);
    gt_iou[e.g] = e.iou;
    det_used[e.d] = true;
  }
  MatchingResult result;
  for (std::size_t g = 0; g < gts.size(); ++g) {
    if (gt_to[g] >= 0) {
      const auto d = static_cast<std::size_t>(gt_to[g]);
      result.matched.push_back({g, d, gt_iou[g],
                                gts[g].class_id == dets[d].class_id,
                                gts[g].class_id, dets[d].class_id});
    } else {
      result.unmatched_gts.push_back({g, gts[g].class_id});
    }
  }
  for (std::size_t d = 0; d < dets.size(); ++d) {
    if (!det_used[d] && dets[d].score >= t.confidence_threshold) {
      result.unmatched_dets.push_back({d, dets[d].class_id});
    }
  }
  return result;
}

DeltaStats compare(std::span<const Scenario> scenarios, const Thresholds& t) {
  t.check();
  DeltaStats stats;
  stats.mode = t.geometry_mode;
  if (scenarios.empty()) return stats;
  const LabelMap& labels = scenarios.front().gt.labels;
  stats.conventional = ConfusionMatrix(labels);
  stats.modified = ConfusionMatrix(labels);
  for (const Scenario& sc : scenarios) {
    if (!(sc.gt.labels == labels)) {
      throw ConfigError("compared scenarios must share one label map");
    }
    const std::vector<ImageItems> images = group_by_image(sc.gt, sc.dets);
    stats.conventional +=
        build_confusion_matrix(images, labels, Algorithm::kConventional, t);
    stats.modified +=
        build_confusion_matrix(images, labels, Algorithm::kModified, t);
    ++stats.scenarios;
  }
  const ConfusionMatrix& a = stats.conventional;
  const ConfusionMatrix& b = stats.modified;
  for (std::size_t c = 0; c < labels.size(); ++c) {
    const auto tp = [&](const ConfusionMatrix& m) { return m.at(c, c); };
    ClassDelta delta;
    delta.class_id = labels.entries()[c].id;
    delta.name = labels.entries()[c].name;
    delta.tp = tp(b) - tp(a);
    delta.fp = (b.col_sum(c) - tp(b)) - (a.col_sum(c) - tp(a));
    delta.fn = (b.row_sum(c) - tp(b)) - (a.row_sum(c) - tp(a));
    stats.per_class.push_back(std::move(delta));
  }
  stats.diagonal_delta = b.diagonal_sum() - a.diagonal_sum();
  std::int64_t off_a = 0;
  std::int64_t off_b = 0;
  for (std::size_t r = 0; r < labels.size(); ++r) {
    for (std::size_t c = 0; c < labels.size(); ++c) {
      if (r == c) continue;
      off_a += a.at(r, c);
      off_b += b.at(r, c);
    }
  }
  stats.off_diagonal_delta = off_b - off_a;
  return stats;
}

DeltaStats compare(std::span<const ScenarioConfig> configs,
                   const Thresholds& t) {
  std::vector<Scenario> scenarios;
  scenarios.reserve(configs.size());
  for (const ScenarioConfig& config : configs) {
    if (!configs.empty() && config.classes != configs.front().classes) {
      throw ConfigError("compared scenarios must share one class count");
    }
    scenarios.push_back(generate(config));
  }
  return compare(std::span<const Scenario>(scenarios), t);
}

}  // namespace roadeval::oracle
