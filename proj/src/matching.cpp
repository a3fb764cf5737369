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

#include "roadeval/matching.hpp"

#include <algorithm>
#include <map>
#include <string>

#include "roadeval/errors.hpp"

namespace roadeval {

namespace {

constexpr std::size_t kNone = static_cast<std::size_t>(-1);

bool passes_confidence(const Detection& d, const Thresholds& t) {
  return d.score >= t.confidence_threshold;
}

MatchingResult finish(std::span<const Annotation> gts,
                      std::span<const Detection> dets, const Thresholds& t,
                      std::vector<MatchPair> matched) {
  std::sort(matched.begin(), matched.end(),
            [](const MatchPair& a, const MatchPair& b) { return a.gt < b.gt; });
  std::vector<bool> gt_used(gts.size(), false);
  std::vector<bool> det_used(dets.size(), false);
  for (const MatchPair& p : matched) {
    gt_used[p.gt] = true;
    det_used[p.det] = true;
  }
  MatchingResult result;
  result.matched = std::move(matched);
  for (std::size_t g = 0; g < gts.size(); ++g) {
    if (!gt_used[g]) result.unmatched_gts.push_back({g, gts[g].class_id});
  }
  for (std::size_t d = 0; d < dets.size(); ++d) {
    if (!det_used[d] && passes_confidence(dets[d], t)) {
      result.unmatched_dets.push_back({d, dets[d].class_id});
    }
  }
  return result;
}

}  // namespace

std::string_view to_string(GeometryMode mode) {
  return mode == GeometryMode::kBoxes ? "boxes" : "masks";
}

std::string_view to_string(Algorithm algorithm) {
  return algorithm == Algorithm::kConventional ? "conventional" : "modified";
}

GeometryMode parse_geometry_mode(std::string_view name) {
  if (name == "boxes") return GeometryMode::kBoxes;
  if (name == "masks") return GeometryMode::kMasks;
  throw ConfigError("unknown geometry mode \"" + std::string(name) +
                    "\" (expected boxes or masks)");
}

Algorithm parse_algorithm(std::string_view name) {
  if (name == "conventional") return Algorithm::kConventional;
  if (name == "modified") return Algorithm::kModified;
  throw ConfigError("unknown algorithm \"" + std::string(name) +
                    "\" (expected conventional or modified)");
}

void Thresholds::check() const {
  if (!(iou_threshold > 0.0 && iou_threshold <= 1.0)) {
    throw ConfigError("IoU threshold must lie in (0, 1]");
  }
  if (!(confidence_threshold > 0.0 && confidence_threshold <= 1.0)) {
    throw ConfigError("confidence threshold must lie in (0, 1]");
  }
}

bool uses_box_fallback(const Annotation& gt, const Detection& det,
                       GeometryMode mode) {
  return mode == GeometryMode::kMasks && (!gt.mask || !det.mask);
}

double instance_iou(const Annotation& gt, const Detection& det,
                    GeometryMode mode) {
  if (mode == GeometryMode::kMasks && gt.mask && det.mask) {
    return mask_iou(*gt.mask, *det.mask);
  }
  return box_iou(gt.bbox, det.bbox);
}

std::vector<MatchPair> iou_table(std::span<const Annotation> gts,
                                 std::span<const Detection> dets,
                                 const Thresholds& t) {
  std::vector<MatchPair> pairs;
  for (std::size_t g = 0; g < gts.size(); ++g) {
    for (std::size_t d = 0; d < dets.size(); ++d) {
      if (!passes_confidence(dets[d], t)) continue;
      const double iou = instance_iou(gts[g], dets[d], t.geometry_mode);
      if (iou < t.iou_threshold) continue;
      pairs.push_back({g, d, iou, gts[g].class_id == dets[d].class_id,
                       gts[g].class_id, dets[d].class_id});
    }
  }
  return pairs;
}

MatchingResult match_conventional(std::span<const Annotation> gts,
                                  std::span<const Detection> dets,
                                  const Thresholds& t) {
  std::vector<MatchPair> pairs = iou_table(gts, dets, t);
  std::sort(pairs.begin(), pairs.end(),
            [&](const MatchPair& a, const MatchPair& b) {
              if (a.iou != b.iou) return a.iou > b.iou;
              if (dets[a.det].score != dets[b.det].score) {
                return dets[a.det].score > dets[b.det].score;
              }
              if (dets[a.det].id != dets[b.det].id) {
                return dets[a.det].id < dets[b.det].id;
              }
              return gts[a.gt].id < gts[b.gt].id;
            });

  // Best candidate per ground truth.
  std::vector<bool> gt_seen(gts.size(), false);
  std::vector<MatchPair> per_gt;
  for (const MatchPair& p : pairs) {
    if (gt_seen[p.gt]) continue;
    gt_seen[p.gt] = true;
    per_gt.push_back(p);
  }
  // Of those, best ground truth per detection. Order is preserved, so this is
  // still sorted.
  std::vector<bool> det_seen(dets.size(), false);
  std::vector<MatchPair> matched;
  for (const MatchPair& p : per_gt) {
    if (det_seen[p.det]) continue;
    det_seen[p.det] = true;
    matched.push_back(p);
  }
  return finish(gts, dets, t, std::move(matched));
}

MatchingResult match_modified(std::span<const Annotation> gts,
                              std::span<const Detection> dets,
                              const Thresholds& t) {
  const std::vector<MatchPair> pairs = iou_table(gts, dets, t);

  // Candidates per gt, best first.
  std::vector<std::vector<const MatchPair*>> candidates(gts.size());
  for (const MatchPair& p : pairs) candidates[p.gt].push_back(&p);
  for (auto& list : candidates) {
    std::sort(list.begin(), list.end(),
              [&](const MatchPair* a, const MatchPair* b) {
                if (a->same_class != b->same_class) return a->same_class;
                if (a->iou != b->iou) return a->iou > b->iou;
                const Detection& da = dets[a->det];
                const Detection& db = dets[b->det];
                if (da.score != db.score) return da.score > db.score;
                return da.id < db.id;
              });
  }
  // True when `challenger` outranks `holder` for the same detection.
  auto outranks = [&](const MatchPair& challenger, const MatchPair& holder) {
    if (challenger.same_class != holder.same_class) {
      return challenger.same_class;
    }
    if (challenger.iou != holder.iou) return challenger.iou > holder.iou;
    return gts[challenger.gt].id < gts[holder.gt].id;
  };

  std::vector<const MatchPair*> holder(dets.size(), nullptr);
  std::vector<std::size_t> gt_match(gts.size(), kNone);
  const std::size_t pass_cap = (gts.size() + 1) * (dets.size() + 1);
  std::size_t passes = 0;
  bool changed = true;
  while (changed) {
    if (++passes > pass_cap) {
      throw NonTerminationError("modified matcher exceeded " +
                                std::to_string(pass_cap) + " passes");
    }
    changed = false;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (gt_match[g] != kNone) continue;
      for (const MatchPair* cand : candidates[g]) {
        const MatchPair* current = holder[cand->det];
        if (current != nullptr && !outranks(*cand, *current)) continue;
        if (current != nullptr) gt_match[current->gt] = kNone;
        holder[cand->det] = cand;
        gt_match[g] = cand->det;
        changed = true;
        break;
      }
    }
  }

  std::vector<MatchPair> matched;
  for (const MatchPair* p : holder) {
    if (p != nullptr) matched.push_back(*p);
  }
  return finish(gts, dets, t, std::move(matched));
}

MatchingResult match(Algorithm algorithm, std::span<const Annotation> gts,
                     std::span<const Detection> dets, const Thresholds& t) {
  return algorithm == Algorithm::kConventional ? match_conventional(gts, dets, t)
                                               : match_modified(gts, dets, t);
}

// ---------------------------------------------------------------------------

ConfusionMatrix::ConfusionMatrix(LabelMap labels)
    : labels_(std::move(labels)),
      counts_((labels_.size() + 1) * (labels_.size() + 1), 0) {}

std::int64_t ConfusionMatrix::row_sum(std::size_t row) const {
  std::int64_t sum = 0;
  for (std::size_t col = 0; col <= classes(); ++col) sum += at(row, col);
  return sum;
}

std::int64_t ConfusionMatrix::col_sum(std::size_t col) const {
  std::int64_t sum = 0;
  for (std::size_t row = 0; row <= classes(); ++row) sum += at(row, col);
  return sum;
}

std::int64_t ConfusionMatrix::total() const {
  std::int64_t sum = 0;
  for (std::int64_t c : counts_) sum += c;
  return sum;
}

std::int64_t ConfusionMatrix::diagonal_sum() const {
  std::int64_t sum = 0;
  for (std::size_t c = 0; c < classes(); ++c) sum += at(c, c);
  return sum;
}

void ConfusionMatrix::add(const MatchingResult& result) {
  auto index = [&](int class_id) {
    auto idx = labels_.index_of(class_id);
    if (!idx) {
      throw ReferenceError("class id " + std::to_string(class_id) +
                           " is not in the label map");
    }
    return *idx;
  };
  for (const MatchPair& p : result.matched) {
    ++at(index(p.gt_class), index(p.det_class));
  }
  for (const Unmatched& g : result.unmatched_gts) {
    ++at(index(g.class_id), background());
  }
  for (const Unmatched& d : result.unmatched_dets) {
    ++at(background(), index(d.class_id));
  }
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  if (!(labels_ == other.labels_)) {
    throw ConfigError("cannot add confusion matrices over different labels");
  }
  for (std::size_t k = 0; k < counts_.size(); ++k) counts_[k] += other.counts_[k];
  return *this;
}

ConfusionMatrix accumulate(std::span<const MatchingResult> results,
                           const LabelMap& labels) {
  ConfusionMatrix cm(labels);
  for (const MatchingResult& r : results) cm.add(r);
  return cm;
}

std::vector<ImageItems> group_by_image(const GroundTruthSet& gt,
                                       const DetectionSet& dets) {
  std::vector<ImageItems> images;
  std::map<std::int64_t, std::size_t> slot;
  for (const ImageRecord& image : gt.images) {
    slot[image.id] = images.size();
    images.push_back({image.id, {}, {}});
  }
  for (const Annotation& a : gt.annotations) {
    auto it = slot.find(a.image_id);
    if (it == slot.end()) {
      throw ReferenceError("annotation " + std::to_string(a.id) +
                           ": unknown image_id " + std::to_string(a.image_id));
    }
    images[it->second].gts.push_back(a);
  }
  for (const Detection& d : dets.detections) {
    auto it = slot.find(d.image_id);
    if (it == slot.end()) {
      throw ReferenceError("detection " + std::to_string(d.id) +
                           ": unknown image_id " + std::to_string(d.image_id));
    }
    images[it->second].dets.push_back(d);
  }
  return images;
}

ConfusionMatrix build_confusion_matrix(std::span<const ImageItems> images,
                                       const LabelMap& labels,
                                       Algorithm algorithm,
                                       const Thresholds& t) {
  ConfusionMatrix cm(labels);
  for (const ImageItems& image : images) {
    cm.add(match(algorithm, image.gts, image.dets, t));
  }
  return cm;
}

}  // namespace roadeval
