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

#ifndef ROADEVAL_ANNOTATIONS_HPP_
#define ROADEVAL_ANNOTATIONS_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "roadeval/geometry.hpp"

namespace roadeval {

struct Category {
  int id = 0;
  std::string name;

  friend bool operator==(const Category&, const Category&) = default;
};

// Ordered class id <-> name mapping. Order is the report row order.
class LabelMap {
 public:
  LabelMap() = default;
  // Throws ConfigError on duplicate ids, duplicate names, empty names or
  // non-positive ids.
  explicit LabelMap(std::vector<Category> entries);

  // The 12 road-surface classes, ids 1..12:
  // Crack1 Crack2 Joint Patching Filling Pothole Manhole Stain Shadow Marking
  // Scratch Patching2.
  static LabelMap road_damage();

  std::span<const Category> entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::optional<std::size_t> index_of(int class_id) const;
  bool contains(int class_id) const { return index_of(class_id).has_value(); }
  std::optional<int> id_of(std::string_view name) const;
  // Throws ReferenceError for unknown ids.
  const std::string& name_of(int class_id) const;

  friend bool operator==(const LabelMap& a, const LabelMap& b) {
    return a.entries_ == b.entries_;
  }

 private:
  std::vector<Category> entries_;
  std::map<int, std::size_t> index_;
};

struct ImageRecord {
  std::int64_t id = 0;
  std::string file_name;
  int width = 0;
  int height = 0;

  friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

// Source geometry of an instance mask as it appears in files.
using Segmentation = std::variant<std::monostate, std::vector<Polygon>, RLEMask>;

inline bool has_segmentation(const Segmentation& s) {
  return !std::holds_alternative<std::monostate>(s);
}

struct Annotation {
  std::int64_t id = 0;
  std::int64_t image_id = 0;
  int class_id = 0;
  BBox bbox;
  Segmentation segmentation;
  // Mask pixel count when a nonempty mask exists, else bbox area.
  double area = 0.0;
  // Rasterized `segmentation` in the image frame; null when there is no
  // segmentation or it covers no pixel centers.
  std::shared_ptr<const MaskPatch> mask;

  // Compares file-level content; the derived mask is not compared.
  friend bool operator==(const Annotation& a, const Annotation& b) {
    return a.id == b.id && a.image_id == b.image_id &&
           a.class_id == b.class_id && a.bbox == b.bbox &&
           a.segmentation == b.segmentation && a.area == b.area;
  }
};

struct Detection {
  // Taken from the file when present, else the 1-based position in the file.
  // Used only as a deterministic tie-break.
  std::int64_t id = 0;
  std::int64_t image_id = 0;
  int class_id = 0;
  BBox bbox;
  Segmentation segmentation;
  double score = 0.0;
  double area = 0.0;
  std::shared_ptr<const MaskPatch> mask;

  friend bool operator==(const Detection& a, const Detection& b) {
    return a.id == b.id && a.image_id == b.image_id &&
           a.class_id == b.class_id && a.bbox == b.bbox &&
           a.segmentation == b.segmentation && a.score == b.score;
  }
};

using ImageIndex = std::map<std::int64_t, std::vector<std::size_t>>;

struct GroundTruthSet {
  std::vector<ImageRecord> images;
  LabelMap labels;
  std::vector<Annotation> annotations;

  const ImageRecord* find_image(std::int64_t image_id) const;
  // Annotation positions per image id; every image appears, possibly empty.
  ImageIndex by_image() const;
  // Annotation count per class id, zero entries included for every label.
  std::map<int, std::int64_t> class_counts() const;

  friend bool operator==(const GroundTruthSet&, const GroundTruthSet&) = default;
};

struct DetectionSet {
  LabelMap labels;
  std::vector<Detection> detections;

  ImageIndex by_image() const;

  friend bool operator==(const DetectionSet&, const DetectionSet&) = default;
};

struct Violation {
  enum class Kind { kDuplicate, kReference, kGeometry, kRange };
  Kind kind;
  std::string record;  // e.g. "annotation 17"
  std::string message;
};

// Reports every invariant violation without mutating the set.
std::vector<Violation> validate(const GroundTruthSet& set);
// Image references are only checked when `images` is nonempty.
std::vector<Violation> validate(const DetectionSet& set,
                                std::span<const ImageRecord> images = {});

// Computes masks and areas from segmentations. Throws GeometryError when an
// RLE does not match its image size.
void materialize_masks(GroundTruthSet& set);
void materialize_masks(DetectionSet& set, std::span<const ImageRecord> images);

// Parse and fully validate. Errors name the offending record.
GroundTruthSet parse_ground_truth(std::string_view json_text);
GroundTruthSet load_ground_truth(const std::filesystem::path& path);

// When `images` is nonempty, image ids are resolved against it and masks are
// materialized in those frames.
DetectionSet parse_detections(std::string_view json_text,
                              const LabelMap& labels,
                              std::span<const ImageRecord> images = {});
DetectionSet load_detections(const std::filesystem::path& path,
                             const LabelMap& labels,
                             std::span<const ImageRecord> images = {});

LabelMap parse_label_map(std::string_view json_text);
LabelMap load_label_map(const std::filesystem::path& path);

std::string dump_ground_truth(const GroundTruthSet& set);
std::string dump_detections(const DetectionSet& set);

struct RescaleOptions {
  // Allow nearest-neighbour resampling of RLE-only masks.
  bool force = false;
};

// Scales every image to to_width x to_height. Throws LossyRescaleError for
// RLE masks unless forced.
GroundTruthSet rescale(const GroundTruthSet& set, int to_width, int to_height,
                       RescaleOptions options = {});
// Source frame sizes come from `source_images`.
DetectionSet rescale(const DetectionSet& set,
                     std::span<const ImageRecord> source_images, int to_width,
                     int to_height, RescaleOptions options = {});

struct SplitRatios {
  double train = 0.7;
  double val = 0.15;
  double test = 0.15;

  // Throws ConfigError unless each ratio is >= 0 and they sum to 1.
  void check() const;
};

struct SplitResult {
  GroundTruthSet train;
  GroundTruthSet val;
  GroundTruthSet test;
};

// Whole images are assigned to one split each: images are shuffled by `seed`
// and each goes to the split with the largest relative per-class deficit
// over the classes it contains. Ties favour the larger target ratio.
SplitResult stratified_split(const GroundTruthSet& set,
                             const SplitRatios& ratios, std::uint64_t seed);

}  // namespace roadeval

#endif  // ROADEVAL_ANNOTATIONS_HPP_
