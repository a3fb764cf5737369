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

#include "roadeval/annotations.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"
#include "roadeval/errors.hpp"

namespace roadeval {

namespace {

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ParseError("cannot open " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

Json parse_json(std::string_view text, std::string_view what) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ParseError("malformed " + std::string(what) + ": " + e.what());
  }
}

const Json& require(const Json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) {
    throw ParseError(where + ": expected an object");
  }
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw ParseError(where + ": missing field \"" + key + "\"");
  }
  return *it;
}

std::int64_t as_int(const Json& v, const std::string& where, const char* key) {
  if (v.is_number_integer()) return v.get<std::int64_t>();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (std::floor(d) == d && std::isfinite(d)) {
      return static_cast<std::int64_t>(d);
    }
  }
  throw ParseError(where + ": field \"" + key + "\" must be an integer");
}

double as_number(const Json& v, const std::string& where, const char* key) {
  if (!v.is_number()) {
    throw ParseError(where + ": field \"" + key + "\" must be a number");
  }
  const double d = v.get<double>();
  if (!std::isfinite(d)) {
    throw ParseError(where + ": field \"" + key + "\" must be finite");
  }
  return d;
}

BBox parse_bbox(const Json& v, const std::string& where) {
  if (!v.is_array() || v.size() != 4) {
    throw ParseError(where + ": \"bbox\" must be [x, y, w, h]");
  }
  return {as_number(v[0], where, "bbox"), as_number(v[1], where, "bbox"),
          as_number(v[2], where, "bbox"), as_number(v[3], where, "bbox")};
}

Segmentation parse_segmentation(const Json& v, const std::string& where) {
  if (v.is_null()) return std::monostate{};
  if (v.is_array()) {
    std::vector<Polygon> polygons;
    for (const Json& ring : v) {
      if (!ring.is_array() || ring.size() % 2 != 0) {
        throw ParseError(where +
                         ": polygon must be a flat [x1, y1, x2, y2, ...] list");
      }
      Polygon p;
      for (std::size_t k = 0; k < ring.size(); k += 2) {
        p.vertices.push_back({as_number(ring[k], where, "segmentation"),
                              as_number(ring[k + 1], where, "segmentation")});
      }
      polygons.push_back(std::move(p));
    }
    if (polygons.empty()) return std::monostate{};
    return polygons;
  }
  if (v.is_object()) {
    const Json& size = require(v, "size", where);
    const Json& counts = require(v, "counts", where);
    if (!size.is_array() || size.size() != 2) {
      throw ParseError(where + ": RLE \"size\" must be [height, width]");
    }
    if (!counts.is_array()) {
      throw ParseError(where +
                       ": RLE \"counts\" must be an integer array "
                       "(compressed strings are not supported)");
    }
    RLEMask rle;
    rle.height = static_cast<int>(as_int(size[0], where, "size"));
    rle.width = static_cast<int>(as_int(size[1], where, "size"));
    for (const Json& c : counts) {
      const std::int64_t run = as_int(c, where, "counts");
      if (run < 0) throw ParseError(where + ": negative RLE run");
      rle.runs.push_back(static_cast<std::uint32_t>(run));
    }
    return rle;
  }
  throw ParseError(where + ": unsupported \"segmentation\" value");
}

OrderedJson segmentation_json(const Segmentation& s) {
  if (const auto* polygons = std::get_if<std::vector<Polygon>>(&s)) {
    OrderedJson out = OrderedJson::array();
    for (const Polygon& p : *polygons) {
      OrderedJson ring = OrderedJson::array();
      for (const Point& v : p.vertices) {
        ring.push_back(v.x);
        ring.push_back(v.y);
      }
      out.push_back(std::move(ring));
    }
    return out;
  }
  const auto& rle = std::get<RLEMask>(s);
  OrderedJson out;
  out["size"] = {rle.height, rle.width};
  out["counts"] = rle.runs;
  return out;
}

OrderedJson bbox_json(const BBox& b) { return {b.x, b.y, b.w, b.h}; }

std::string record_name(const char* kind, std::int64_t id) {
  return std::string(kind) + " " + std::to_string(id);
}

[[noreturn]] void throw_violation(const Violation& v) {
  const std::string text = v.record + ": " + v.message;
  switch (v.kind) {
    case Violation::Kind::kDuplicate:
      throw ParseError(text);
    case Violation::Kind::kReference:
      throw ReferenceError(text);
    case Violation::Kind::kGeometry:
      throw GeometryError(text);
    case Violation::Kind::kRange:
      throw RangeError(text);
  }
  throw InputError(text);
}

void check_segmentation(const Segmentation& s, const std::string& record,
                        std::vector<Violation>& out) {
  if (const auto* polygons = std::get_if<std::vector<Polygon>>(&s)) {
    for (const Polygon& p : *polygons) {
      if (p.vertices.size() < 3) {
        out.push_back({Violation::Kind::kGeometry, record,
                       "polygon has " + std::to_string(p.vertices.size()) +
                           " vertices, at least 3 required"});
      }
    }
  } else if (const auto* rle = std::get_if<RLEMask>(&s)) {
    std::uint64_t total = 0;
    for (auto r : rle->runs) total += r;
    if (rle->width < 1 || rle->height < 1 ||
        total != static_cast<std::uint64_t>(rle->width) * rle->height) {
      out.push_back({Violation::Kind::kGeometry, record,
                     "corrupt RLE mask: runs do not cover the mask size"});
    }
  }
}

void check_bbox(const BBox& b, const std::string& record,
                std::vector<Violation>& out) {
  if (!(b.w >= 0.0) || !(b.h >= 0.0)) {
    out.push_back({Violation::Kind::kGeometry, record,
                   "bbox width and height must be non-negative"});
  }
}

// Builds the frame-space mask for a segmentation. Null when there is none or
// it covers no pixel centers.
std::shared_ptr<const MaskPatch> build_mask(const Segmentation& s,
                                            int frame_width, int frame_height,
                                            const std::string& record) {
  std::shared_ptr<const MaskPatch> mask;
  if (const auto* polygons = std::get_if<std::vector<Polygon>>(&s)) {
    mask = std::make_shared<const MaskPatch>(
        rasterize_patch(*polygons, frame_width, frame_height));
  } else if (const auto* rle = std::get_if<RLEMask>(&s)) {
    if (rle->width != frame_width || rle->height != frame_height) {
      throw GeometryError(record + ": RLE size " + std::to_string(rle->width) +
                          "x" + std::to_string(rle->height) +
                          " does not match image " +
                          std::to_string(frame_width) + "x" +
                          std::to_string(frame_height));
    }
    mask = std::make_shared<const MaskPatch>(MaskPatch(rle_decode(*rle)));
  }
  if (mask && mask->area() == 0) mask.reset();
  return mask;
}

BBox clamp_to_image(const BBox& b, const ImageRecord& image) {
  if (b.x >= 0.0 && b.y >= 0.0 && b.right() <= image.width &&
      b.bottom() <= image.height) {
    return b;
  }
  const double x0 = std::clamp(b.x, 0.0, static_cast<double>(image.width));
  const double y0 = std::clamp(b.y, 0.0, static_cast<double>(image.height));
  const double x1 =
      std::clamp(b.right(), 0.0, static_cast<double>(image.width));
  const double y1 =
      std::clamp(b.bottom(), 0.0, static_cast<double>(image.height));
  return {x0, y0, std::max(0.0, x1 - x0), std::max(0.0, y1 - y0)};
}

BBox scale_box(const BBox& b, double sx, double sy) {
  return {b.x * sx, b.y * sy, b.w * sx, b.h * sy};
}

Segmentation scale_segmentation(const Segmentation& s, double sx, double sy,
                                int to_width, int to_height,
                                const RescaleOptions& options,
                                const std::string& record) {
  if (const auto* polygons = std::get_if<std::vector<Polygon>>(&s)) {
    std::vector<Polygon> scaled = *polygons;
    for (Polygon& p : scaled) {
      for (Point& v : p.vertices) {
        v.x *= sx;
        v.y *= sy;
      }
    }
    return scaled;
  }
  if (const auto* rle = std::get_if<RLEMask>(&s)) {
    if (rle->width == to_width && rle->height == to_height) return *rle;
    if (!options.force) {
      throw LossyRescaleError(record +
                              ": RLE-only mask cannot be re-rasterized; "
                              "pass force to resample");
    }
    return rle_encode(resample_nearest(rle_decode(*rle), to_width, to_height));
  }
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// LabelMap

LabelMap::LabelMap(std::vector<Category> entries) : entries_(std::move(entries)) {
  std::set<std::string> names;
  for (std::size_t k = 0; k < entries_.size(); ++k) {
    const Category& c = entries_[k];
    if (c.id <= 0) {
      throw ConfigError("category " + std::to_string(c.id) +
                        ": id must be positive");
    }
    if (c.name.empty()) {
      throw ConfigError("category " + std::to_string(c.id) + ": empty name");
    }
    if (!index_.emplace(c.id, k).second) {
      throw ConfigError("category " + std::to_string(c.id) + ": duplicate id");
    }
    if (!names.insert(c.name).second) {
      throw ConfigError("category " + std::to_string(c.id) +
                        ": duplicate name \"" + c.name + "\"");
    }
  }
}

LabelMap LabelMap::road_damage() {
  static const std::array<const char*, 12> kNames = {
      "Crack1",  "Crack2",  "Joint",  "Patching", "Filling", "Pothole",
      "Manhole", "Stain",   "Shadow", "Marking",  "Scratch", "Patching2"};
  std::vector<Category> entries;
  for (std::size_t k = 0; k < kNames.size(); ++k) {
    entries.push_back({static_cast<int>(k + 1), kNames[k]});
  }
  return LabelMap(std::move(entries));
}

std::optional<std::size_t> LabelMap::index_of(int class_id) const {
  auto it = index_.find(class_id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::optional<int> LabelMap::id_of(std::string_view name) const {
  for (const Category& c : entries_) {
    if (c.name == name) return c.id;
  }
  return std::nullopt;
}

const std::string& LabelMap::name_of(int class_id) const {
  auto idx = index_of(class_id);
  if (!idx) {
    throw ReferenceError("unknown class id " + std::to_string(class_id));
  }
  return entries_[*idx].name;
}

// ---------------------------------------------------------------------------
// Sets

const ImageRecord* GroundTruthSet::find_image(std::int64_t image_id) const {
  for (const ImageRecord& image : images) {
    if (image.id == image_id) return &image;
  }
  return nullptr;
}

ImageIndex GroundTruthSet::by_image() const {
  ImageIndex index;
  for (const ImageRecord& image : images) index[image.id];
  for (std::size_t k = 0; k < annotations.size(); ++k) {
    index[annotations[k].image_id].push_back(k);
  }
  return index;
}

std::map<int, std::int64_t> GroundTruthSet::class_counts() const {
  std::map<int, std::int64_t> counts;
  for (const Category& c : labels.entries()) counts[c.id] = 0;
  for (const Annotation& a : annotations) ++counts[a.class_id];
  return counts;
}

ImageIndex DetectionSet::by_image() const {
  ImageIndex index;
  for (std::size_t k = 0; k < detections.size(); ++k) {
    index[detections[k].image_id].push_back(k);
  }
  return index;
}

// ---------------------------------------------------------------------------
// Validation

std::vector<Violation> validate(const GroundTruthSet& set) {
  std::vector<Violation> out;
  std::map<std::int64_t, const ImageRecord*> images;
  for (const ImageRecord& image : set.images) {
    const std::string record = record_name("image", image.id);
    if (!images.emplace(image.id, &image).second) {
      out.push_back({Violation::Kind::kDuplicate, record, "duplicate image id"});
    }
    if (image.width < 1 || image.height < 1) {
      out.push_back({Violation::Kind::kGeometry, record,
                     "width and height must be at least 1"});
    }
  }
  std::set<std::int64_t> ann_ids;
  for (const Annotation& a : set.annotations) {
    const std::string record = record_name("annotation", a.id);
    if (!ann_ids.insert(a.id).second) {
      out.push_back(
          {Violation::Kind::kDuplicate, record, "duplicate annotation id"});
    }
    auto image = images.find(a.image_id);
    if (image == images.end()) {
      out.push_back({Violation::Kind::kReference, record,
                     "unknown image_id " + std::to_string(a.image_id)});
    }
    if (!set.labels.contains(a.class_id)) {
      out.push_back({Violation::Kind::kReference, record,
                     "unknown category_id " + std::to_string(a.class_id)});
    }
    check_bbox(a.bbox, record, out);
    check_segmentation(a.segmentation, record, out);
    if (image != images.end()) {
      if (const auto* rle = std::get_if<RLEMask>(&a.segmentation)) {
        if (rle->width != image->second->width ||
            rle->height != image->second->height) {
          out.push_back({Violation::Kind::kGeometry, record,
                         "RLE size does not match its image"});
        }
      }
    }
    if (!(a.area > 0.0)) {
      out.push_back({Violation::Kind::kGeometry, record, "zero area"});
    }
  }
  return out;
}

std::vector<Violation> validate(const DetectionSet& set,
                                std::span<const ImageRecord> images) {
  std::vector<Violation> out;
  std::set<std::int64_t> image_ids;
  for (const ImageRecord& image : images) image_ids.insert(image.id);
  std::set<std::int64_t> det_ids;
  for (const Detection& d : set.detections) {
    const std::string record = record_name("detection", d.id);
    if (!det_ids.insert(d.id).second) {
      out.push_back(
          {Violation::Kind::kDuplicate, record, "duplicate detection id"});
    }
    if (!images.empty() && !image_ids.contains(d.image_id)) {
      out.push_back({Violation::Kind::kReference, record,
                     "unknown image_id " + std::to_string(d.image_id)});
    }
    if (!set.labels.contains(d.class_id)) {
      out.push_back({Violation::Kind::kReference, record,
                     "unknown category_id " + std::to_string(d.class_id)});
    }
    if (!(d.score >= 0.0 && d.score <= 1.0)) {
      out.push_back({Violation::Kind::kRange, record,
                     "score " + std::to_string(d.score) + " outside [0, 1]"});
    }
    check_bbox(d.bbox, record, out);
    check_segmentation(d.segmentation, record, out);
  }
  return out;
}

void materialize_masks(GroundTruthSet& set) {
  std::map<std::int64_t, const ImageRecord*> images;
  for (const ImageRecord& image : set.images) images[image.id] = &image;
  for (Annotation& a : set.annotations) {
    const std::string record = record_name("annotation", a.id);
    auto it = images.find(a.image_id);
    if (it == images.end()) {
      throw ReferenceError(record + ": unknown image_id " +
                           std::to_string(a.image_id));
    }
    a.mask = build_mask(a.segmentation, it->second->width, it->second->height,
                        record);
    a.area = a.mask ? static_cast<double>(a.mask->area()) : a.bbox.area();
  }
}

void materialize_masks(DetectionSet& set, std::span<const ImageRecord> images) {
  std::map<std::int64_t, const ImageRecord*> frames;
  for (const ImageRecord& image : images) frames[image.id] = &image;
  for (Detection& d : set.detections) {
    const std::string record = record_name("detection", d.id);
    auto it = frames.find(d.image_id);
    if (it != frames.end()) {
      d.mask = build_mask(d.segmentation, it->second->width,
                          it->second->height, record);
    } else if (const auto* rle = std::get_if<RLEMask>(&d.segmentation)) {
      d.mask = build_mask(d.segmentation, rle->width, rle->height, record);
    } else {
      d.mask.reset();
    }
    d.area = d.mask ? static_cast<double>(d.mask->area()) : d.bbox.area();
  }
}

// ---------------------------------------------------------------------------
// Parsing

LabelMap parse_label_map_json(const Json& array, const std::string& where) {
  if (!array.is_array()) {
    throw ParseError(where + ": categories must be an array");
  }
  std::vector<Category> entries;
  for (std::size_t k = 0; k < array.size(); ++k) {
    const std::string item = where + "[" + std::to_string(k) + "]";
    const Json& name = require(array[k], "name", item);
    if (!name.is_string()) throw ParseError(item + ": name must be a string");
    entries.push_back(
        {static_cast<int>(as_int(require(array[k], "id", item), item, "id")),
         name.get<std::string>()});
  }
  return LabelMap(std::move(entries));
}

LabelMap parse_label_map(std::string_view json_text) {
  return parse_label_map_json(parse_json(json_text, "label map"), "label map");
}

LabelMap load_label_map(const std::filesystem::path& path) {
  return parse_label_map(read_file(path));
}

GroundTruthSet parse_ground_truth(std::string_view json_text) {
  const Json root = parse_json(json_text, "ground-truth file");
  if (!root.is_object()) {
    throw ParseError("ground-truth file: top level must be an object");
  }
  GroundTruthSet set;
  set.labels = parse_label_map_json(require(root, "categories", "ground truth"),
                                    "categories");
  const Json& images = require(root, "images", "ground truth");
  if (!images.is_array()) throw ParseError("images must be an array");
  for (std::size_t k = 0; k < images.size(); ++k) {
    const Json& obj = images[k];
    const std::string where = "images[" + std::to_string(k) + "]";
    ImageRecord image;
    image.id = as_int(require(obj, "id", where), where, "id");
    const std::string record = record_name("image", image.id);
    if (auto it = obj.find("file_name"); it != obj.end() && it->is_string()) {
      image.file_name = it->get<std::string>();
    }
    image.width =
        static_cast<int>(as_int(require(obj, "width", record), record, "width"));
    image.height = static_cast<int>(
        as_int(require(obj, "height", record), record, "height"));
    set.images.push_back(std::move(image));
  }
  const Json& anns = require(root, "annotations", "ground truth");
  if (!anns.is_array()) throw ParseError("annotations must be an array");
  for (std::size_t k = 0; k < anns.size(); ++k) {
    const Json& obj = anns[k];
    const std::string where = "annotations[" + std::to_string(k) + "]";
    Annotation a;
    a.id = as_int(require(obj, "id", where), where, "id");
    const std::string record = record_name("annotation", a.id);
    a.image_id = as_int(require(obj, "image_id", record), record, "image_id");
    a.class_id = static_cast<int>(
        as_int(require(obj, "category_id", record), record, "category_id"));
    a.bbox = parse_bbox(require(obj, "bbox", record), record);
    if (auto it = obj.find("segmentation"); it != obj.end()) {
      a.segmentation = parse_segmentation(*it, record);
    }
    set.annotations.push_back(std::move(a));
  }

  // Structural checks first; masks are only built from valid geometry.
  std::vector<Violation> violations = validate(set);
  for (const Violation& v : violations) {
    if (v.message != "zero area") throw_violation(v);
  }
  for (Annotation& a : set.annotations) {
    a.bbox = clamp_to_image(a.bbox, *set.find_image(a.image_id));
  }
  materialize_masks(set);
  violations = validate(set);
  if (!violations.empty()) throw_violation(violations.front());
  return set;
}

GroundTruthSet load_ground_truth(const std::filesystem::path& path) {
  return parse_ground_truth(read_file(path));
}

DetectionSet parse_detections(std::string_view json_text,
                              const LabelMap& labels,
                              std::span<const ImageRecord> images) {
  const Json root = parse_json(json_text, "detections file");
  if (!root.is_array()) {
    throw ParseError("detections file: top level must be an array");
  }
  DetectionSet set;
  set.labels = labels;
  for (std::size_t k = 0; k < root.size(); ++k) {
    const Json& obj = root[k];
    const std::string where = "detections[" + std::to_string(k) + "]";
    Detection d;
    d.id = static_cast<std::int64_t>(k + 1);
    if (obj.is_object()) {
      if (auto it = obj.find("id"); it != obj.end()) {
        d.id = as_int(*it, where, "id");
      }
    }
    const std::string record = record_name("detection", d.id);
    d.image_id = as_int(require(obj, "image_id", record), record, "image_id");
    d.class_id = static_cast<int>(
        as_int(require(obj, "category_id", record), record, "category_id"));
    d.bbox = parse_bbox(require(obj, "bbox", record), record);
    d.score = as_number(require(obj, "score", record), record, "score");
    if (auto it = obj.find("segmentation"); it != obj.end()) {
      d.segmentation = parse_segmentation(*it, record);
    }
    set.detections.push_back(std::move(d));
  }
  const std::vector<Violation> violations = validate(set, images);
  if (!violations.empty()) throw_violation(violations.front());
  materialize_masks(set, images);
  return set;
}

DetectionSet load_detections(const std::filesystem::path& path,
                             const LabelMap& labels,
                             std::span<const ImageRecord> images) {
  return parse_detections(read_file(path), labels, images);
}

// ---------------------------------------------------------------------------
// Serialization

std::string dump_ground_truth(const GroundTruthSet& set) {
  OrderedJson root;
  OrderedJson images = OrderedJson::array();
  for (const ImageRecord& image : set.images) {
    OrderedJson obj;
    obj["id"] = image.id;
    obj["file_name"] = image.file_name;
    obj["width"] = image.width;
    obj["height"] = image.height;
    images.push_back(std::move(obj));
  }
  OrderedJson anns = OrderedJson::array();
  for (const Annotation& a : set.annotations) {
    OrderedJson obj;
    obj["id"] = a.id;
    obj["image_id"] = a.image_id;
    obj["category_id"] = a.class_id;
    obj["bbox"] = bbox_json(a.bbox);
    if (has_segmentation(a.segmentation)) {
      obj["segmentation"] = segmentation_json(a.segmentation);
    }
    obj["area"] = a.area;
    anns.push_back(std::move(obj));
  }
  OrderedJson cats = OrderedJson::array();
  for (const Category& c : set.labels.entries()) {
    OrderedJson obj;
    obj["id"] = c.id;
    obj["name"] = c.name;
    cats.push_back(std::move(obj));
  }
  root["images"] = std::move(images);
  root["annotations"] = std::move(anns);
  root["categories"] = std::move(cats);
  return root.dump(1) + "\n";
}

std::string dump_detections(const DetectionSet& set) {
  OrderedJson root = OrderedJson::array();
  for (const Detection& d : set.detections) {
    OrderedJson obj;
    obj["id"] = d.id;
    obj["image_id"] = d.image_id;
    obj["category_id"] = d.class_id;
    obj["bbox"] = bbox_json(d.bbox);
    obj["score"] = d.score;
    if (has_segmentation(d.segmentation)) {
      obj["segmentation"] = segmentation_json(d.segmentation);
    }
    root.push_back(std::move(obj));
  }
  return root.dump(1) + "\n";
}

// ---------------------------------------------------------------------------
// Rescale

GroundTruthSet rescale(const GroundTruthSet& set, int to_width, int to_height,
                       RescaleOptions options) {
  if (to_width < 1 || to_height < 1) {
    throw ConfigError("rescale target must be at least 1x1");
  }
  GroundTruthSet out = set;
  std::map<std::int64_t, std::pair<double, double>> factors;
  for (ImageRecord& image : out.images) {
    factors[image.id] = {static_cast<double>(to_width) / image.width,
                         static_cast<double>(to_height) / image.height};
    image.width = to_width;
    image.height = to_height;
  }
  for (Annotation& a : out.annotations) {
    const std::string record = record_name("annotation", a.id);
    auto it = factors.find(a.image_id);
    if (it == factors.end()) {
      throw ReferenceError(record + ": unknown image_id " +
                           std::to_string(a.image_id));
    }
    const auto [sx, sy] = it->second;
    a.bbox = scale_box(a.bbox, sx, sy);
    a.segmentation = scale_segmentation(a.segmentation, sx, sy, to_width,
                                        to_height, options, record);
  }
  materialize_masks(out);
  return out;
}

DetectionSet rescale(const DetectionSet& set,
                     std::span<const ImageRecord> source_images, int to_width,
                     int to_height, RescaleOptions options) {
  if (to_width < 1 || to_height < 1) {
    throw ConfigError("rescale target must be at least 1x1");
  }
  std::map<std::int64_t, const ImageRecord*> frames;
  for (const ImageRecord& image : source_images) frames[image.id] = &image;
  DetectionSet out = set;
  for (Detection& d : out.detections) {
    const std::string record = record_name("detection", d.id);
    auto it = frames.find(d.image_id);
    if (it == frames.end()) {
      throw ReferenceError(record + ": unknown image_id " +
                           std::to_string(d.image_id));
    }
    const double sx = static_cast<double>(to_width) / it->second->width;
    const double sy = static_cast<double>(to_height) / it->second->height;
    d.bbox = scale_box(d.bbox, sx, sy);
    d.segmentation = scale_segmentation(d.segmentation, sx, sy, to_width,
                                        to_height, options, record);
  }
  std::vector<ImageRecord> target(source_images.begin(), source_images.end());
  for (ImageRecord& image : target) {
    image.width = to_width;
    image.height = to_height;
  }
  materialize_masks(out, target);
  return out;
}

// ---------------------------------------------------------------------------
// Split

void SplitRatios::check() const {
  const std::array<double, 3> r = {train, val, test};
  for (double v : r) {
    if (!(v >= 0.0)) throw ConfigError("split ratios must be non-negative");
  }
  if (std::abs(train + val + test - 1.0) > 1e-9) {
    throw ConfigError("split ratios must sum to 1");
  }
}

SplitResult stratified_split(const GroundTruthSet& set,
                             const SplitRatios& ratios, std::uint64_t seed) {
  ratios.check();
  if (set.images.empty()) {
    throw ConfigError("cannot split an empty ground-truth set");
  }
  const std::array<double, 3> target = {ratios.train, ratios.val, ratios.test};
  constexpr double kTie = 1e-9;

  // Per-image class histograms, keyed by position in set.images.
  std::map<std::int64_t, std::size_t> image_pos;
  for (std::size_t k = 0; k < set.images.size(); ++k) {
    image_pos[set.images[k].id] = k;
  }
  std::vector<std::map<int, std::int64_t>> histograms(set.images.size());
  std::map<int, std::int64_t> totals;
  for (const Annotation& a : set.annotations) {
    auto it = image_pos.find(a.image_id);
    if (it == image_pos.end()) {
      throw ReferenceError(record_name("annotation", a.id) +
                           ": unknown image_id " + std::to_string(a.image_id));
    }
    ++histograms[it->second][a.class_id];
    ++totals[a.class_id];
  }

  // Fisher-Yates over mt19937_64, which is fully specified by the standard,
  // so the order is identical across platforms.
  std::vector<std::size_t> order(set.images.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::mt19937_64 rng(seed);
  for (std::size_t k = order.size(); k > 1; --k) {
    const std::size_t j = static_cast<std::size_t>(rng() % k);
    std::swap(order[k - 1], order[j]);
  }

  std::array<std::map<int, std::int64_t>, 3> assigned;
  std::array<std::int64_t, 3> assigned_images = {0, 0, 0};
  const double image_total = static_cast<double>(set.images.size());
  std::vector<int> split_of(set.images.size(), 0);
  for (std::size_t pos : order) {
    std::array<double, 3> deficit = {0.0, 0.0, 0.0};
    for (int s = 0; s < 3; ++s) {
      if (histograms[pos].empty()) {
        deficit[s] = (target[s] * image_total - assigned_images[s]) / image_total;
        continue;
      }
      for (const auto& [class_id, count] : histograms[pos]) {
        const double total = static_cast<double>(totals[class_id]);
        deficit[s] += (target[s] * total - assigned[s][class_id]) / total;
      }
    }
    int best = 0;
    for (int s = 1; s < 3; ++s) {
      const double diff = deficit[s] - deficit[best];
      if (diff > kTie || (std::abs(diff) <= kTie && target[s] > target[best])) {
        best = s;
      }
    }
    split_of[pos] = best;
    ++assigned_images[best];
    for (const auto& [class_id, count] : histograms[pos]) {
      assigned[best][class_id] += count;
    }
  }

  SplitResult result;
  std::array<GroundTruthSet*, 3> parts = {&result.train, &result.val,
                                          &result.test};
  for (GroundTruthSet* part : parts) part->labels = set.labels;
  for (std::size_t k = 0; k < set.images.size(); ++k) {
    parts[split_of[k]]->images.push_back(set.images[k]);
  }
  for (const Annotation& a : set.annotations) {
    parts[split_of[image_pos[a.image_id]]]->annotations.push_back(a);
  }
  return result;
}

}  // namespace roadeval
