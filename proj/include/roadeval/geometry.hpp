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

#ifndef ROADEVAL_GEOMETRY_HPP_
#define ROADEVAL_GEOMETRY_HPP_

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace roadeval {

// Axis-aligned box in pixel space, top-left origin: (x, y) is the top-left
// corner, the right and bottom edges are x + w and y + h.
struct BBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  double right() const { return x + w; }
  double bottom() const { return y + h; }
  double area() const { return w * h; }

  friend bool operator==(const BBox&, const BBox&) = default;
};

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

// Closed implicitly: the last vertex connects back to the first.
struct Polygon {
  std::vector<Point> vertices;

  friend bool operator==(const Polygon&, const Polygon&) = default;
};

// Row-major binary grid.
class BitMask {
 public:
  BitMask() = default;
  BitMask(int width, int height);

  int width() const { return width_; }
  int height() const { return height_; }
  bool get(int row, int col) const {
    return bits_[static_cast<std::size_t>(row) * width_ + col] != 0;
  }
  void set(int row, int col, bool value = true) {
    bits_[static_cast<std::size_t>(row) * width_ + col] = value ? 1 : 0;
  }
  std::span<const std::uint8_t> bits() const { return bits_; }
  std::span<std::uint8_t> bits() { return bits_; }

  std::int64_t area() const;
  bool empty() const { return area() == 0; }

  friend bool operator==(const BitMask&, const BitMask&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> bits_;
};

// Row-major run-length code. runs[0] counts leading zeros (possibly 0), then
// runs alternate between ones and zeros.
struct RLEMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint32_t> runs;

  friend bool operator==(const RLEMask&, const RLEMask&) = default;
};

// A mask stored as a tight crop of a larger frame. Used for instance masks so
// that IoU work scales with object extent rather than image size.
class MaskPatch {
 public:
  MaskPatch() = default;
  // Crops `full` to the bounding rectangle of its set pixels.
  explicit MaskPatch(const BitMask& full);
  MaskPatch(int frame_width, int frame_height, int offset_x, int offset_y,
            BitMask local);

  int frame_width() const { return frame_width_; }
  int frame_height() const { return frame_height_; }
  int offset_x() const { return offset_x_; }
  int offset_y() const { return offset_y_; }
  const BitMask& local() const { return local_; }
  std::int64_t area() const { return area_; }

  BitMask expand() const;

  friend bool operator==(const MaskPatch&, const MaskPatch&) = default;

 private:
  int frame_width_ = 0;
  int frame_height_ = 0;
  int offset_x_ = 0;
  int offset_y_ = 0;
  BitMask local_;
  std::int64_t area_ = 0;
};

enum class SizeClass { kSmall, kMedium, kLarge };

inline constexpr double kSmallAreaLimit = 32.0 * 32.0;
inline constexpr double kMediumAreaLimit = 96.0 * 96.0;

double box_iou(const BBox& a, const BBox& b);

// Pixel (row i, col j) is set iff its center (j + 0.5, i + 0.5) is inside the
// polygon under the even-odd rule. Throws GeometryError for < 3 vertices.
BitMask rasterize(const Polygon& polygon, int width, int height);

// Union of the rasterized polygons, cropped.
MaskPatch rasterize_patch(std::span<const Polygon> polygons, int frame_width,
                          int frame_height);

// Throws GeometryError on dimension mismatch. 0 when both masks are empty.
double mask_iou(const BitMask& a, const BitMask& b);
double mask_iou(const MaskPatch& a, const MaskPatch& b);

RLEMask rle_encode(const BitMask& mask);
// Throws CorruptMaskError when the runs do not cover width * height exactly.
BitMask rle_decode(const RLEMask& rle);

BitMask resample_nearest(const BitMask& mask, int width, int height);

SizeClass size_class(double area);
std::string_view to_string(SizeClass size);

BBox polygon_bounds(std::span<const Polygon> polygons);
Polygon box_polygon(const BBox& box);

}  // namespace roadeval

#endif  // ROADEVAL_GEOMETRY_HPP_
