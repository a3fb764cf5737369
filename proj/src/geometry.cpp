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

#include "roadeval/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "roadeval/errors.hpp"

namespace roadeval {

namespace {

struct PixelRect {
  int x0 = 0;  // inclusive
  int y0 = 0;
  int x1 = 0;  // exclusive
  int y1 = 0;

  bool empty() const { return x1 <= x0 || y1 <= y0; }
};

// Pixel rows/cols whose centers can fall inside [lo, hi], clipped to [0, n).
std::pair<int, int> center_range(double lo, double hi, int n) {
  const double first = std::ceil(lo - 0.5);
  const double last = std::floor(hi - 0.5);
  const int a = static_cast<int>(std::clamp(first, 0.0, static_cast<double>(n)));
  const int b =
      static_cast<int>(std::clamp(last + 1.0, 0.0, static_cast<double>(n)));
  return {a, b};
}

void check_polygon(const Polygon& polygon) {
  if (polygon.vertices.size() < 3) {
    throw GeometryError("invalid polygon: " +
                        std::to_string(polygon.vertices.size()) +
                        " vertices, at least 3 required");
  }
}

PixelRect polygon_pixel_rect(const Polygon& polygon, int frame_width,
                             int frame_height) {
  double min_x = std::numeric_limits<double>::infinity();
  double min_y = min_x;
  double max_x = -min_x;
  double max_y = -min_x;
  for (const Point& p : polygon.vertices) {
    min_x = std::min(min_x, p.x);
    max_x = std::max(max_x, p.x);
    min_y = std::min(min_y, p.y);
    max_y = std::max(max_y, p.y);
  }
  const auto [x0, x1] = center_range(min_x, max_x, frame_width);
  const auto [y0, y1] = center_range(min_y, max_y, frame_height);
  return {x0, y0, x1, y1};
}

// Scanline even-odd fill at pixel centers. Frame pixel (row, col) lands at
// target (row - oy, col - ox); `rect` bounds the rows and columns visited.
void fill_polygon(const Polygon& polygon, const PixelRect& rect, int ox, int oy,
                  BitMask& target) {
  const auto& v = polygon.vertices;
  const std::size_t n = v.size();
  std::vector<double> crossings;
  crossings.reserve(n);
  for (int row = rect.y0; row < rect.y1; ++row) {
    const double cy = row + 0.5;
    crossings.clear();
    for (std::size_t k = 0, prev = n - 1; k < n; prev = k++) {
      const Point& a = v[prev];
      const Point& b = v[k];
      if ((a.y > cy) != (b.y > cy)) {
        crossings.push_back(a.x + (cy - a.y) * (b.x - a.x) / (b.y - a.y));
      }
    }
    std::sort(crossings.begin(), crossings.end());
    for (std::size_t k = 0; k + 1 < crossings.size(); k += 2) {
      // Centers in [left, right).
      int c0 = static_cast<int>(std::ceil(crossings[k] - 0.5));
      int c1 = static_cast<int>(std::ceil(crossings[k + 1] - 0.5));
      c0 = std::max(c0, rect.x0);
      c1 = std::min(c1, rect.x1);
      for (int col = c0; col < c1; ++col) {
        target.set(row - oy, col - ox);
      }
    }
  }
}

}  // namespace

BitMask::BitMask(int width, int height) : width_(width), height_(height) {
  if (width < 0 || height < 0) {
    throw GeometryError("negative mask dimensions");
  }
  bits_.assign(static_cast<std::size_t>(width) * height, 0);
}

std::int64_t BitMask::area() const {
  return std::count(bits_.begin(), bits_.end(), std::uint8_t{1});
}

MaskPatch::MaskPatch(const BitMask& full)
    : frame_width_(full.width()), frame_height_(full.height()) {
  int x0 = full.width(), y0 = full.height(), x1 = 0, y1 = 0;
  for (int row = 0; row < full.height(); ++row) {
    for (int col = 0; col < full.width(); ++col) {
      if (full.get(row, col)) {
        x0 = std::min(x0, col);
        x1 = std::max(x1, col + 1);
        y0 = std::min(y0, row);
        y1 = std::max(y1, row + 1);
      }
    }
  }
  if (x1 <= x0) {
    return;
  }
  offset_x_ = x0;
  offset_y_ = y0;
  local_ = BitMask(x1 - x0, y1 - y0);
  for (int row = y0; row < y1; ++row) {
    for (int col = x0; col < x1; ++col) {
      if (full.get(row, col)) local_.set(row - y0, col - x0);
    }
  }
  area_ = local_.area();
}

MaskPatch::MaskPatch(int frame_width, int frame_height, int offset_x,
                     int offset_y, BitMask local)
    : frame_width_(frame_width),
      frame_height_(frame_height),
      offset_x_(offset_x),
      offset_y_(offset_y),
      local_(std::move(local)) {
  if (offset_x < 0 || offset_y < 0 ||
      offset_x + local_.width() > frame_width ||
      offset_y + local_.height() > frame_height) {
    throw GeometryError("mask patch exceeds its frame");
  }
  area_ = local_.area();
}

BitMask MaskPatch::expand() const {
  BitMask full(frame_width_, frame_height_);
  for (int row = 0; row < local_.height(); ++row) {
    for (int col = 0; col < local_.width(); ++col) {
      if (local_.get(row, col)) full.set(row + offset_y_, col + offset_x_);
    }
  }
  return full;
}

double box_iou(const BBox& a, const BBox& b) {
  const double iw = std::min(a.right(), b.right()) - std::max(a.x, b.x);
  const double ih = std::min(a.bottom(), b.bottom()) - std::max(a.y, b.y);
  const double inter = (iw > 0.0 && ih > 0.0) ? iw * ih : 0.0;
  // Areas from corner differences; identical boxes give exactly 1.
  const double area_a = (a.right() - a.x) * (a.bottom() - a.y);
  const double area_b = (b.right() - b.x) * (b.bottom() - b.y);
  const double uni = area_a + area_b - inter;
  if (uni <= 0.0) return 0.0;
  return inter / uni;
}

BitMask rasterize(const Polygon& polygon, int width, int height) {
  check_polygon(polygon);
  if (width < 1 || height < 1) {
    throw GeometryError("raster dimensions must be at least 1x1");
  }
  BitMask mask(width, height);
  const PixelRect rect = polygon_pixel_rect(polygon, width, height);
  if (!rect.empty()) fill_polygon(polygon, rect, 0, 0, mask);
  return mask;
}

MaskPatch rasterize_patch(std::span<const Polygon> polygons, int frame_width,
                          int frame_height) {
  if (frame_width < 1 || frame_height < 1) {
    throw GeometryError("raster dimensions must be at least 1x1");
  }
  PixelRect bounds{frame_width, frame_height, 0, 0};
  std::vector<PixelRect> rects;
  rects.reserve(polygons.size());
  for (const Polygon& p : polygons) {
    check_polygon(p);
    rects.push_back(polygon_pixel_rect(p, frame_width, frame_height));
    const PixelRect& r = rects.back();
    if (r.empty()) continue;
    bounds.x0 = std::min(bounds.x0, r.x0);
    bounds.y0 = std::min(bounds.y0, r.y0);
    bounds.x1 = std::max(bounds.x1, r.x1);
    bounds.y1 = std::max(bounds.y1, r.y1);
  }
  if (bounds.empty()) {
    return MaskPatch(frame_width, frame_height, 0, 0, BitMask(0, 0));
  }
  BitMask local(bounds.x1 - bounds.x0, bounds.y1 - bounds.y0);
  for (std::size_t k = 0; k < polygons.size(); ++k) {
    if (rects[k].empty()) continue;
    fill_polygon(polygons[k], rects[k], bounds.x0, bounds.y0, local);
  }
  return MaskPatch(frame_width, frame_height, bounds.x0, bounds.y0,
                   std::move(local));
}

double mask_iou(const BitMask& a, const BitMask& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw GeometryError("mask dimension mismatch: " + std::to_string(a.width()) +
                        "x" + std::to_string(a.height()) + " vs " +
                        std::to_string(b.width()) + "x" +
                        std::to_string(b.height()));
  }
  std::int64_t inter = 0;
  std::int64_t uni = 0;
  const auto abits = a.bits();
  const auto bbits = b.bits();
  for (std::size_t k = 0; k < abits.size(); ++k) {
    inter += abits[k] & bbits[k];
    uni += abits[k] | bbits[k];
  }
  if (uni == 0) return 0.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

double mask_iou(const MaskPatch& a, const MaskPatch& b) {
  if (a.frame_width() != b.frame_width() ||
      a.frame_height() != b.frame_height()) {
    throw GeometryError(
        "mask dimension mismatch: " + std::to_string(a.frame_width()) + "x" +
        std::to_string(a.frame_height()) + " vs " +
        std::to_string(b.frame_width()) + "x" +
        std::to_string(b.frame_height()));
  }
  const BitMask& la = a.local();
  const BitMask& lb = b.local();
  const int x0 = std::max(a.offset_x(), b.offset_x());
  const int y0 = std::max(a.offset_y(), b.offset_y());
  const int x1 =
      std::min(a.offset_x() + la.width(), b.offset_x() + lb.width());
  const int y1 =
      std::min(a.offset_y() + la.height(), b.offset_y() + lb.height());
  std::int64_t inter = 0;
  for (int row = y0; row < y1; ++row) {
    const std::uint8_t* pa =
        la.bits().data() +
        static_cast<std::size_t>(row - a.offset_y()) * la.width() +
        (x0 - a.offset_x());
    const std::uint8_t* pb =
        lb.bits().data() +
        static_cast<std::size_t>(row - b.offset_y()) * lb.width() +
        (x0 - b.offset_x());
    for (int k = 0; k < x1 - x0; ++k) inter += pa[k] & pb[k];
  }
  const std::int64_t uni = a.area() + b.area() - inter;
  if (uni == 0) return 0.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

RLEMask rle_encode(const BitMask& mask) {
  RLEMask rle{mask.width(), mask.height(), {}};
  std::uint8_t current = 0;
  std::uint32_t run = 0;
  for (std::uint8_t bit : mask.bits()) {
    if (bit != current) {
      rle.runs.push_back(run);
      run = 0;
      current = bit;
    }
    ++run;
  }
  rle.runs.push_back(run);
  return rle;
}

BitMask rle_decode(const RLEMask& rle) {
  if (rle.width < 0 || rle.height < 0) {
    throw CorruptMaskError("corrupt mask: negative dimensions");
  }
  const std::uint64_t expected =
      static_cast<std::uint64_t>(rle.width) * static_cast<std::uint64_t>(rle.height);
  const std::uint64_t total = std::accumulate(rle.runs.begin(), rle.runs.end(),
                                              std::uint64_t{0});
  if (total != expected) {
    throw CorruptMaskError("corrupt mask: runs sum to " + std::to_string(total) +
                           ", expected " + std::to_string(expected));
  }
  BitMask mask(rle.width, rle.height);
  auto bits = mask.bits();
  std::size_t pos = 0;
  std::uint8_t value = 0;
  for (std::uint32_t run : rle.runs) {
    std::fill_n(bits.begin() + static_cast<std::ptrdiff_t>(pos), run, value);
    pos += run;
    value ^= 1;
  }
  return mask;
}

BitMask resample_nearest(const BitMask& mask, int width, int height) {
  BitMask out(width, height);
  if (mask.width() == 0 || mask.height() == 0) return out;
  for (int row = 0; row < height; ++row) {
    const double sy = (row + 0.5) * mask.height() / height;
    const int src_row = std::min(static_cast<int>(sy), mask.height() - 1);
    for (int col = 0; col < width; ++col) {
      const double sx = (col + 0.5) * mask.width() / width;
      const int src_col = std::min(static_cast<int>(sx), mask.width() - 1);
      if (mask.get(src_row, src_col)) out.set(row, col);
    }
  }
  return out;
}

SizeClass size_class(double area) {
  if (area < kSmallAreaLimit) return SizeClass::kSmall;
  if (area < kMediumAreaLimit) return SizeClass::kMedium;
  return SizeClass::kLarge;
}

std::string_view to_string(SizeClass size) {
  switch (size) {
    case SizeClass::kSmall:
      return "small";
    case SizeClass::kMedium:
      return "medium";
    case SizeClass::kLarge:
      return "large";
  }
  return "unknown";
}

BBox polygon_bounds(std::span<const Polygon> polygons) {
  double min_x = std::numeric_limits<double>::infinity();
  double min_y = min_x;
  double max_x = -min_x;
  double max_y = -min_x;
  for (const Polygon& p : polygons) {
    for (const Point& v : p.vertices) {
      min_x = std::min(min_x, v.x);
      max_x = std::max(max_x, v.x);
      min_y = std::min(min_y, v.y);
      max_y = std::max(max_y, v.y);
    }
  }
  if (min_x > max_x) return {};
  return {min_x, min_y, max_x - min_x, max_y - min_y};
}

Polygon box_polygon(const BBox& box) {
  return Polygon{{{box.x, box.y},
                  {box.right(), box.y},
                  {box.right(), box.bottom()},
                  {box.x, box.bottom()}}};
}

}  // namespace roadeval
