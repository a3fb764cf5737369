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

#ifndef ROADEVAL_TESTS_TEST_SUPPORT_HPP_
#define ROADEVAL_TESTS_TEST_SUPPORT_HPP_

#include <cstdint>
#include <memory>
#include <random>
#include <vector>

#include "roadeval/annotations.hpp"
#include "roadeval/geometry.hpp"

namespace roadeval::testing {

inline Annotation make_gt(std::int64_t id, int class_id, BBox box,
                          std::int64_t image_id = 1) {
  Annotation a;
  a.id = id;
  a.image_id = image_id;
  a.class_id = class_id;
  a.bbox = box;
  a.area = box.area();
  return a;
}

inline Detection make_det(std::int64_t id, int class_id, BBox box,
                          double score, std::int64_t image_id = 1) {
  Detection d;
  d.id = id;
  d.image_id = image_id;
  d.class_id = class_id;
  d.bbox = box;
  d.score = score;
  d.area = box.area();
  return d;
}

// Box (0, 0, 10, 10) against (0, 0, w, 10) has IoU w / 10 for w <= 10.
inline BBox box_with_iou_tenths(int tenths) {
  return {0.0, 0.0, static_cast<double>(tenths), 10.0};
}

inline LabelMap two_classes() {
  return LabelMap({{1, "X"}, {2, "Y"}});
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  int integer(int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(engine_);
  }
  double real(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  bool chance(double p) { return real(0.0, 1.0) < p; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace roadeval::testing

#endif  // ROADEVAL_TESTS_TEST_SUPPORT_HPP_
