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

#ifndef ROADEVAL_REPORT_HPP_
#define ROADEVAL_REPORT_HPP_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "roadeval/matching.hpp"
#include "roadeval/metrics.hpp"
#include "roadeval/oracle.hpp"

namespace roadeval {

inline constexpr std::string_view kLeftDetection = "left detection";
inline constexpr std::string_view kUnclassifiedDetection =
    "unclassified detection";

// Four decimal places, e.g. "0.2549".
std::string format_ratio(double value);

std::string report_json(const MetricsReport& report);

// Class rows (tag, precision, recall) side by side with the twelve aggregate
// index rows.
std::string per_class_csv(const MetricsReport& report);

std::string matrix_csv(const ConfusionMatrix& cm);

// Plain table form of a matrix CSV, labels included.
struct MatrixTable {
  std::vector<std::string> classes;
  // (classes + 1) rows of (classes + 1) counts.
  std::vector<std::vector<std::int64_t>> counts;
};

MatrixTable to_table(const ConfusionMatrix& cm);
// Throws ParseError on malformed input.
MatrixTable parse_matrix_csv(std::string_view csv);

// One rect per cell, grayscale by count (darkest = max), class labels on both
// axes, the left-detection column and unclassified-detection row set apart.
std::string render_svg(const MatrixTable& table);

// Conventional and modified per-class P/R side by side, then the TP/FP/FN
// deltas (modified minus conventional).
std::string comparison_csv(const ConfusionMatrix& conventional,
                           const ConfusionMatrix& modified);
std::string comparison_csv(const oracle::DeltaStats& stats);

}  // namespace roadeval

#endif  // ROADEVAL_REPORT_HPP_
