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

#include "roadeval/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "json.hpp"
#include "roadeval/errors.hpp"

namespace roadeval {

namespace {

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) {
    return std::string(s);
  }
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t k = 0; k < line.size(); ++k) {
    const char c = line[k];
    if (quoted) {
      if (c == '"') {
        if (k + 1 < line.size() && line[k + 1] == '"') {
          current += '"';
          ++k;
        } else {
          quoted = false;
        }
      } else {
        current += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(current));
      current.clear();
    } else {
      current += c;
    }
  }
  if (quoted) throw ParseError("matrix csv: unterminated quote");
  fields.push_back(std::move(current));
  return fields;
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

}  // namespace

std::string format_ratio(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", value);
  return buf;
}

std::string report_json(const MetricsReport& report) {
  nlohmann::ordered_json root;
  root["geometry_mode"] = std::string(to_string(report.thresholds.geometry_mode));
  root["algorithm"] = std::string(to_string(report.algorithm));
  root["thresholds"] = {{"iou", report.thresholds.iou_threshold},
                        {"confidence", report.thresholds.confidence_threshold}};
  root["counts"] = {{"images", report.images},
                    {"ground_truths", report.ground_truths},
                    {"detections", report.detections}};
  root["mask_fallbacks"] = report.mask_fallbacks;
  nlohmann::ordered_json classes = nlohmann::ordered_json::array();
  for (const PerClassMetrics& m : report.per_class) {
    nlohmann::ordered_json obj;
    obj["id"] = m.class_id;
    obj["tag"] = m.name;
    obj["precision_@0.5IOU"] = m.precision;
    obj["recall_@0.5IOU"] = m.recall;
    obj["true_positives"] = m.true_positives;
    obj["support_gt"] = m.support_gt;
    obj["support_det"] = m.support_det;
    obj["precision_undefined"] = m.precision_undefined;
    obj["recall_undefined"] = m.recall_undefined;
    classes.push_back(std::move(obj));
  }
  root["per_class"] = std::move(classes);
  nlohmann::ordered_json idx;
  for (const IndexValue& v : indices(report.aggregate)) {
    idx[std::string(v.key)] = v.value;
  }
  root["indices"] = std::move(idx);
  return root.dump(2) + "\n";
}

std::string per_class_csv(const MetricsReport& report) {
  const auto idx = indices(report.aggregate);
  std::ostringstream out;
  out << "tag,precision_@0.5IOU,recall_@0.5IOU,index,value\n";
  const std::size_t rows = std::max(report.per_class.size(), idx.size());
  for (std::size_t k = 0; k < rows; ++k) {
    if (k < report.per_class.size()) {
      const PerClassMetrics& m = report.per_class[k];
      out << csv_field(m.name) << ',' << format_ratio(m.precision) << ','
          << format_ratio(m.recall);
    } else {
      out << ",,";
    }
    out << ',';
    if (k < idx.size()) {
      out << csv_field(idx[k].index) << ',' << format_ratio(idx[k].value);
    } else {
      out << ',';
    }
    out << '\n';
  }
  return out.str();
}

MatrixTable to_table(const ConfusionMatrix& cm) {
  MatrixTable table;
  for (const Category& c : cm.labels().entries()) table.classes.push_back(c.name);
  const std::size_t n = cm.classes() + 1;
  table.counts.assign(n, std::vector<std::int64_t>(n, 0));
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) table.counts[r][c] = cm.at(r, c);
  }
  return table;
}

std::string matrix_csv(const ConfusionMatrix& cm) {
  const MatrixTable table = to_table(cm);
  std::ostringstream out;
  out << "true\\predicted";
  for (const std::string& name : table.classes) out << ',' << csv_field(name);
  out << ',' << kLeftDetection << '\n';
  for (std::size_t r = 0; r < table.counts.size(); ++r) {
    out << (r < table.classes.size() ? csv_field(table.classes[r])
                                     : std::string(kUnclassifiedDetection));
    for (std::int64_t v : table.counts[r]) out << ',' << v;
    out << '\n';
  }
  return out.str();
}

MatrixTable parse_matrix_csv(std::string_view csv) {
  std::vector<std::vector<std::string>> lines;
  std::size_t pos = 0;
  while (pos < csv.size()) {
    std::size_t end = csv.find('\n', pos);
    if (end == std::string_view::npos) end = csv.size();
    std::string_view line = csv.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) lines.push_back(split_csv_line(line));
    pos = end + 1;
  }
  if (lines.size() < 2) throw ParseError("matrix csv: no data rows");
  const auto& header = lines.front();
  if (header.size() < 2 || header.back() != kLeftDetection) {
    throw ParseError("matrix csv: header must end with \"left detection\"");
  }
  MatrixTable table;
  table.classes.assign(header.begin() + 1, header.end() - 1);
  const std::size_t n = table.classes.size() + 1;
  if (lines.size() != n + 1) {
    throw ParseError("matrix csv: expected " + std::to_string(n) +
                     " data rows, found " + std::to_string(lines.size() - 1));
  }
  for (std::size_t r = 0; r < n; ++r) {
    const auto& row = lines[r + 1];
    const std::string expected = r + 1 < n ? table.classes[r]
                                           : std::string(kUnclassifiedDetection);
    if (row.size() != n + 1 || row.front() != expected) {
      throw ParseError("matrix csv: row " + std::to_string(r + 1) +
                       " must be \"" + expected + "\" followed by " +
                       std::to_string(n) + " counts");
    }
    std::vector<std::int64_t> counts;
    for (std::size_t c = 1; c < row.size(); ++c) {
      std::int64_t v = 0;
      const std::string& f = row[c];
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc() || ptr != f.data() + f.size() || v < 0) {
        throw ParseError("matrix csv: row " + std::to_string(r + 1) +
                         " has a non-count value \"" + f + "\"");
      }
      counts.push_back(v);
    }
    table.counts.push_back(std::move(counts));
  }
  if (table.counts.back().back() != 0) {
    throw ParseError("matrix csv: corner cell must be 0");
  }
  return table;
}

std::string render_svg(const MatrixTable& table) {
  constexpr int kCell = 40;
  constexpr int kMargin = 160;
  constexpr int kGap = 8;
  constexpr int kPad = 10;
  const int n = static_cast<int>(table.classes.size()) + 1;
  const bool with_text = n <= 20;
  auto origin = [&](int idx) {
    return kMargin + idx * kCell + (idx == n - 1 ? kGap : 0);
  };
  const int size = origin(n - 1) + kCell + kPad;

  std::int64_t max_count = 0;
  for (const auto& row : table.counts) {
    for (std::int64_t v : row) max_count = std::max(max_count, v);
  }
  auto label = [&](int idx) {
    return table.classes[static_cast<std::size_t>(idx)];
  };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size
      << "\" height=\"" << size << "\" viewBox=\"0 0 " << size << ' ' << size
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  out << "<rect x=\"0\" y=\"0\" width=\"" << size << "\" height=\"" << size
      << "\" fill=\"#ffffff\"/>\n";
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      const std::int64_t v =
          table.counts[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
      const int shade =
          max_count == 0 ? 255
                         : static_cast<int>(255 - (255 * v + max_count / 2) /
                                                      max_count);
      out << "<rect x=\"" << origin(c) << "\" y=\"" << origin(r)
          << "\" width=\"" << kCell << "\" height=\"" << kCell
          << "\" fill=\"rgb(" << shade << ',' << shade << ',' << shade
          << ")\" stroke=\"#999999\"/>\n";
      if (with_text) {
        const char* ink = shade < 128 ? "#ffffff" : "#000000";
        out << "<text x=\"" << origin(c) + kCell / 2 << "\" y=\""
            << origin(r) + kCell / 2 + 4 << "\" text-anchor=\"middle\" fill=\""
            << ink << "\">" << v << "</text>\n";
      }
    }
  }
  for (int k = 0; k < n; ++k) {
    const std::string row_name =
        k < n - 1 ? label(k) : std::string(kUnclassifiedDetection);
    const std::string col_name =
        k < n - 1 ? label(k) : std::string(kLeftDetection);
    out << "<text x=\"" << kMargin - 6 << "\" y=\"" << origin(k) + kCell / 2 + 4
        << "\" text-anchor=\"end\">" << xml_escape(row_name) << "</text>\n";
    const int cx = origin(k) + kCell / 2;
    out << "<text x=\"" << cx << "\" y=\"" << kMargin - 6
        << "\" text-anchor=\"start\" transform=\"rotate(-60 " << cx << ' '
        << kMargin - 6 << ")\">" << xml_escape(col_name) << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

std::string comparison_csv(const ConfusionMatrix& conventional,
                           const ConfusionMatrix& modified) {
  const auto left = precision_recall(conventional);
  const auto right = precision_recall(modified);
  if (left.size() != right.size()) {
    throw ConfigError("comparison needs matrices over the same labels");
  }
  std::ostringstream out;
  out << "category,precision_@0.5IoU,recall_@0.5IoU,"
         "category,precision_@0.5IoU,recall_@0.5IoU,"
         "delta_tp,delta_fp,delta_fn\n";
  for (std::size_t k = 0; k < left.size(); ++k) {
    const PerClassMetrics& a = left[k];
    const PerClassMetrics& b = right[k];
    const std::int64_t fp_a = a.support_det - a.true_positives;
    const std::int64_t fp_b = b.support_det - b.true_positives;
    const std::int64_t fn_a = a.support_gt - a.true_positives;
    const std::int64_t fn_b = b.support_gt - b.true_positives;
    out << csv_field(a.name) << ',' << format_ratio(a.precision) << ','
        << format_ratio(a.recall) << ',' << csv_field(b.name) << ','
        << format_ratio(b.precision) << ',' << format_ratio(b.recall) << ','
        << (b.true_positives - a.true_positives) << ',' << (fp_b - fp_a) << ','
        << (fn_b - fn_a) << '\n';
  }
  return out.str();
}

std::string comparison_csv(const oracle::DeltaStats& stats) {
  return comparison_csv(stats.conventional, stats.modified);
}

}  // namespace roadeval
