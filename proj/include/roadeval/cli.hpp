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

#ifndef ROADEVAL_CLI_HPP_
#define ROADEVAL_CLI_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "roadeval/annotations.hpp"
#include "roadeval/matching.hpp"
#include "roadeval/oracle.hpp"

namespace roadeval::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitInput = 2;

struct RunConfig {
  std::string command;
  std::filesystem::path gt;
  std::filesystem::path det;
  std::filesystem::path labels;  // optional label-map file (convert)
  std::filesystem::path input;   // matrix csv (render) or VoTT export (convert)
  std::filesystem::path out;
  Thresholds thresholds;
  Algorithm algorithm = Algorithm::kConventional;
  std::uint64_t seed = 0;
  std::set<std::string> formats = {"json", "csv"};
  SplitRatios ratios;
  int width = 0;
  int height = 0;
  bool force = false;
  std::filesystem::path det_out;  // rescale: optional rescaled detections
  // simulate / synthesize
  oracle::ScenarioConfig scenario;
  int scenarios = 1000;

  // Throws ConfigError for invalid enum values, thresholds, formats or
  // missing input files.
  void check() const;
};

// Each command returns an exit code; input errors propagate as InputError.
int cmd_evaluate(const RunConfig& config, std::ostream& log);
int cmd_compare(const RunConfig& config, std::ostream& log);
int cmd_split(const RunConfig& config, std::ostream& log);
int cmd_rescale(const RunConfig& config, std::ostream& log);
int cmd_convert(const RunConfig& config, std::ostream& log);
int cmd_render(const RunConfig& config, std::ostream& log);
int cmd_simulate(const RunConfig& config, std::ostream& log);
int cmd_synthesize(const RunConfig& config, std::ostream& log);

// Parses a VoTT-subset export into the ground-truth format. Accepts one asset
// object, an array of them, or an object with an "assets" map. Each asset is
// {"asset": {"name", "size": {"width", "height"}}, "regions": [{"tags": [..],
// "points": [{"x", "y"}, ..]}]}; the first tag names the class.
GroundTruthSet convert_vott(std::string_view json_text, const LabelMap& labels);

// Writes `content` to a temporary sibling and renames it over `path`.
void write_atomic(const std::filesystem::path& path, std::string_view content);

// Full command line (argv[0] excluded). Exit codes: 0 ok, 2 input error,
// 1 internal error.
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace roadeval::cli

#endif  // ROADEVAL_CLI_HPP_
