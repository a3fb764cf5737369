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

#include "roadeval/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "roadeval/errors.hpp"
#include "roadeval/metrics.hpp"
#include "roadeval/report.hpp"

namespace roadeval::cli {

namespace fs = std::filesystem;

namespace {

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void require_file(const fs::path& path, const char* flag) {
  if (path.empty()) {
    throw ConfigError(std::string("missing required ") + flag);
  }
  if (!fs::is_regular_file(path)) {
    throw ConfigError(std::string(flag) + ": no such file " + path.string());
  }
}

void require_out(const fs::path& path) {
  if (path.empty()) throw ConfigError("missing required --out");
}

// The output directory is created only once all inputs have been read.
void write_into(const fs::path& dir, const std::string& name,
                std::string_view content) {
  fs::create_directories(dir);
  write_atomic(dir / name, content);
}

struct LoadedInputs {
  GroundTruthSet gt;
  DetectionSet dets;
};

LoadedInputs load_inputs(const RunConfig& config) {
  require_file(config.gt, "--gt");
  require_file(config.det, "--det");
  LoadedInputs in;
  in.gt = load_ground_truth(config.gt);
  in.dets = load_detections(config.det, in.gt.labels, in.gt.images);
  return in;
}

std::string manifest_json(const RunConfig& config, const GroundTruthSet& source,
                          const SplitResult& split) {
  nlohmann::ordered_json root;
  root["seed"] = config.seed;
  root["ratios"] = {{"train", config.ratios.train},
                    {"val", config.ratios.val},
                    {"test", config.ratios.test}};
  root["images"] = {{"train", split.train.images.size()},
                    {"val", split.val.images.size()},
                    {"test", split.test.images.size()}};
  const auto train = split.train.class_counts();
  const auto val = split.val.class_counts();
  const auto test = split.test.class_counts();
  nlohmann::ordered_json per_class;
  for (const Category& c : source.labels.entries()) {
    per_class[c.name] = {{"train", train.at(c.id)},
                         {"val", val.at(c.id)},
                         {"test", test.at(c.id)}};
  }
  root["annotations_per_class"] = std::move(per_class);
  return root.dump(2) + "\n";
}

nlohmann::ordered_json delta_json(const oracle::DeltaStats& stats) {
  nlohmann::ordered_json obj;
  obj["geometry_mode"] = std::string(to_string(stats.mode));
  obj["scenarios"] = stats.scenarios;
  obj["diagonal_delta"] = stats.diagonal_delta;
  obj["off_diagonal_delta"] = stats.off_diagonal_delta;
  nlohmann::ordered_json classes = nlohmann::ordered_json::array();
  for (const oracle::ClassDelta& d : stats.per_class) {
    classes.push_back(
        {{"tag", d.name}, {"tp", d.tp}, {"fp", d.fp}, {"fn", d.fn}});
  }
  obj["per_class"] = std::move(classes);
  return obj;
}

}  // namespace

void RunConfig::check() const {
  thresholds.check();
  for (const std::string& f : formats) {
    if (f != "json" && f != "csv" && f != "svg") {
      throw ConfigError("unknown output format \"" + f + "\"");
    }
  }
}

void write_atomic(const fs::path& path, std::string_view content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("failed writing " + tmp.string());
  }
  fs::rename(tmp, path);
}

int cmd_evaluate(const RunConfig& config, std::ostream& log) {
  config.check();
  require_out(config.out);
  const LoadedInputs in = load_inputs(config);
  const FullReport full =
      full_report(in.gt, in.dets, config.thresholds, config.algorithm);
  if (config.formats.contains("json")) {
    write_into(config.out, "report.json", report_json(full.report));
  }
  if (config.formats.contains("csv")) {
    write_into(config.out, "metrics.csv", per_class_csv(full.report));
    write_into(config.out, "confusion_matrix.csv", matrix_csv(full.matrix));
  }
  if (config.formats.contains("svg")) {
    write_into(config.out, "confusion_matrix.svg",
               render_svg(to_table(full.matrix)));
  }
  if (full.report.mask_fallbacks > 0) {
    log << "warning: " << full.report.mask_fallbacks
        << " instance(s) without masks evaluated by box IoU\n";
  }
  log << "evaluated " << full.report.images << " images ("
      << to_string(config.thresholds.geometry_mode) << ", "
      << to_string(config.algorithm)
      << "): mAP=" << format_ratio(full.report.aggregate.map_50_95)
      << " mAP@.50=" << format_ratio(full.report.aggregate.map_50)
      << " AR@100=" << format_ratio(full.report.aggregate.ar_100) << '\n';
  return kExitOk;
}

int cmd_compare(const RunConfig& config, std::ostream& log) {
  config.check();
  require_out(config.out);
  const LoadedInputs in = load_inputs(config);
  const std::vector<ImageItems> images = group_by_image(in.gt, in.dets);
  const ConfusionMatrix conventional = build_confusion_matrix(
      images, in.gt.labels, Algorithm::kConventional, config.thresholds);
  const ConfusionMatrix modified = build_confusion_matrix(
      images, in.gt.labels, Algorithm::kModified, config.thresholds);
  write_into(config.out, "conventional_matrix.csv", matrix_csv(conventional));
  write_into(config.out, "modified_matrix.csv", matrix_csv(modified));
  write_into(config.out, "class_metrics.csv",
             comparison_csv(conventional, modified));
  if (config.formats.contains("svg")) {
    write_into(config.out, "conventional_matrix.svg",
               render_svg(to_table(conventional)));
    write_into(config.out, "modified_matrix.svg",
               render_svg(to_table(modified)));
  }
  log << "diagonal: conventional " << conventional.diagonal_sum()
      << ", modified " << modified.diagonal_sum() << '\n';
  return kExitOk;
}

int cmd_split(const RunConfig& config, std::ostream& log) {
  require_file(config.gt, "--gt");
  require_out(config.out);
  config.ratios.check();
  const GroundTruthSet gt = load_ground_truth(config.gt);
  const SplitResult split = stratified_split(gt, config.ratios, config.seed);
  write_into(config.out, "train.json", dump_ground_truth(split.train));
  write_into(config.out, "val.json", dump_ground_truth(split.val));
  write_into(config.out, "test.json", dump_ground_truth(split.test));
  write_into(config.out, "manifest.json", manifest_json(config, gt, split));
  log << "split " << gt.images.size() << " images: " << split.train.images.size()
      << '/' << split.val.images.size() << '/' << split.test.images.size()
      << '\n';
  return kExitOk;
}

int cmd_rescale(const RunConfig& config, std::ostream& log) {
  require_file(config.gt, "--gt");
  require_out(config.out);
  if (config.width < 1 || config.height < 1) {
    throw ConfigError("--width and --height must be at least 1");
  }
  const GroundTruthSet gt = load_ground_truth(config.gt);
  const RescaleOptions options{config.force};
  const GroundTruthSet scaled =
      rescale(gt, config.width, config.height, options);
  std::string det_text;
  if (!config.det.empty()) {
    require_file(config.det, "--det");
    if (config.det_out.empty()) {
      throw ConfigError("--det requires --det-out");
    }
    const DetectionSet dets = load_detections(config.det, gt.labels, gt.images);
    det_text = dump_detections(
        rescale(dets, gt.images, config.width, config.height, options));
  }
  if (config.out.has_parent_path()) {
    fs::create_directories(config.out.parent_path());
  }
  write_atomic(config.out, dump_ground_truth(scaled));
  if (!det_text.empty()) {
    if (config.det_out.has_parent_path()) {
      fs::create_directories(config.det_out.parent_path());
    }
    write_atomic(config.det_out, det_text);
  }
  log << "rescaled " << gt.images.size() << " images to " << config.width
      << 'x' << config.height << '\n';
  return kExitOk;
}

GroundTruthSet convert_vott(std::string_view json_text, const LabelMap& labels) {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("malformed VoTT export: ") + e.what());
  }
  std::vector<const nlohmann::json*> assets;
  if (root.is_array()) {
    for (const auto& a : root) assets.push_back(&a);
  } else if (root.is_object() && root.contains("assets")) {
    if (!root["assets"].is_object()) {
      throw ParseError("VoTT export: \"assets\" must be an object");
    }
    for (const auto& [key, a] : root["assets"].items()) assets.push_back(&a);
  } else if (root.is_object()) {
    assets.push_back(&root);
  } else {
    throw ParseError("VoTT export: unsupported top-level value");
  }

  GroundTruthSet gt;
  gt.labels = labels;
  std::int64_t ann_id = 0;
  for (std::size_t k = 0; k < assets.size(); ++k) {
    const nlohmann::json& entry = *assets[k];
    const std::string where = "asset " + std::to_string(k + 1);
    try {
      const auto& asset = entry.at("asset");
      ImageRecord image;
      image.id = static_cast<std::int64_t>(k + 1);
      image.file_name = asset.value("name", std::string());
      image.width = asset.at("size").at("width").get<int>();
      image.height = asset.at("size").at("height").get<int>();
      gt.images.push_back(image);
      for (const auto& region : entry.value("regions", nlohmann::json::array())) {
        const auto& tags = region.at("tags");
        if (!tags.is_array() || tags.empty()) {
          throw ParseError(where + ": region without tags");
        }
        const std::string tag = tags.front().get<std::string>();
        const auto class_id = labels.id_of(tag);
        if (!class_id) {
          throw ReferenceError(where + ": unknown tag \"" + tag + "\"");
        }
        Polygon polygon;
        for (const auto& p : region.at("points")) {
          polygon.vertices.push_back(
              {p.at("x").get<double>(), p.at("y").get<double>()});
        }
        Annotation a;
        a.id = ++ann_id;
        a.image_id = image.id;
        a.class_id = *class_id;
        a.bbox = polygon_bounds(std::span<const Polygon>(&polygon, 1));
        a.segmentation = std::vector<Polygon>{polygon};
        gt.annotations.push_back(std::move(a));
      }
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(where + ": " + e.what());
    }
  }
  // Round-trip through the ground-truth parser for full validation.
  return parse_ground_truth(dump_ground_truth(gt));
}

int cmd_convert(const RunConfig& config, std::ostream& log) {
  require_file(config.input, "--input");
  require_out(config.out);
  const LabelMap labels = config.labels.empty() ? LabelMap::road_damage()
                                                : load_label_map(config.labels);
  const GroundTruthSet gt = convert_vott(read_text(config.input), labels);
  if (config.out.has_parent_path()) {
    fs::create_directories(config.out.parent_path());
  }
  write_atomic(config.out, dump_ground_truth(gt));
  log << "converted " << gt.images.size() << " images, "
      << gt.annotations.size() << " annotations\n";
  return kExitOk;
}

int cmd_render(const RunConfig& config, std::ostream& log) {
  require_file(config.input, "--matrix");
  require_out(config.out);
  const MatrixTable table = parse_matrix_csv(read_text(config.input));
  if (config.out.has_parent_path()) {
    fs::create_directories(config.out.parent_path());
  }
  write_atomic(config.out, render_svg(table));
  log << "rendered " << table.classes.size() << "-class matrix\n";
  return kExitOk;
}

int cmd_simulate(const RunConfig& config, std::ostream& log) {
  config.check();
  require_out(config.out);
  if (config.scenarios < 1) throw ConfigError("--scenarios must be >= 1");
  std::vector<oracle::ScenarioConfig> configs;
  for (int k = 0; k < config.scenarios; ++k) {
    oracle::ScenarioConfig sc = config.scenario;
    sc.seed = config.seed + static_cast<std::uint64_t>(k);
    configs.push_back(sc);
  }
  nlohmann::ordered_json summary = nlohmann::ordered_json::array();
  for (GeometryMode mode : {GeometryMode::kBoxes, GeometryMode::kMasks}) {
    Thresholds t = config.thresholds;
    t.geometry_mode = mode;
    const oracle::DeltaStats stats = oracle::compare(configs, t);
    write_into(config.out,
               "class_metrics_" + std::string(to_string(mode)) + ".csv",
               comparison_csv(stats));
    summary.push_back(delta_json(stats));
    log << to_string(mode) << ": diagonal delta " << stats.diagonal_delta
        << " over " << stats.scenarios << " scenarios\n";
  }
  write_into(config.out, "summary.json", summary.dump(2) + "\n");
  return kExitOk;
}

int cmd_synthesize(const RunConfig& config, std::ostream& log) {
  require_out(config.out);
  oracle::ScenarioConfig sc = config.scenario;
  sc.seed = config.seed;
  const oracle::Scenario scenario = oracle::generate(sc);
  write_into(config.out, "gt.json", dump_ground_truth(scenario.gt));
  write_into(config.out, "det.json", dump_detections(scenario.dets));
  log << "wrote " << scenario.gt.annotations.size() << " ground truths and "
      << scenario.dets.detections.size() << " detections\n";
  return kExitOk;
}

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Detection evaluation with IoU- and class-prioritized "
               "confusion matrices"};
  app.name("roadeval");
  app.require_subcommand(1);

  RunConfig config;
  std::string algorithm = "conventional";
  std::string mode = "boxes";
  std::vector<std::string> formats = {"json", "csv"};
  std::vector<double> ratios = {0.7, 0.15, 0.15};

  auto add_eval_flags = [&](CLI::App* sub) {
    sub->add_option("--gt", config.gt, "Ground-truth JSON file");
    sub->add_option("--det", config.det, "Detections JSON file");
    sub->add_option("--iou", config.thresholds.iou_threshold,
                    "IoU threshold")->capture_default_str();
    sub->add_option("--conf", config.thresholds.confidence_threshold,
                    "Confidence threshold")->capture_default_str();
    sub->add_option("--mode", mode, "boxes|masks")->capture_default_str();
    sub->add_option("--out", config.out, "Output directory");
    sub->add_option("--format", formats, "Subset of json,csv,svg")
        ->delimiter(',');
  };
  auto add_scenario_flags = [&](CLI::App* sub) {
    oracle::ScenarioConfig& sc = config.scenario;
    sub->add_option("--images", sc.images)->capture_default_str();
    sub->add_option("--min-gts", sc.min_gts)->capture_default_str();
    sub->add_option("--max-gts", sc.max_gts)->capture_default_str();
    sub->add_option("--drop", sc.drop_rate)->capture_default_str();
    sub->add_option("--jitter", sc.jitter_px)->capture_default_str();
    sub->add_option("--swap", sc.class_swap_rate)->capture_default_str();
    sub->add_option("--clutter", sc.clutter_rate)->capture_default_str();
    sub->add_option("--overlap", sc.overlap_rate)->capture_default_str();
    sub->add_option("--classes", sc.classes)->capture_default_str();
    sub->add_option("--width", sc.image_width)->capture_default_str();
    sub->add_option("--height", sc.image_height)->capture_default_str();
    sub->add_option("--seed", config.seed)->capture_default_str();
    sub->add_option("--out", config.out, "Output directory");
  };

  CLI::App* evaluate = app.add_subcommand("evaluate", "Metrics report");
  add_eval_flags(evaluate);
  evaluate->add_option("--algorithm", algorithm, "conventional|modified")
      ->capture_default_str();
  evaluate->add_option("--seed", config.seed, "Unused; accepted for symmetry");

  CLI::App* compare = app.add_subcommand(
      "compare", "Conventional vs modified confusion matrices");
  add_eval_flags(compare);

  CLI::App* split = app.add_subcommand("split", "Per-image stratified split");
  split->add_option("--gt", config.gt, "Ground-truth JSON file");
  split->add_option("--seed", config.seed)->capture_default_str();
  split->add_option("--ratios", ratios, "train,val,test")
      ->delimiter(',')
      ->expected(3);
  split->add_option("--out", config.out, "Output directory");

  CLI::App* rescale_cmd = app.add_subcommand("rescale", "Rescale annotations");
  rescale_cmd->add_option("--gt", config.gt, "Ground-truth JSON file");
  rescale_cmd->add_option("--det", config.det, "Detections JSON file");
  rescale_cmd->add_option("--det-out", config.det_out,
                          "Rescaled detections file");
  rescale_cmd->add_option("--width", config.width, "Target width");
  rescale_cmd->add_option("--height", config.height, "Target height");
  rescale_cmd->add_flag("--force", config.force,
                        "Resample RLE-only masks (lossy)");
  rescale_cmd->add_option("--out", config.out, "Output ground-truth file");

  CLI::App* convert = app.add_subcommand("convert", "VoTT subset to JSON");
  convert->add_option("--input,--vott", config.input, "VoTT export");
  convert->add_option("--labels", config.labels, "Label-map JSON file");
  convert->add_option("--out", config.out, "Output ground-truth file");

  CLI::App* render = app.add_subcommand("render", "Matrix CSV to SVG");
  render->add_option("--matrix,--input", config.input, "Matrix CSV");
  render->add_option("--out", config.out, "Output SVG file");

  CLI::App* simulate = app.add_subcommand(
      "simulate", "Compare both matchers on generated scenarios");
  add_scenario_flags(simulate);
  simulate->add_option("--scenarios", config.scenarios)->capture_default_str();
  simulate->add_option("--iou", config.thresholds.iou_threshold)
      ->capture_default_str();
  simulate->add_option("--conf", config.thresholds.confidence_threshold)
      ->capture_default_str();

  CLI::App* synthesize = app.add_subcommand(
      "synthesize", "Write a generated ground-truth/detection pair");
  add_scenario_flags(synthesize);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    // Help for a subcommand is reported through the subcommand.
    if (e.get_exit_code() == 0) {
      out << (app.get_subcommands().empty()
                  ? app.help()
                  : app.get_subcommands().front()->help());
      return kExitOk;
    }
    err << "error: " << e.what() << '\n';
    return kExitInput;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    config.command = sub->get_name();
    config.algorithm = parse_algorithm(algorithm);
    config.thresholds.geometry_mode = parse_geometry_mode(mode);
    config.formats = std::set<std::string>(formats.begin(), formats.end());
    if (ratios.size() != 3) throw ConfigError("--ratios needs three values");
    config.ratios = {ratios[0], ratios[1], ratios[2]};
    if (sub == evaluate) return cmd_evaluate(config, out);
    if (sub == compare) return cmd_compare(config, out);
    if (sub == split) return cmd_split(config, out);
    if (sub == rescale_cmd) return cmd_rescale(config, out);
    if (sub == convert) return cmd_convert(config, out);
    if (sub == render) return cmd_render(config, out);
    if (sub == simulate) return cmd_simulate(config, out);
    if (sub == synthesize) return cmd_synthesize(config, out);
    err << "error: unknown command\n";
    return kExitInput;
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
}

}  // namespace roadeval::cli
