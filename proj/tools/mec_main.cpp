#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mec/errors.hpp"
#include "mec/ingest.hpp"
#include "mec/log.hpp"
#include "mec/metrics.hpp"
#include "mec/model.hpp"
#include "mec/pipeline.hpp"
#include "mec/report.hpp"

namespace fs = std::filesystem;
using mec::pipeline::RunConfig;

namespace {

struct CommonArgs {
  std::string bundle_dir;
  std::string out_path;
  std::string format = "json";
  int jobs = 1;
  int levels = 2;
  double tracklet_scale = 1e-5;
  std::string iou_thresholds = "0.3,0.5";
  std::string metrics_list;
  std::string lea_soft_weighting = "both";
  std::string config_path;
  CLI::App* cmd = nullptr;
};

void add_common_options(CLI::App* cmd, CommonArgs* args,
                        bool bundle_required = true) {
  args->cmd = cmd;
  auto* bundle = cmd->add_option("--bundle", args->bundle_dir,
                                 "Bundle directory (single video or corpus)");
  if (bundle_required) bundle->required();
  cmd->add_option("--out", args->out_path,
                  "Output path (stdout when omitted)");
  cmd->add_option("--format", args->format, "Output format: json or csv")
      ->check(CLI::IsMember({"json", "csv"}));
  cmd->add_option("--jobs", args->jobs, "Parallel per-video jobs");
  cmd->add_option("--levels", args->levels, "FINCH hierarchy levels");
  cmd->add_option("--tracklet-scale", args->tracklet_scale,
                  "Same-tracklet distance scale");
  cmd->add_option("--iou-thresholds", args->iou_thresholds,
                  "Comma-separated IoU thresholds");
  cmd->add_option("--metrics", args->metrics_list,
                  "Comma-separated metric subset "
                  "(verb,cider,lea,lea_soft,iou,hota,purity,gied)");
  cmd->add_option("--lea-soft-weighting", args->lea_soft_weighting,
                  "Which LEA side the caption similarity weights")
      ->check(CLI::IsMember({"both", "recall", "precision"}));
  cmd->add_option("--config", args->config_path,
                  "Key-value config file; command-line flags win");
}

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

// key=value config file; a key applies only when the matching flag was not
// given on the command line.
void apply_config_file(CommonArgs* args) {
  if (args->config_path.empty()) return;
  std::ifstream in(args->config_path);
  if (!in) {
    mec::raise(mec::ErrorKind::io,
               "cannot open config file '" + args->config_path + "'");
  }
  const auto flag_given = [&](const char* name) {
    return args->cmd->count(name) > 0;
  };
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    line_number += 1;
    const std::string text = trim(line);
    if (text.empty() || text[0] == '#') continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) {
      mec::raise(mec::ErrorKind::value,
                 args->config_path + ":" + std::to_string(line_number) +
                     ": expected key=value");
    }
    const std::string key = trim(text.substr(0, eq));
    const std::string value = trim(text.substr(eq + 1));
    try {
      if (key == "bundle") {
        if (!flag_given("--bundle")) args->bundle_dir = value;
      } else if (key == "out") {
        if (!flag_given("--out")) args->out_path = value;
      } else if (key == "format") {
        if (!flag_given("--format")) args->format = value;
      } else if (key == "jobs") {
        if (!flag_given("--jobs")) args->jobs = std::stoi(value);
      } else if (key == "levels") {
        if (!flag_given("--levels")) args->levels = std::stoi(value);
      } else if (key == "tracklet-scale") {
        if (!flag_given("--tracklet-scale")) {
          args->tracklet_scale = std::stod(value);
        }
      } else if (key == "iou-thresholds") {
        if (!flag_given("--iou-thresholds")) args->iou_thresholds = value;
      } else if (key == "metrics") {
        if (!flag_given("--metrics")) args->metrics_list = value;
      } else if (key == "lea-soft-weighting") {
        if (!flag_given("--lea-soft-weighting")) {
          args->lea_soft_weighting = value;
        }
      } else {
        mec::raise(mec::ErrorKind::value,
                   args->config_path + ": unknown config key '" + key + "'");
      }
    } catch (const std::invalid_argument&) {
      mec::raise(mec::ErrorKind::value,
                 args->config_path + ":" + std::to_string(line_number) +
                     ": cannot parse value '" + value + "' for key '" + key +
                     "'");
    }
  }
}

std::vector<std::string> split_csv(const std::string& text) {
  std::vector<std::string> parts;
  std::string current;
  for (char c : text) {
    if (c == ',') {
      if (!current.empty()) parts.push_back(current);
      current.clear();
    } else if (!std::isspace(static_cast<unsigned char>(c))) {
      current.push_back(c);
    }
  }
  if (!current.empty()) parts.push_back(current);
  return parts;
}

RunConfig make_config(CommonArgs& args) {
  apply_config_file(&args);
  RunConfig config;
  config.levels = args.levels;
  config.tracklet_scale = args.tracklet_scale;
  config.jobs = args.jobs;
  config.iou_thresholds.clear();
  for (const std::string& part : split_csv(args.iou_thresholds)) {
    try {
      config.iou_thresholds.push_back(std::stod(part));
    } catch (const std::exception&) {
      mec::raise(mec::ErrorKind::value,
                 "cannot parse IoU threshold '" + part + "'");
    }
  }
  static const std::set<std::string> known{"verb",     "cider", "lea",
                                           "lea_soft", "iou",   "hota",
                                           "purity",   "gied"};
  for (const std::string& name : split_csv(args.metrics_list)) {
    if (known.count(name) == 0) {
      mec::raise(mec::ErrorKind::value, "unknown metric '" + name + "'");
    }
    config.metric_selection.insert(name);
  }
  if (args.lea_soft_weighting == "recall") {
    config.lea_soft_weighting = mec::metrics::SoftWeighting::recall_only;
  } else if (args.lea_soft_weighting == "precision") {
    config.lea_soft_weighting = mec::metrics::SoftWeighting::precision_only;
  } else if (args.lea_soft_weighting == "both") {
    config.lea_soft_weighting = mec::metrics::SoftWeighting::both;
  } else {
    mec::raise(mec::ErrorKind::value, "unknown lea-soft-weighting '" +
                                          args.lea_soft_weighting + "'");
  }
  mec::pipeline::validate_config(config);
  return config;
}

void emit(const std::string& out_path, const std::string& content) {
  if (out_path.empty()) {
    std::cout << content;
  } else {
    mec::report::write_file(out_path, content);
  }
}

int run_validate(CommonArgs& args) {
  const RunConfig config = make_config(args);
  const auto manifests = mec::ingest::discover_manifests(args.bundle_dir);
  mec::report::Array entries;
  int num_errors = 0;
  for (const std::string& manifest : manifests) {
    mec::report::Object entry;
    entry.emplace_back("manifest", manifest);
    try {
      const auto bundle = mec::ingest::load_run_bundle(manifest, config.limits);
      entry.emplace_back("video_id", bundle.proposals.video_id);
      entry.emplace_back("status", "ok");
    } catch (const mec::Error& e) {
      entry.emplace_back("status", "error");
      entry.emplace_back("error", std::string(e.what()));
      num_errors += 1;
    }
    entries.push_back(mec::report::Value(std::move(entry)));
  }
  mec::report::Object root;
  root.emplace_back("bundles_checked", std::int64_t(manifests.size()));
  root.emplace_back("num_errors", std::int64_t(num_errors));
  root.emplace_back("bundles", mec::report::Value(std::move(entries)));
  const std::string content =
      mec::report::to_json(mec::report::Value(std::move(root)));
  if (!args.out_path.empty()) {
    mec::report::write_file(args.out_path, content);
  }
  std::cout << num_errors << " errors\n";
  return num_errors == 0 ? 0 : 1;
}

int run_cluster(CommonArgs& args) {
  const RunConfig config = make_config(args);
  const auto bundles = mec::pipeline::load_bundles(args.bundle_dir, config);
  std::vector<mec::report::Value> payloads(bundles.size());
  mec::pipeline::parallel_for(bundles.size(), config.jobs, [&](std::size_t i) {
    const auto artifacts = mec::pipeline::build_artifacts(bundles[i], config);
    if (!bundles[i].proposals.proposals.empty()) {
      mec::validate_cluster_set(artifacts.clusters, bundles[i].proposals);
    }
    payloads[i] = mec::pipeline::cluster_report_json(
        bundles[i].proposals.video_id, artifacts.clusters);
  });
  mec::report::Value out =
      payloads.size() == 1
          ? std::move(payloads.front())
          : mec::report::Value(mec::report::Array(payloads.begin(),
                                                  payloads.end()));
  emit(args.out_path, mec::report::to_json(out));
  return 0;
}

int run_assign(CommonArgs& args) {
  const RunConfig config = make_config(args);
  const auto bundles = mec::pipeline::load_bundles(args.bundle_dir, config);
  std::vector<mec::report::Value> payloads(bundles.size());
  mec::pipeline::parallel_for(bundles.size(), config.jobs, [&](std::size_t i) {
    const auto artifacts = mec::pipeline::build_artifacts(bundles[i], config);
    payloads[i] = mec::pipeline::assign_report_json(bundles[i], artifacts);
  });
  mec::report::Value out =
      payloads.size() == 1
          ? std::move(payloads.front())
          : mec::report::Value(mec::report::Array(payloads.begin(),
                                                  payloads.end()));
  emit(args.out_path, mec::report::to_json(out));
  return 0;
}

int run_eval(CommonArgs& args) {
  const RunConfig config = make_config(args);
  const auto bundles = mec::pipeline::load_bundles(args.bundle_dir, config);
  const auto result = mec::pipeline::evaluate_corpus(bundles, config);
  if (args.format == "csv") {
    emit(args.out_path, mec::pipeline::eval_report_csv(result, config));
  } else {
    emit(args.out_path, mec::report::to_json(
                            mec::pipeline::eval_report_json(result, config)));
  }
  return 0;
}

int run_gied(CommonArgs& args, const std::string& dumps_dir) {
  const RunConfig config = make_config(args);
  auto bundles = mec::pipeline::load_bundles(args.bundle_dir, config);

  if (!dumps_dir.empty()) {
    // Checkpoint-dump mode: one GIED value per embedding dump, in
    // lexicographic dump-name order.
    if (bundles.size() != 1) {
      mec::raise(mec::ErrorKind::value,
                 "--dumps requires a single-video bundle");
    }
    auto& bundle = bundles.front();
    std::vector<std::string> dumps;
    for (const auto& entry : fs::directory_iterator(dumps_dir)) {
      if (entry.is_regular_file() && entry.path().extension() == ".bin") {
        dumps.push_back(entry.path().string());
      }
    }
    std::sort(dumps.begin(), dumps.end());
    if (dumps.empty()) {
      mec::raise(mec::ErrorKind::io,
                 "no .bin dumps found in '" + dumps_dir + "'");
    }
    if (!bundle.grounding.has_value()) {
      mec::raise(mec::ErrorKind::value,
                 "gied requires grounding annotations");
    }
    std::vector<std::vector<mec::report::Value>> rows;
    for (const std::string& dump : dumps) {
      const auto tensor = mec::ingest::load_tensor(dump);
      if (tensor.dims.size() != 2 ||
          tensor.dims[0] != bundle.proposals.proposals.size()) {
        mec::raise(mec::ErrorKind::consistency,
                   "dump '" + dump + "' rows do not match proposal count");
      }
      mec::EmbeddingMatrix embeddings;
      embeddings.values = mec::Matrix(tensor.dims[0], tensor.dims[1]);
      for (std::size_t i = 0; i < tensor.values.size(); ++i) {
        embeddings.values.data[i] = tensor.values[i];
      }
      const auto value =
          mec::metrics::gied(embeddings, bundle.proposals, *bundle.grounding,
                             config.gied_iou_floor);
      rows.push_back({mec::report::Value(fs::path(dump).filename().string()),
                      value.has_value() ? mec::report::Value(*value)
                                        : mec::report::Value(nullptr)});
    }
    emit(args.out_path, mec::report::to_csv({"dump", "gied"}, rows));
    return 0;
  }

  // Bundle mode: per-video GIED plus the mean over videos with a value.
  std::vector<std::optional<double>> values(bundles.size());
  mec::pipeline::parallel_for(bundles.size(), config.jobs, [&](std::size_t i) {
    if (bundles[i].grounding.has_value()) {
      values[i] = mec::metrics::gied(bundles[i].embeddings,
                                     bundles[i].proposals,
                                     *bundles[i].grounding,
                                     config.gied_iou_floor);
    }
  });
  if (args.format == "csv") {
    std::vector<std::vector<mec::report::Value>> rows;
    for (std::size_t i = 0; i < bundles.size(); ++i) {
      rows.push_back({mec::report::Value(bundles[i].proposals.video_id),
                      values[i].has_value() ? mec::report::Value(*values[i])
                                            : mec::report::Value(nullptr)});
    }
    emit(args.out_path, mec::report::to_csv({"video_id", "gied"}, rows));
    return 0;
  }
  double sum = 0.0;
  int available = 0;
  mec::report::Array per_video;
  for (std::size_t i = 0; i < bundles.size(); ++i) {
    mec::report::Object entry;
    entry.emplace_back("video_id", bundles[i].proposals.video_id);
    entry.emplace_back("gied", values[i].has_value()
                                   ? mec::report::Value(*values[i])
                                   : mec::report::Value(nullptr));
    per_video.push_back(mec::report::Value(std::move(entry)));
    if (values[i].has_value()) {
      sum += *values[i];
      available += 1;
    }
  }
  mec::report::Object root;
  root.emplace_back("gied", available == 0
                                ? mec::report::Value(nullptr)
                                : mec::report::Value(sum / available));
  root.emplace_back("available_videos", std::int64_t(available));
  root.emplace_back("per_video", mec::report::Value(std::move(per_video)));
  emit(args.out_path, mec::report::to_json(mec::report::Value(std::move(root))));
  return 0;
}

// Re-serializes an existing evaluation report (json <-> csv).
int run_report(const std::string& in_path, CommonArgs& args) {
  apply_config_file(&args);
  const std::string bytes = [&] {
    std::ifstream in(in_path, std::ios::binary);
    if (!in) mec::raise(mec::ErrorKind::io, "cannot open '" + in_path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
  }();
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(bytes);
  } catch (const nlohmann::json::parse_error& e) {
    mec::raise(mec::ErrorKind::parse, "malformed JSON in '" + in_path +
                                          "' at byte " + std::to_string(e.byte) +
                                          ": " + e.what());
  }
  if (!j.contains("per_video") || !j.contains("aggregate")) {
    mec::raise(mec::ErrorKind::schema,
               "'" + in_path + "' is not an evaluation report");
  }
  std::vector<std::string> keys;
  for (const auto& [key, _] : j["aggregate"].items()) keys.push_back(key);

  if (args.format == "csv") {
    std::vector<std::string> header{"video_id"};
    header.insert(header.end(), keys.begin(), keys.end());
    std::vector<std::vector<mec::report::Value>> rows;
    for (const auto& video : j["per_video"]) {
      std::vector<mec::report::Value> row{
          mec::report::Value(video["video_id"].get<std::string>())};
      for (const std::string& key : keys) {
        const auto& metrics = video["metrics"];
        if (metrics.contains(key) && !metrics[key].is_null()) {
          row.push_back(mec::report::Value(metrics[key].get<double>()));
        } else {
          row.push_back(mec::report::Value(nullptr));
        }
      }
      rows.push_back(std::move(row));
    }
    emit(args.out_path, mec::report::to_csv(header, rows));
  } else {
    // Normalized JSON re-emit through the deterministic writer.
    std::function<mec::report::Value(const nlohmann::ordered_json&)> convert =
        [&](const nlohmann::ordered_json& node) -> mec::report::Value {
      if (node.is_null()) return mec::report::Value(nullptr);
      if (node.is_boolean()) return mec::report::Value(node.get<bool>());
      if (node.is_number_integer()) {
        return mec::report::Value(node.get<std::int64_t>());
      }
      if (node.is_number()) return mec::report::Value(node.get<double>());
      if (node.is_string()) return mec::report::Value(node.get<std::string>());
      if (node.is_array()) {
        mec::report::Array arr;
        for (const auto& item : node) arr.push_back(convert(item));
        return mec::report::Value(std::move(arr));
      }
      mec::report::Object obj;
      for (const auto& [key, value] : node.items()) {
        obj.emplace_back(key, convert(value));
      }
      return mec::report::Value(std::move(obj));
    };
    emit(args.out_path, mec::report::to_json(convert(j)));
  }
  return 0;
}

int dispatch(int argc, char** argv) {
  CLI::App app{"Multimodal entity coreference toolkit for video situation "
               "recognition: constrained visual clustering, entity cluster "
               "assignment, and the evaluation metric suite."};
  app.require_subcommand(1);

  CommonArgs validate_args, cluster_args, assign_args, eval_args, gied_args,
      report_args;
  std::string dumps_dir, report_in;

  auto* validate_cmd =
      app.add_subcommand("validate", "Check every bundle invariant");
  add_common_options(validate_cmd, &validate_args);

  auto* cluster_cmd =
      app.add_subcommand("cluster", "Entity visual clustering to clusters.json");
  add_common_options(cluster_cmd, &cluster_args);

  auto* assign_cmd = app.add_subcommand(
      "assign", "Entity cluster assignment from attention maps");
  add_common_options(assign_cmd, &assign_args);

  auto* eval_cmd =
      app.add_subcommand("eval", "Run the evaluation metric suite");
  add_common_options(eval_cmd, &eval_args);

  auto* gied_cmd = app.add_subcommand(
      "gied", "Ground-truth intra-entity distance diagnostic");
  add_common_options(gied_cmd, &gied_args);
  gied_cmd->add_option("--dumps", dumps_dir,
                       "Directory of embedding checkpoint dumps (*.bin)");

  auto* report_cmd = app.add_subcommand(
      "report", "Re-serialize an evaluation report (json <-> csv)");
  add_common_options(report_cmd, &report_args, /*bundle_required=*/false);
  report_cmd->add_option("--in", report_in, "Existing evaluation JSON")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  if (validate_cmd->parsed()) return run_validate(validate_args);
  if (cluster_cmd->parsed()) return run_cluster(cluster_args);
  if (assign_cmd->parsed()) return run_assign(assign_args);
  if (eval_cmd->parsed()) return run_eval(eval_args);
  if (gied_cmd->parsed()) return run_gied(gied_args, dumps_dir);
  if (report_cmd->parsed()) return run_report(report_in, report_args);
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (const mec::Error& e) {
    std::cerr << e.what() << "\n";
    return e.kind() == mec::ErrorKind::internal ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
}
