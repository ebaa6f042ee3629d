#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mec/assign.hpp"
#include "mec/ingest.hpp"
#include "mec/metrics.hpp"
#include "mec/model.hpp"
#include "mec/report.hpp"

namespace mec::pipeline {

struct RunConfig {
  ingest::BundleLimits limits;
  int levels = 2;
  double tracklet_scale = 1e-5;
  std::vector<double> iou_thresholds = {0.3, 0.5};
  std::set<std::string> metric_selection;  // empty selects every metric
  int jobs = 1;
  metrics::SoftWeighting lea_soft_weighting = metrics::SoftWeighting::both;
  double gied_iou_floor = 0.3;
};

// Validates thresholds/levels/jobs; throws ValueError on violation.
void validate_config(const RunConfig& config);

// Runs fn(i) for every i in [0, n) across min(jobs, n) threads. The first
// exception, if any, is rethrown after all workers join.
void parallel_for(std::size_t n, int jobs,
                  const std::function<void(std::size_t)>& fn);

// Canonical metric keys for the configured thresholds.
std::vector<std::string> metric_keys(const RunConfig& config);

// Ordered metric table; absent optional = metric unavailable for this scope.
struct MetricTable {
  std::vector<std::pair<std::string, std::optional<double>>> entries;

  void set(const std::string& key, std::optional<double> value);
  std::optional<double> get(const std::string& key) const;
};

struct VideoResult {
  std::string video_id;
  MetricTable metrics;
};

struct EvalResult {
  MetricTable aggregate;
  std::vector<VideoResult> per_video;
};

// Clustering + entity-cluster-assignment artifacts of one video.
struct VideoArtifacts {
  VisualClusterSet clusters;       // top hierarchy level (clamped)
  EntityGroupSet groups;           // from the predicted mention map
  assign::Assignment assignment;   // per-group cluster choice
  bool has_assignment = false;     // false when there are no proposals
};

VideoArtifacts build_artifacts(const ingest::RunBundle& bundle,
                               const RunConfig& config);

// Loads every bundle below bundle_dir, sorted by video_id.
std::vector<ingest::RunBundle> load_bundles(const std::string& bundle_dir,
                                            const RunConfig& config);

// IDF corpus shared by a whole evaluation run: one document per GT role
// caption, in video order.
std::vector<std::vector<std::string>> idf_corpus(
    const std::vector<ingest::RunBundle>& bundles);

// Full metric suite for one video.
MetricTable evaluate_video(const ingest::RunBundle& bundle,
                           const RunConfig& config,
                           const metrics::CiderScorer& scorer);

// Per-video map (parallel over config.jobs) followed by a deterministic
// aggregation: each aggregate metric is the mean of the per-video values that
// are available, reduced in video_id order.
EvalResult evaluate_corpus(const std::vector<ingest::RunBundle>& bundles,
                           const RunConfig& config);

// Report construction (shared by `eval` and `report`).
report::Value eval_report_json(const EvalResult& result,
                               const RunConfig& config);
std::string eval_report_csv(const EvalResult& result, const RunConfig& config);

// clusters.json payload for one video.
report::Value cluster_report_json(const std::string& video_id,
                                  const VisualClusterSet& clusters);

// Assignment payload for one video.
report::Value assign_report_json(const ingest::RunBundle& bundle,
                                 const VideoArtifacts& artifacts);

}  // namespace mec::pipeline
