#include "mec/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

#include "mec/coref.hpp"
#include "mec/errors.hpp"
#include "mec/finch.hpp"
#include "mec/log.hpp"
#include "mec/text.hpp"

namespace mec::pipeline {

namespace {

bool selected(const RunConfig& config, const std::string& name) {
  return config.metric_selection.empty() ||
         config.metric_selection.count(name) != 0;
}

std::string iou_key(double theta) {
  return "iou@" + report::format_number(theta);
}

// Restricts a group set to `universe`, dropping outside slots and adding a
// singleton for every uncovered slot, so both partitions always compare over
// the same mentions.
EntityGroupSet restrict_to_universe(const EntityGroupSet& groups,
                                    const std::vector<SlotRef>& universe) {
  const std::set<SlotRef> allowed(universe.begin(), universe.end());
  EntityGroupSet out;
  std::set<SlotRef> covered;
  for (const auto& group : groups.groups) {
    std::vector<SlotRef> kept;
    for (const SlotRef& slot : group) {
      if (allowed.count(slot) != 0) {
        kept.push_back(slot);
        covered.insert(slot);
      }
    }
    if (!kept.empty()) out.groups.push_back(std::move(kept));
  }
  for (const SlotRef& slot : universe) {
    if (covered.count(slot) == 0) out.groups.push_back({slot});
  }
  return out;
}

// Converts a group set over `universe` into a mention-indexed partition with
// one caption per entity (caption of the first member, per caption_of).
metrics::Partition to_partition(
    const EntityGroupSet& groups, const std::vector<SlotRef>& universe,
    const std::function<std::string(const SlotRef&)>& caption_of) {
  std::map<SlotRef, int> index_of;
  for (std::size_t i = 0; i < universe.size(); ++i) {
    index_of[universe[i]] = static_cast<int>(i);
  }
  metrics::Partition partition;
  for (const auto& group : groups.groups) {
    std::vector<int> mentions;
    for (const SlotRef& slot : group) mentions.push_back(index_of.at(slot));
    std::sort(mentions.begin(), mentions.end());
    partition.entities.push_back(std::move(mentions));
    partition.captions.push_back(caption_of(group.front()));
  }
  return partition;
}

}  // namespace

void parallel_for(std::size_t n, int jobs,
                  const std::function<void(std::size_t)>& fn) {
  const int workers =
      static_cast<int>(std::min<std::size_t>(std::max(jobs, 1), n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

void validate_config(const RunConfig& config) {
  if (config.levels < 1) {
    raise(ErrorKind::value, "levels must be >= 1");
  }
  if (!(config.tracklet_scale > 0.0) || config.tracklet_scale > 1.0) {
    raise(ErrorKind::value, "tracklet-scale must lie in (0, 1]");
  }
  if (config.iou_thresholds.empty()) {
    raise(ErrorKind::value, "at least one IoU threshold is required");
  }
  for (double t : config.iou_thresholds) {
    if (!(t > 0.0) || !(t < 1.0)) {
      raise(ErrorKind::value, "IoU thresholds must lie in (0, 1)");
    }
  }
  if (config.jobs < 1) {
    raise(ErrorKind::value, "jobs must be >= 1");
  }
}

std::vector<std::string> metric_keys(const RunConfig& config) {
  std::vector<std::string> keys;
  if (selected(config, "verb")) {
    keys.push_back("verb_acc@1");
    keys.push_back("verb_acc@5");
  }
  if (selected(config, "cider")) keys.push_back("cider");
  if (selected(config, "lea")) keys.push_back("lea");
  if (selected(config, "lea_soft")) keys.push_back("lea_soft");
  if (selected(config, "iou")) {
    for (double t : config.iou_thresholds) keys.push_back(iou_key(t));
  }
  if (selected(config, "hota")) {
    keys.push_back("hota");
    keys.push_back("deta");
    keys.push_back("assa");
  }
  if (selected(config, "purity")) keys.push_back("grouping_purity");
  if (selected(config, "gied")) keys.push_back("gied");
  return keys;
}

void MetricTable::set(const std::string& key, std::optional<double> value) {
  for (auto& [k, v] : entries) {
    if (k == key) {
      v = value;
      return;
    }
  }
  entries.emplace_back(key, value);
}

std::optional<double> MetricTable::get(const std::string& key) const {
  for (const auto& [k, v] : entries) {
    if (k == key) return v;
  }
  return std::nullopt;
}

VideoArtifacts build_artifacts(const ingest::RunBundle& bundle,
                               const RunConfig& config) {
  VideoArtifacts artifacts;
  artifacts.groups = mention_map_to_groups(bundle.predictions.pred_mention_map);
  if (!bundle.proposals.proposals.empty()) {
    const auto hierarchy =
        finch::finch_hierarchy(bundle.embeddings, bundle.proposals,
                               config.tracklet_scale, config.levels);
    artifacts.clusters =
        finch::clusters_from_hierarchy(hierarchy, config.levels - 1);
    if (!artifacts.groups.groups.empty()) {
      const auto affinity = assign::aggregate_attention(
          bundle.attention, artifacts.groups, artifacts.clusters);
      artifacts.assignment = assign::assign_clusters(affinity);
      artifacts.has_assignment = true;
    }
  }
  return artifacts;
}

std::vector<ingest::RunBundle> load_bundles(const std::string& bundle_dir,
                                            const RunConfig& config) {
  std::vector<ingest::RunBundle> bundles;
  for (const auto& manifest : ingest::discover_manifests(bundle_dir)) {
    bundles.push_back(ingest::load_run_bundle(manifest, config.limits));
  }
  std::sort(bundles.begin(), bundles.end(),
            [](const ingest::RunBundle& a, const ingest::RunBundle& b) {
              return a.proposals.video_id < b.proposals.video_id;
            });
  for (std::size_t i = 1; i < bundles.size(); ++i) {
    if (bundles[i].proposals.video_id == bundles[i - 1].proposals.video_id) {
      raise(ErrorKind::consistency, "duplicate video_id '" +
                                        bundles[i].proposals.video_id +
                                        "' across bundles");
    }
  }
  return bundles;
}

std::vector<std::vector<std::string>> idf_corpus(
    const std::vector<ingest::RunBundle>& bundles) {
  std::vector<std::vector<std::string>> corpus;
  for (const auto& bundle : bundles) {
    for (const auto& event : bundle.annotation.events) {
      for (const auto& slot : event.roles) {
        corpus.push_back({slot.caption});
      }
    }
  }
  return corpus;
}

MetricTable evaluate_video(const ingest::RunBundle& bundle,
                           const RunConfig& config,
                           const metrics::CiderScorer& scorer) {
  MetricTable table;
  const auto& annotation = bundle.annotation;
  const VideoArtifacts artifacts = build_artifacts(bundle, config);

  if (selected(config, "verb")) {
    std::vector<std::vector<std::string>> gt;
    for (const auto& event : annotation.events) gt.push_back(event.gt_verbs);
    table.set("verb_acc@1",
              metrics::verb_accuracy(bundle.predictions.pred_verbs, gt, 1).value);
    table.set("verb_acc@5",
              metrics::verb_accuracy(bundle.predictions.pred_verbs, gt, 5).value);
  }

  if (selected(config, "cider")) {
    std::vector<std::string> candidates;
    std::vector<std::vector<std::string>> references;
    for (std::size_t e = 0; e < annotation.events.size(); ++e) {
      const auto& roles = annotation.events[e].roles;
      for (std::size_t k = 0; k < roles.size(); ++k) {
        const SlotRef slot{static_cast<int>(e), static_cast<int>(k)};
        auto it = bundle.predictions.pred_captions.find(slot);
        candidates.push_back(it == bundle.predictions.pred_captions.end()
                                 ? std::string()
                                 : it->second);
        references.push_back({roles[k].caption});
      }
    }
    table.set("cider", candidates.empty()
                           ? std::optional<double>()
                           : scorer.mean_score(candidates, references));
  }

  // Coreference universe: eligible roles of this video, in scan order.
  const std::vector<SlotRef> universe = coref::filter_coref_roles(annotation);
  const auto gold_caption = [&](const SlotRef& s) {
    return annotation.events[s.first].roles[s.second].caption;
  };
  const auto pred_caption = [&](const SlotRef& s) {
    auto it = bundle.predictions.pred_captions.find(s);
    return it == bundle.predictions.pred_captions.end() ? std::string()
                                                        : it->second;
  };

  if ((selected(config, "lea") || selected(config, "lea_soft") ||
       selected(config, "purity")) &&
      !universe.empty()) {
    const EntityGroupSet gold = coref::gold_groups(annotation);
    const metrics::Partition key = to_partition(gold, universe, gold_caption);

    if (selected(config, "lea") || selected(config, "lea_soft")) {
      // Response links come from exact string matching of predicted captions.
      std::map<SlotRef, std::string> eligible_captions;
      for (const SlotRef& slot : universe) {
        eligible_captions[slot] = pred_caption(slot);
      }
      const EntityGroupSet response_groups = restrict_to_universe(
          coref::posthoc_groups(eligible_captions).groups, universe);
      const metrics::Partition response =
          to_partition(response_groups, universe, pred_caption);
      if (selected(config, "lea")) {
        table.set("lea", metrics::lea(key, response).f1);
      }
      if (selected(config, "lea_soft")) {
        const auto similarity = [&](std::size_t i, std::size_t j) {
          const double s =
              scorer.pair_score(response.captions[j], {key.captions[i]});
          return std::clamp(s / 10.0, 0.0, 1.0);
        };
        table.set("lea_soft",
                  metrics::lea_soft(key, response, similarity,
                                    config.lea_soft_weighting)
                      .f1);
      }
    }

    if (selected(config, "purity")) {
      const EntityGroupSet pred_groups =
          restrict_to_universe(artifacts.groups, universe);
      table.set("grouping_purity",
                coref::grouping_purity(pred_groups, gold).purity);
    }
  } else {
    if (selected(config, "lea")) table.set("lea", std::nullopt);
    if (selected(config, "lea_soft")) table.set("lea_soft", std::nullopt);
    if (selected(config, "purity")) table.set("grouping_purity", std::nullopt);
  }

  const bool want_grounding = selected(config, "iou") ||
                              selected(config, "hota") ||
                              selected(config, "gied");
  if (want_grounding && bundle.grounding.has_value() &&
      !bundle.proposals.proposals.empty()) {
    const auto& grounding = *bundle.grounding;
    std::map<std::string, std::map<int, BoundingBox>> entity_boxes;
    for (const auto& entry : grounding.entries) {
      entity_boxes[entry.caption][entry.frame_index] = entry.box;
    }

    if (selected(config, "iou")) {
      // One predicted box per role: the most-attended proposal within the
      // role's assigned cluster (all proposals when the role is ungrouped).
      std::map<SlotRef, int> group_of;
      for (std::size_t j = 0; j < artifacts.groups.groups.size(); ++j) {
        for (const SlotRef& slot : artifacts.groups.groups[j]) {
          group_of[slot] = static_cast<int>(j);
        }
      }
      std::vector<std::optional<metrics::RoleBoxPrediction>> preds;
      std::vector<std::map<int, BoundingBox>> gts;
      for (std::size_t e = 0; e < annotation.events.size(); ++e) {
        const auto& roles = annotation.events[e].roles;
        for (std::size_t k = 0; k < roles.size(); ++k) {
          auto gt_it = entity_boxes.find(roles[k].caption);
          gts.push_back(gt_it == entity_boxes.end()
                            ? std::map<int, BoundingBox>{}
                            : gt_it->second);
          const SlotRef slot{static_cast<int>(e), static_cast<int>(k)};
          const std::size_t row = bundle.attention.row_of(slot.first, slot.second);
          std::vector<int> candidates;
          auto g_it = group_of.find(slot);
          if (g_it != group_of.end() && artifacts.has_assignment) {
            candidates = artifacts.clusters.clusters.at(
                artifacts.assignment.cluster_of_group.at(g_it->second));
          } else {
            candidates.resize(bundle.proposals.proposals.size());
            for (std::size_t i = 0; i < candidates.size(); ++i) {
              candidates[i] = static_cast<int>(i);
            }
          }
          if (candidates.empty()) {
            preds.push_back(std::nullopt);
            continue;
          }
          int best = candidates.front();
          double best_score =
              bundle.attention.values.at(row, static_cast<std::size_t>(best));
          for (int idx : candidates) {
            const double v =
                bundle.attention.values.at(row, static_cast<std::size_t>(idx));
            if (v > best_score) {
              best_score = v;
              best = idx;
            }
          }
          const auto& proposal = bundle.proposals.proposals[best];
          preds.push_back(
              metrics::RoleBoxPrediction{proposal.frame_index, proposal.box});
        }
      }
      for (double theta : config.iou_thresholds) {
        table.set(iou_key(theta), metrics::iou_at_theta(preds, gts, theta));
      }
    }

    if (selected(config, "hota")) {
      metrics::TrackSet gt_tracks;
      for (const auto& [caption, boxes] : entity_boxes) {
        gt_tracks.tracks.push_back({boxes});
      }
      metrics::TrackSet pred_tracks;
      if (artifacts.has_assignment) {
        for (std::size_t j = 0; j < artifacts.groups.groups.size(); ++j) {
          metrics::Track track;
          const auto& members = artifacts.clusters.clusters.at(
              artifacts.assignment.cluster_of_group.at(j));
          for (int idx : members) {
            const auto& p = bundle.proposals.proposals[idx];
            // Tracks carry one box per frame; finch clusters satisfy this by
            // construction, lowest index wins otherwise.
            track.boxes.emplace(p.frame_index, p.box);
          }
          pred_tracks.tracks.push_back(std::move(track));
        }
      }
      const auto scores = metrics::hota(pred_tracks, gt_tracks);
      if (scores.has_value()) {
        table.set("hota", scores->hota);
        table.set("deta", scores->deta);
        table.set("assa", scores->assa);
      } else {
        table.set("hota", std::nullopt);
        table.set("deta", std::nullopt);
        table.set("assa", std::nullopt);
      }
    }

    if (selected(config, "gied")) {
      table.set("gied", metrics::gied(bundle.embeddings, bundle.proposals,
                                      grounding, config.gied_iou_floor));
    }
  } else if (want_grounding) {
    if (selected(config, "iou")) {
      for (double theta : config.iou_thresholds) {
        table.set(iou_key(theta), std::nullopt);
      }
    }
    if (selected(config, "hota")) {
      table.set("hota", std::nullopt);
      table.set("deta", std::nullopt);
      table.set("assa", std::nullopt);
    }
    if (selected(config, "gied")) table.set("gied", std::nullopt);
  }

  // Emit keys in canonical order.
  MetricTable ordered;
  for (const std::string& key : metric_keys(config)) {
    ordered.entries.emplace_back(key, table.get(key));
  }
  return ordered;
}

EvalResult evaluate_corpus(const std::vector<ingest::RunBundle>& bundles,
                           const RunConfig& config) {
  validate_config(config);
  auto corpus = idf_corpus(bundles);
  if (corpus.empty()) corpus.push_back({""});
  const metrics::CiderScorer scorer(corpus);

  std::vector<MetricTable> tables(bundles.size());
  parallel_for(bundles.size(), config.jobs, [&](std::size_t i) {
    tables[i] = evaluate_video(bundles[i], config, scorer);
  });

  EvalResult result;
  for (std::size_t i = 0; i < bundles.size(); ++i) {
    result.per_video.push_back(
        {bundles[i].proposals.video_id, std::move(tables[i])});
  }

  // Aggregate = mean of available per-video values, reduced in video order.
  for (const std::string& key : metric_keys(config)) {
    double sum = 0.0;
    int available = 0;
    for (const auto& video : result.per_video) {
      const auto v = video.metrics.get(key);
      if (v.has_value()) {
        sum += *v;
        available += 1;
      }
    }
    result.aggregate.entries.emplace_back(
        key, available == 0
                 ? std::optional<double>()
                 : std::optional<double>(sum / static_cast<double>(available)));
  }
  return result;
}

namespace {

// Percentage-style view matching the conventional reporting scale: CIDEr is
// on [0,10] so it scales by 10, rate metrics scale by 100, GIED is a raw
// distance and stays unscaled.
double pct_scale(const std::string& key) {
  if (key == "cider") return 10.0;
  if (key == "gied") return 1.0;
  return 100.0;
}

report::Value table_json(const MetricTable& table) {
  report::Object obj;
  for (const auto& [key, value] : table.entries) {
    if (value.has_value()) {
      obj.emplace_back(key, *value);
    } else {
      obj.emplace_back(key, nullptr);
    }
  }
  return report::Value(std::move(obj));
}

}  // namespace

report::Value eval_report_json(const EvalResult& result,
                               const RunConfig& /*config*/) {
  report::Object root;
  root.emplace_back("aggregate", table_json(result.aggregate));

  report::Object pct;
  for (const auto& [key, value] : result.aggregate.entries) {
    if (value.has_value()) {
      pct.emplace_back(key, *value * pct_scale(key));
    } else {
      pct.emplace_back(key, nullptr);
    }
  }
  root.emplace_back("aggregate_pct", report::Value(std::move(pct)));

  report::Object availability;
  for (const auto& [key, _] : result.aggregate.entries) {
    int available = 0;
    for (const auto& video : result.per_video) {
      if (video.metrics.get(key).has_value()) available += 1;
    }
    availability.emplace_back(key, std::int64_t(available));
  }
  root.emplace_back("available_videos", report::Value(std::move(availability)));
  root.emplace_back("num_videos", std::int64_t(result.per_video.size()));

  report::Array per_video;
  for (const auto& video : result.per_video) {
    report::Object entry;
    entry.emplace_back("video_id", video.video_id);
    entry.emplace_back("metrics", table_json(video.metrics));
    per_video.push_back(report::Value(std::move(entry)));
  }
  root.emplace_back("per_video", report::Value(std::move(per_video)));
  return report::Value(std::move(root));
}

std::string eval_report_csv(const EvalResult& result, const RunConfig& config) {
  std::vector<std::string> header{"video_id"};
  for (const std::string& key : metric_keys(config)) header.push_back(key);
  std::vector<std::vector<report::Value>> rows;
  for (const auto& video : result.per_video) {
    std::vector<report::Value> row{report::Value(video.video_id)};
    for (const std::string& key : metric_keys(config)) {
      const auto v = video.metrics.get(key);
      row.push_back(v.has_value() ? report::Value(*v) : report::Value(nullptr));
    }
    rows.push_back(std::move(row));
  }
  return report::to_csv(header, rows);
}

report::Value cluster_report_json(const std::string& video_id,
                                  const VisualClusterSet& clusters) {
  report::Object root;
  root.emplace_back("video_id", video_id);
  root.emplace_back("level", std::int64_t(clusters.level));
  report::Array arr;
  for (const auto& cluster : clusters.clusters) {
    report::Array members;
    for (int idx : cluster) members.push_back(std::int64_t(idx));
    arr.push_back(report::Value(std::move(members)));
  }
  root.emplace_back("clusters", report::Value(std::move(arr)));
  return report::Value(std::move(root));
}

report::Value assign_report_json(const ingest::RunBundle& bundle,
                                 const VideoArtifacts& artifacts) {
  report::Object root;
  root.emplace_back("video_id", bundle.proposals.video_id);
  report::Array groups;
  for (std::size_t j = 0; j < artifacts.groups.groups.size(); ++j) {
    report::Object g;
    g.emplace_back("entity_id", std::int64_t(j));
    report::Array roles;
    for (const SlotRef& slot : artifacts.groups.groups[j]) {
      roles.push_back(report::Value(report::Array{
          report::Value(std::int64_t(slot.first)),
          report::Value(std::int64_t(slot.second))}));
    }
    g.emplace_back("roles", report::Value(std::move(roles)));
    report::Array cluster;
    if (artifacts.has_assignment) {
      for (int idx : artifacts.clusters.clusters.at(
               artifacts.assignment.cluster_of_group.at(j))) {
        cluster.push_back(report::Value(std::int64_t(idx)));
      }
      g.emplace_back("cluster", report::Value(std::move(cluster)));
      g.emplace_back("affinity", artifacts.assignment.affinity_of_group.at(j));
    } else {
      g.emplace_back("cluster", report::Value(report::Array{}));
      g.emplace_back("affinity", nullptr);
    }
    groups.push_back(report::Value(std::move(g)));
  }
  root.emplace_back("groups", report::Value(std::move(groups)));
  return report::Value(std::move(root));
}

}  // namespace mec::pipeline
