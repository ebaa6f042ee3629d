#include "mec/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "mec/errors.hpp"
#include "mec/log.hpp"

namespace mec::metrics {

VerbAccuracy verb_accuracy(
    const std::vector<std::vector<std::string>>& pred_ranked,
    const std::vector<std::vector<std::string>>& gt_verbs, int k) {
  if (k < 1) {
    raise(ErrorKind::value, "verb accuracy needs k >= 1");
  }
  if (pred_ranked.size() != gt_verbs.size()) {
    raise(ErrorKind::domain,
          "verb accuracy: " + std::to_string(pred_ranked.size()) +
              " predictions vs " + std::to_string(gt_verbs.size()) +
              " GT events");
  }
  VerbAccuracy result;
  int hits = 0;
  for (std::size_t e = 0; e < gt_verbs.size(); ++e) {
    if (gt_verbs[e].empty()) {
      result.skipped_events += 1;
      log::warn("verb accuracy: event " + std::to_string(e) +
                " has no GT verbs, excluded");
      continue;
    }
    result.scored_events += 1;
    const std::set<std::string> gt(gt_verbs[e].begin(), gt_verbs[e].end());
    const auto& ranked = pred_ranked[e];
    const std::size_t top =
        std::min(ranked.size(), static_cast<std::size_t>(k));
    for (std::size_t r = 0; r < top; ++r) {
      if (gt.count(ranked[r]) != 0) {
        hits += 1;
        break;
      }
    }
  }
  result.value = result.scored_events == 0
                     ? 0.0
                     : static_cast<double>(hits) /
                           static_cast<double>(result.scored_events);
  return result;
}

std::optional<double> iou_at_theta(
    const std::vector<std::optional<RoleBoxPrediction>>& predictions,
    const std::vector<std::map<int, BoundingBox>>& gt_boxes, double theta) {
  if (!(theta > 0.0) || !(theta < 1.0)) {
    raise(ErrorKind::value, "theta must lie in (0, 1)");
  }
  if (predictions.size() != gt_boxes.size()) {
    raise(ErrorKind::domain,
          "iou_at_theta: " + std::to_string(predictions.size()) +
              " predictions vs " + std::to_string(gt_boxes.size()) + " roles");
  }
  int eligible = 0;
  int hits = 0;
  for (std::size_t r = 0; r < gt_boxes.size(); ++r) {
    if (gt_boxes[r].empty()) continue;  // non-visual role, not grounded
    eligible += 1;
    if (!predictions[r].has_value()) continue;
    const auto& pred = *predictions[r];
    auto it = gt_boxes[r].find(pred.frame_index);
    if (it == gt_boxes[r].end()) continue;
    if (box_iou(pred.box, it->second) >= theta) hits += 1;
  }
  if (eligible == 0) return std::nullopt;
  return static_cast<double>(hits) / static_cast<double>(eligible);
}

std::optional<double> gied(const EmbeddingMatrix& embeddings,
                           const ProposalSet& proposals,
                           const ingest::GroundingSet& grounding,
                           double iou_floor) {
  if (embeddings.count() != proposals.proposals.size()) {
    raise(ErrorKind::consistency,
          "gied: embedding rows != proposal count");
  }
  // Sorted proposal indices per frame, so argmax ties resolve to the lowest
  // proposal index.
  std::map<int, std::vector<int>> proposals_in_frame;
  for (std::size_t i = 0; i < proposals.proposals.size(); ++i) {
    proposals_in_frame[proposals.proposals[i].frame_index].push_back(
        static_cast<int>(i));
  }
  std::map<std::string, std::vector<int>> matches_of_entity;
  for (const auto& entry : grounding.entries) {
    auto frame_it = proposals_in_frame.find(entry.frame_index);
    if (frame_it == proposals_in_frame.end()) continue;
    int best_index = -1;
    double best_iou = iou_floor;  // strict: only IoU > floor qualifies
    for (int idx : frame_it->second) {
      const double v = box_iou(entry.box, proposals.proposals[idx].box);
      if (v > best_iou) {
        best_iou = v;
        best_index = idx;
      }
    }
    if (best_index >= 0) {
      matches_of_entity[entry.caption].push_back(best_index);
    }
  }

  auto cosine_distance = [&](int a, int b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t f = 0; f < embeddings.dim(); ++f) {
      const double va = embeddings.values.at(a, f);
      const double vb = embeddings.values.at(b, f);
      dot += va * vb;
      na += va * va;
      nb += vb * vb;
    }
    na = std::sqrt(na);
    nb = std::sqrt(nb);
    if (na == 0.0 || nb == 0.0) {
      raise(ErrorKind::degenerate_embedding,
            "gied: zero-norm embedding row " +
                std::to_string(na == 0.0 ? a : b));
    }
    return 1.0 - std::clamp(dot / (na * nb), -1.0, 1.0);
  };

  double total = 0.0;
  int entities = 0;
  for (const auto& [caption, matched] : matches_of_entity) {
    const std::size_t n = matched.size();
    if (n < 2) continue;
    double sum = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = a + 1; b < n; ++b) {
        sum += cosine_distance(matched[a], matched[b]);
      }
    }
    total += sum / (0.5 * static_cast<double>(n) * static_cast<double>(n - 1));
    entities += 1;
  }
  if (entities == 0) return std::nullopt;
  return total / static_cast<double>(entities);
}

}  // namespace mec::metrics
