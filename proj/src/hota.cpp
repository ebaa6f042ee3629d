#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <vector>

#include "mec/metrics.hpp"

namespace mec::metrics {

std::vector<double> hota_alpha_grid() {
  std::vector<double> alphas;
  for (int i = 1; i <= 19; ++i) alphas.push_back(0.05 * i);
  return alphas;
}

namespace {

struct FrameDetections {
  std::vector<int> gt_ids;
  std::vector<int> pred_ids;
  Matrix iou;  // gt x pred
};

std::vector<FrameDetections> per_frame_detections(const TrackSet& pred,
                                                  const TrackSet& gt) {
  std::set<int> frames;
  for (const auto& t : gt.tracks) {
    for (const auto& [f, _] : t.boxes) frames.insert(f);
  }
  for (const auto& t : pred.tracks) {
    for (const auto& [f, _] : t.boxes) frames.insert(f);
  }
  std::vector<FrameDetections> out;
  for (int frame : frames) {
    FrameDetections fd;
    std::vector<const BoundingBox*> gt_boxes, pred_boxes;
    for (std::size_t i = 0; i < gt.tracks.size(); ++i) {
      auto it = gt.tracks[i].boxes.find(frame);
      if (it != gt.tracks[i].boxes.end()) {
        fd.gt_ids.push_back(static_cast<int>(i));
        gt_boxes.push_back(&it->second);
      }
    }
    for (std::size_t j = 0; j < pred.tracks.size(); ++j) {
      auto it = pred.tracks[j].boxes.find(frame);
      if (it != pred.tracks[j].boxes.end()) {
        fd.pred_ids.push_back(static_cast<int>(j));
        pred_boxes.push_back(&it->second);
      }
    }
    fd.iou = Matrix(fd.gt_ids.size(), fd.pred_ids.size());
    for (std::size_t a = 0; a < gt_boxes.size(); ++a) {
      for (std::size_t b = 0; b < pred_boxes.size(); ++b) {
        fd.iou.at(a, b) = box_iou(*gt_boxes[a], *pred_boxes[b]);
      }
    }
    out.push_back(std::move(fd));
  }
  return out;
}

}  // namespace

std::optional<HotaScores> hota(const TrackSet& pred, const TrackSet& gt) {
  std::size_t total_gt = 0;
  for (const auto& t : gt.tracks) total_gt += t.boxes.size();
  if (total_gt == 0) return std::nullopt;
  std::size_t total_pred = 0;
  for (const auto& t : pred.tracks) total_pred += t.boxes.size();

  const auto frames = per_frame_detections(pred, gt);
  const std::vector<double> alphas = hota_alpha_grid();

  std::vector<double> gt_count(gt.tracks.size(), 0.0);
  std::vector<double> pred_count(pred.tracks.size(), 0.0);
  for (std::size_t i = 0; i < gt.tracks.size(); ++i) {
    gt_count[i] = static_cast<double>(gt.tracks[i].boxes.size());
  }
  for (std::size_t j = 0; j < pred.tracks.size(); ++j) {
    pred_count[j] = static_cast<double>(pred.tracks[j].boxes.size());
  }

  // Alignment prior: soft potential-match counts (per-frame IoU Jaccard),
  // turned into a per-track-pair alignment score. Continuous values keep the
  // secondary matching objective free of ties on generic inputs.
  Matrix potential(gt.tracks.size(), pred.tracks.size());
  for (const auto& fd : frames) {
    for (std::size_t a = 0; a < fd.gt_ids.size(); ++a) {
      for (std::size_t b = 0; b < fd.pred_ids.size(); ++b) {
        double row_sum = 0.0, col_sum = 0.0;
        for (std::size_t b2 = 0; b2 < fd.pred_ids.size(); ++b2) {
          row_sum += fd.iou.at(a, b2);
        }
        for (std::size_t a2 = 0; a2 < fd.gt_ids.size(); ++a2) {
          col_sum += fd.iou.at(a2, b);
        }
        const double denom = row_sum + col_sum - fd.iou.at(a, b);
        if (denom > 0.0) {
          potential.at(fd.gt_ids[a], fd.pred_ids[b]) +=
              fd.iou.at(a, b) / denom;
        }
      }
    }
  }
  Matrix alignment(gt.tracks.size(), pred.tracks.size());
  for (std::size_t i = 0; i < gt.tracks.size(); ++i) {
    for (std::size_t j = 0; j < pred.tracks.size(); ++j) {
      const double pm = potential.at(i, j);
      const double denom = gt_count[i] + pred_count[j] - pm;
      alignment.at(i, j) = denom > 0.0 ? pm / denom : 0.0;
    }
  }

  HotaScores scores;
  scores.alphas = alphas;
  for (double alpha : alphas) {
    // Per-frame matching: maximize the number of eligible matches first and
    // the summed alignment second, via a count-dominant score.
    Matrix matched(gt.tracks.size(), pred.tracks.size());
    double loc_sum = 0.0;
    std::vector<std::pair<int, int>> tp_pairs;  // (gt id, pred id) per TP
    for (const auto& fd : frames) {
      if (fd.gt_ids.empty() || fd.pred_ids.empty()) continue;
      const double count_bonus =
          static_cast<double>(std::min(fd.gt_ids.size(), fd.pred_ids.size())) +
          1.0;
      Matrix cost(fd.gt_ids.size(), fd.pred_ids.size());
      for (std::size_t a = 0; a < fd.gt_ids.size(); ++a) {
        for (std::size_t b = 0; b < fd.pred_ids.size(); ++b) {
          double score = 0.0;
          if (fd.iou.at(a, b) >= alpha) {
            score = count_bonus + alignment.at(fd.gt_ids[a], fd.pred_ids[b]);
          }
          cost.at(a, b) = -score;
        }
      }
      const std::vector<int> assignment = hungarian_match(cost);
      for (std::size_t a = 0; a < assignment.size(); ++a) {
        const int b = assignment[a];
        if (b < 0) continue;
        if (fd.iou.at(a, static_cast<std::size_t>(b)) < alpha) continue;
        matched.at(fd.gt_ids[a], fd.pred_ids[b]) += 1.0;
        loc_sum += fd.iou.at(a, static_cast<std::size_t>(b));
        tp_pairs.emplace_back(fd.gt_ids[a], fd.pred_ids[b]);
      }
    }

    double tp = 0.0;
    for (double m : matched.data) tp += m;
    const double fn = static_cast<double>(total_gt) - tp;
    const double fp = static_cast<double>(total_pred) - tp;
    const double deta = tp + fn + fp > 0.0 ? tp / (tp + fn + fp) : 0.0;
    double ass_sum = 0.0;
    for (const auto& [i, j] : tp_pairs) {
      const double tpa = matched.at(i, j);
      const double denom = gt_count[i] + pred_count[j] - tpa;  // tpa+fna+fpa
      ass_sum += tpa / denom;
    }
    const double assa = tp > 0.0 ? ass_sum / tp : 0.0;
    const double loca = tp > 0.0 ? loc_sum / tp : 0.0;
    scores.deta_alpha.push_back(deta);
    scores.assa_alpha.push_back(assa);
    scores.loca_alpha.push_back(loca);
    scores.hota_alpha.push_back(std::sqrt(deta * assa));
  }

  const double n = static_cast<double>(alphas.size());
  for (std::size_t a = 0; a < alphas.size(); ++a) {
    scores.hota += scores.hota_alpha[a];
    scores.deta += scores.deta_alpha[a];
    scores.assa += scores.assa_alpha[a];
    scores.loca += scores.loca_alpha[a];
  }
  scores.hota /= n;
  scores.deta /= n;
  scores.assa /= n;
  scores.loca /= n;
  return scores;
}

}  // namespace mec::metrics
