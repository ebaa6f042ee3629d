#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mec/ingest.hpp"
#include "mec/model.hpp"

namespace mec::metrics {

// ---------------------------------------------------------------------------
// Verb accuracy
// ---------------------------------------------------------------------------

struct VerbAccuracy {
  double value = 0.0;
  int scored_events = 0;
  int skipped_events = 0;  // events with an empty GT verb set
};

// An event scores 1 iff any of its top-k predicted verbs is in the GT set.
VerbAccuracy verb_accuracy(
    const std::vector<std::vector<std::string>>& pred_ranked,
    const std::vector<std::vector<std::string>>& gt_verbs, int k);

// ---------------------------------------------------------------------------
// CIDEr (CIDEr-D semantics: clipped counts, length penalty, x10 scale)
// ---------------------------------------------------------------------------

struct CiderOptions {
  int max_ngram = 4;
  double sigma = 6.0;
};

class CiderScorer {
 public:
  // idf_corpus: one document per ground-truth role caption set of the
  // evaluation split. Throws ValueError when empty.
  explicit CiderScorer(const std::vector<std::vector<std::string>>& idf_corpus,
                       CiderOptions options = {});

  // Score of one candidate against its references, in [0, 10]. An empty
  // candidate scores 0.
  double pair_score(const std::string& candidate,
                    const std::vector<std::string>& references) const;

  // Mean of pair scores.
  double mean_score(
      const std::vector<std::string>& candidates,
      const std::vector<std::vector<std::string>>& references) const;

 private:
  CiderOptions options_;
  double log_num_docs_ = 0.0;
  std::vector<std::map<std::string, int>> doc_frequency_;  // per n-gram order

  friend struct CiderScorerTestAccess;
  struct Profile;
  Profile profile(const std::string& sentence) const;
};

// ---------------------------------------------------------------------------
// LEA / LEA-Soft
// ---------------------------------------------------------------------------

// Partition of a mention universe; captions are per-entity (used by the soft
// variant; may be empty for plain LEA).
struct Partition {
  std::vector<std::vector<int>> entities;
  std::vector<std::string> captions;
};

struct LeaScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Link-based entity-aware score. Entities are weighted by size; an entity's
// resolution is the fraction of its links reproduced in the other partition.
// Singleton entities resolve to 1 iff reproduced exactly as a singleton.
LeaScores lea(const Partition& key, const Partition& response);

enum class SoftWeighting { both, recall_only, precision_only };

// LEA with each correctly-linked contribution weighted by the caption
// similarity of the two entities involved, supplied as a [0,1]-valued
// function of (key entity index, response entity index).
LeaScores lea_soft(
    const Partition& key, const Partition& response,
    const std::function<double(std::size_t, std::size_t)>& similarity,
    SoftWeighting weighting = SoftWeighting::both);

// ---------------------------------------------------------------------------
// IoU@theta
// ---------------------------------------------------------------------------

struct RoleBoxPrediction {
  int frame_index = 0;
  BoundingBox box;
};

// Fraction of roles whose predicted box reaches IoU >= theta against the GT
// box of the same frame. Roles without any GT box are excluded (non-visual);
// nullopt when no role has a GT box.
std::optional<double> iou_at_theta(
    const std::vector<std::optional<RoleBoxPrediction>>& predictions,
    const std::vector<std::map<int, BoundingBox>>& gt_boxes, double theta);

// ---------------------------------------------------------------------------
// Hungarian assignment
// ---------------------------------------------------------------------------

// Minimum-cost one-to-one assignment of min(rows, cols) pairs over a finite
// rectangular cost matrix. Returns, for each row, the assigned column or -1.
std::vector<int> hungarian_match(const Matrix& cost);

double assignment_cost(const Matrix& cost, const std::vector<int>& row_to_col);

// ---------------------------------------------------------------------------
// HOTA
// ---------------------------------------------------------------------------

// One entity's trajectory: at most one box per frame.
struct Track {
  std::map<int, BoundingBox> boxes;  // frame -> box
};

struct TrackSet {
  std::vector<Track> tracks;
};

struct HotaScores {
  double hota = 0.0;
  double deta = 0.0;
  double assa = 0.0;
  double loca = 0.0;
  std::vector<double> alphas;
  std::vector<double> hota_alpha;
  std::vector<double> deta_alpha;
  std::vector<double> assa_alpha;
  std::vector<double> loca_alpha;
};

// The 19-point localization threshold grid {0.05, 0.10, ..., 0.95}.
std::vector<double> hota_alpha_grid();

// Higher Order Tracking Accuracy. At each alpha, per-frame detections are
// matched one-to-one over IoU-eligible pairs by a Hungarian solver that
// maximizes match count first and global association alignment second;
// DetA = TP/(TP+FN+FP), AssA averages TPA/(TPA+FNA+FPA) over TPs, and
// HOTA(alpha) = sqrt(DetA * AssA). Final scores average over the grid.
// Returns nullopt when the ground truth is empty (undefined).
std::optional<HotaScores> hota(const TrackSet& pred, const TrackSet& gt);

// ---------------------------------------------------------------------------
// GIED (ground-truth intra-entity distance)
// ---------------------------------------------------------------------------

// Per frame, each GT entity box matches the highest-IoU proposal among those
// with IoU > iou_floor (ties to the lowest proposal index). For every entity
// with >= 2 matched proposals the mean pairwise cosine distance of their
// embeddings is taken; GIED is the mean over such entities. Returns nullopt
// when no entity has two matches.
std::optional<double> gied(const EmbeddingMatrix& embeddings,
                           const ProposalSet& proposals,
                           const ingest::GroundingSet& grounding,
                           double iou_floor = 0.3);

}  // namespace mec::metrics
