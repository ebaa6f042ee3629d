#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mec/model.hpp"

namespace mec::ingest {

// ---------------------------------------------------------------------------
// Binary tensor container ("MECT"): header {magic "MECT", version u8 = 1,
// dtype u8 (0 = float32), ndim u8, dims ndim x u32 LE}, then row-major
// little-endian float32 payload with no padding.
// ---------------------------------------------------------------------------

struct Tensor {
  std::vector<std::uint32_t> dims;
  std::vector<float> values;  // row-major

  std::size_t element_count() const;
};

Tensor load_tensor(const std::string& path);
void save_tensor(const std::string& path, const Tensor& tensor);

// ---------------------------------------------------------------------------
// Grounding annotations: flat (caption, frame, box) triples per video.
// ---------------------------------------------------------------------------

struct GroundingEntry {
  std::string caption;  // normalized
  int frame_index = 0;
  BoundingBox box;
};

struct GroundingSet {
  std::string video_id;
  std::vector<GroundingEntry> entries;
};

struct GroundingStats {
  std::size_t num_videos = 0;
  std::size_t total_boxes = 0;
  std::size_t unique_captions = 0;
  double avg_boxes_per_caption = 0.0;
  double avg_boxes_per_video = 0.0;
};

std::map<std::string, GroundingSet> load_grounding(const std::string& path);
void save_grounding(const std::string& path,
                    const std::vector<GroundingSet>& sets);
GroundingStats grounding_stats(const std::map<std::string, GroundingSet>& sets);

// ---------------------------------------------------------------------------
// SRL annotations, proposals, predictions.
// ---------------------------------------------------------------------------

std::vector<VideoAnnotation> load_annotations(const std::string& path);
void save_annotations(const std::string& path,
                      const std::vector<VideoAnnotation>& annotations);

ProposalSet load_proposals(const std::string& path);
void save_proposals(const std::string& path, const ProposalSet& proposals);

struct Predictions {
  std::string video_id;
  std::vector<std::vector<std::string>> pred_verbs;  // ranked list per event
  MentionMap pred_mention_map;
  // Per-role captions; per-entity caption files are expanded through the
  // mention map at load time.
  std::map<SlotRef, std::string> pred_captions;
};

Predictions load_predictions(const std::string& path,
                             const std::optional<VideoAnnotation>& annotation);
void save_predictions(const std::string& path, const Predictions& predictions);

VerbRoleMap load_verb_role_map(const std::string& path);

// ---------------------------------------------------------------------------
// Run bundle: one video's annotation, proposals, embeddings, attention map,
// predictions, and optional grounding, tied together by a manifest.
// ---------------------------------------------------------------------------

struct RunBundle {
  VideoAnnotation annotation;
  ProposalSet proposals;
  EmbeddingMatrix embeddings;
  AttentionMatrix attention;
  Predictions predictions;
  std::optional<GroundingSet> grounding;
};

// Role-query geometry; the VidSitu configuration is 5 events x 6 roles.
struct BundleLimits {
  int max_frames = 11;
  int max_slots = 15;
  int max_roles = 6;
};

// Loads a bundle through its manifest.json and verifies every cross-file
// invariant (shape consistency, id consistency, attention row activity).
RunBundle load_run_bundle(const std::string& manifest_path,
                          const BundleLimits& limits = {});

// Writes manifest.json referencing the standard file names next to it.
void save_manifest(const std::string& manifest_path, bool with_grounding);

// Bundle directories: a directory containing manifest.json is a single-video
// bundle; otherwise every immediate subdirectory with a manifest.json is one
// bundle of a corpus, ordered by video id.
std::vector<std::string> discover_manifests(const std::string& bundle_dir);

}  // namespace mec::ingest
