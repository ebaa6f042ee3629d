#pragma once

#include <random>
#include <string>
#include <vector>

#include "mec/ingest.hpp"
#include "mec/model.hpp"

namespace fixtures {

// Deterministic synthetic video bundles. Entities carry distinct multi-token
// captions, proposals form per-entity tracks whose boxes equal the grounding
// boxes, embeddings cluster by entity, and attention peaks on each role's
// entity proposals. With perfect_predictions the predictions equal the ground
// truth, so every metric reaches its maximum.
struct VideoSpec {
  std::string video_id = "video_000";
  int num_events = 5;
  int num_entities = 3;
  int num_frames = 6;
  int embedding_dim = 8;
  unsigned seed = 7;
  bool perfect_predictions = true;
  bool with_grounding = true;
  bool extra_unlocalized_role = true;  // one non-visual role per video
};

mec::ingest::RunBundle make_video(const VideoSpec& spec);

// Random proposal layouts with valid shot-level tracklets (one box per frame
// per tracklet), for clustering-invariant tests. Embeddings are random unit
// vectors whose raw pairwise cosine distances land in (0.01, 2] with
// overwhelming probability; callers assert the precondition.
struct RandomLayoutSpec {
  int max_frames = 11;
  int max_slots = 15;
  int embedding_dim = 16;
  unsigned seed = 1;
};

struct RandomLayout {
  mec::ProposalSet proposals;
  mec::EmbeddingMatrix embeddings;
};

RandomLayout make_random_layout(const RandomLayoutSpec& spec);

// Writes a bundle directory: annotations.json, proposals.json,
// embeddings.bin, attention.bin, predictions.json, optional grounding.json,
// manifest.json.
void write_bundle(const std::string& dir, const mec::ingest::RunBundle& bundle);

// Corpus of per-video subdirectories under `dir`. Every `skip_grounding_every`
// -th video is written without grounding (0 disables skipping).
void write_corpus(const std::string& dir, int num_videos, unsigned seed,
                  bool perfect_predictions, int skip_grounding_every = 0);

// Serializes an embedding matrix into the binary tensor container.
void write_embedding_dump(const std::string& path,
                          const mec::EmbeddingMatrix& embeddings);

// Unique scratch directory under the system temp root.
std::string make_temp_dir(const std::string& tag);

}  // namespace fixtures
