#pragma once

#include <vector>

#include "mec/model.hpp"

namespace mec::finch {

// Symmetric pairwise distance matrix with a zero diagonal. +infinity marks
// pairs that must never be linked directly (same-frame exclusion).
struct DistanceMatrix {
  Matrix values;

  std::size_t size() const { return values.rows; }
  double at(std::size_t i, std::size_t j) const { return values.at(i, j); }
};

// Label assignments per hierarchy level; level 0 is the finest partition.
// Every level is a strict coarsening of the previous one.
struct PartitionHierarchy {
  std::vector<std::vector<int>> levels;
  std::vector<int> cluster_counts;

  int num_levels() const { return static_cast<int>(levels.size()); }
};

// D[i][j] = 1 - cos(x_i, x_j). Throws DegenerateEmbedding on a zero-norm row.
DistanceMatrix cosine_distance_matrix(const EmbeddingMatrix& embeddings);

// Applies the two track-validity constraints to a proposal-level matrix:
// same-frame pairs become +infinity, same-tracklet pairs are scaled by
// tracklet_scale (default 1e-5). Same-frame exclusion wins when both apply.
DistanceMatrix apply_constraints(DistanceMatrix d, const ProposalSet& proposals,
                                 double tracklet_scale);

// One first-neighbor partition step: each point links to its nearest finite
// neighbor (ties broken by lowest index), points are adjacent iff one is the
// other's first neighbor or they share one, and clusters are the connected
// components. Labels are normalized by first appearance. A point whose
// distances are all infinite stays a singleton.
std::vector<int> finch_partition_step(const DistanceMatrix& d);

// Constrained hierarchical clustering of box embeddings into entity tracks.
//
// Level 0 partitions the constraint-adjusted proposal matrix; every following
// level recomputes cluster-mean embeddings, rebuilds cosine distances,
// re-applies the same-frame exclusion lifted to clusters, and partitions
// again. Merging is performed along first-neighbor adjacency edges in order
// of ascending distance and refuses any union that would put two boxes from
// one frame into the same track, so the one-box-per-frame invariant holds at
// every level even when nearest-neighbor links would bridge two same-frame
// proposals through a shared neighbor. Same-tracklet proposals are unioned
// up front at level 0: the upstream tracker's identity within a shot is
// treated as ground truth, not merely a preference.
//
// The hierarchy stops early once a step no longer reduces the cluster count.
PartitionHierarchy finch_hierarchy(const EmbeddingMatrix& embeddings,
                                   const ProposalSet& proposals,
                                   double tracklet_scale = 1e-5,
                                   int levels = 2);

// Extracts one level as a cluster set. Levels beyond the fixpoint clamp to
// the last available level with a warning.
VisualClusterSet clusters_from_hierarchy(const PartitionHierarchy& h,
                                         int level);

}  // namespace mec::finch
