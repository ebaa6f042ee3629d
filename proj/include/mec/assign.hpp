#pragma once

#include <vector>

#include "mec/model.hpp"

namespace mec::assign {

// Group-to-cluster affinity: row j = entity group, column n = visual cluster,
// entry = sum of attention over the group's role rows and the cluster's box
// columns.
struct GroupClusterAffinity {
  Matrix values;  // J x N
};

struct Assignment {
  std::vector<int> cluster_of_group;     // T̂_j
  std::vector<double> affinity_of_group; // mass of the selected cluster
};

// A′: uniform weights over each group's assigned cluster, zero elsewhere.
struct FixedAttentionMap {
  Matrix values;  // num_role_queries x num_proposals
  int num_events = 0;
  int max_roles = 0;
};

struct PooledEmbeddings {
  Matrix per_role;   // num_role_queries x d; zero rows for ungrouped roles
  Matrix per_group;  // J x d
};

// Â_jn = Σ_{g in group j} Σ_{b in cluster n} A[g, b].
// Throws IndexError when a group references a row outside the map.
GroupClusterAffinity aggregate_attention(const AttentionMatrix& attention,
                                         const EntityGroupSet& groups,
                                         const VisualClusterSet& clusters);

// Per-group argmax cluster; ties break to the lowest cluster index. Groups
// may share a cluster.
Assignment assign_clusters(const GroupClusterAffinity& affinity);

// Builds A′ with row (i,k) = 1/|T̂_j| on the assigned cluster's columns for
// every (i,k) in group j. Rows of ungrouped roles are all-zero.
// Throws DegenerateCluster when a group's assigned cluster is empty.
FixedAttentionMap build_fixed_attention(const Assignment& assignment,
                                        const EntityGroupSet& groups,
                                        const VisualClusterSet& clusters,
                                        const AttentionMatrix& shape);

// z̃_ik = A′[row of (i,k)] · x (the uniform mean over the assigned cluster's
// box embeddings) and z̃_j = mean of z̃_ik over the group's members.
PooledEmbeddings pooled_entity_embedding(const FixedAttentionMap& fixed,
                                         const EmbeddingMatrix& embeddings,
                                         const EntityGroupSet& groups);

}  // namespace mec::assign
