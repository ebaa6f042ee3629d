#include "mec/assign.hpp"

#include <string>

#include "mec/errors.hpp"

namespace mec::assign {

namespace {

std::size_t checked_row(const AttentionMatrix& attention, const SlotRef& slot) {
  if (slot.first < 0 || slot.second < 0 || slot.second >= attention.max_roles) {
    raise(ErrorKind::index, "group member (" + std::to_string(slot.first) +
                                "," + std::to_string(slot.second) +
                                ") outside the attention role grid");
  }
  const std::size_t row = attention.row_of(slot.first, slot.second);
  if (row >= attention.values.rows) {
    raise(ErrorKind::index, "group member (" + std::to_string(slot.first) +
                                "," + std::to_string(slot.second) +
                                ") maps to row " + std::to_string(row) +
                                " beyond " + std::to_string(attention.values.rows));
  }
  return row;
}

}  // namespace

GroupClusterAffinity aggregate_attention(const AttentionMatrix& attention,
                                         const EntityGroupSet& groups,
                                         const VisualClusterSet& clusters) {
  const std::size_t num_groups = groups.groups.size();
  const std::size_t num_clusters = clusters.clusters.size();
  GroupClusterAffinity affinity;
  affinity.values = Matrix(num_groups, num_clusters);
  for (std::size_t j = 0; j < num_groups; ++j) {
    for (const SlotRef& slot : groups.groups[j]) {
      const std::size_t row = checked_row(attention, slot);
      for (std::size_t n = 0; n < num_clusters; ++n) {
        double sum = 0.0;
        for (int b : clusters.clusters[n]) {
          if (b < 0 || static_cast<std::size_t>(b) >= attention.values.cols) {
            raise(ErrorKind::index,
                  "cluster " + std::to_string(n) + " references column " +
                      std::to_string(b) + " outside the attention map");
          }
          sum += attention.values.at(row, static_cast<std::size_t>(b));
        }
        affinity.values.at(j, n) += sum;
      }
    }
  }
  return affinity;
}

Assignment assign_clusters(const GroupClusterAffinity& affinity) {
  Assignment out;
  const std::size_t num_groups = affinity.values.rows;
  const std::size_t num_clusters = affinity.values.cols;
  if (num_clusters == 0) {
    raise(ErrorKind::value, "no clusters to assign");
  }
  out.cluster_of_group.resize(num_groups);
  out.affinity_of_group.resize(num_groups);
  for (std::size_t j = 0; j < num_groups; ++j) {
    std::size_t best = 0;
    double best_value = affinity.values.at(j, 0);
    for (std::size_t n = 1; n < num_clusters; ++n) {
      const double v = affinity.values.at(j, n);
      if (v > best_value) {
        best_value = v;
        best = n;
      }
    }
    out.cluster_of_group[j] = static_cast<int>(best);
    out.affinity_of_group[j] = best_value;
  }
  return out;
}

FixedAttentionMap build_fixed_attention(const Assignment& assignment,
                                        const EntityGroupSet& groups,
                                        const VisualClusterSet& clusters,
                                        const AttentionMatrix& shape) {
  FixedAttentionMap fixed;
  fixed.values = Matrix(shape.values.rows, shape.values.cols);
  fixed.num_events = shape.num_events;
  fixed.max_roles = shape.max_roles;
  for (std::size_t j = 0; j < groups.groups.size(); ++j) {
    const int cluster_index = assignment.cluster_of_group.at(j);
    const auto& members = clusters.clusters.at(cluster_index);
    if (members.empty()) {
      raise(ErrorKind::degenerate_cluster,
            "group " + std::to_string(j) + " assigned to empty cluster " +
                std::to_string(cluster_index));
    }
    const double weight = 1.0 / static_cast<double>(members.size());
    for (const SlotRef& slot : groups.groups[j]) {
      const std::size_t row = checked_row(shape, slot);
      for (int b : members) {
        fixed.values.at(row, static_cast<std::size_t>(b)) = weight;
      }
    }
  }
  return fixed;
}

PooledEmbeddings pooled_entity_embedding(const FixedAttentionMap& fixed,
                                         const EmbeddingMatrix& embeddings,
                                         const EntityGroupSet& groups) {
  if (fixed.values.cols != embeddings.count()) {
    raise(ErrorKind::consistency,
          "fixed attention has " + std::to_string(fixed.values.cols) +
              " columns but embeddings have " +
              std::to_string(embeddings.count()) + " rows");
  }
  const std::size_t dim = embeddings.dim();
  PooledEmbeddings out;
  out.per_role = Matrix(fixed.values.rows, dim);
  out.per_group = Matrix(groups.groups.size(), dim);
  for (std::size_t r = 0; r < fixed.values.rows; ++r) {
    for (std::size_t b = 0; b < fixed.values.cols; ++b) {
      const double w = fixed.values.at(r, b);
      if (w == 0.0) continue;
      for (std::size_t f = 0; f < dim; ++f) {
        out.per_role.at(r, f) += w * embeddings.values.at(b, f);
      }
    }
  }
  for (std::size_t j = 0; j < groups.groups.size(); ++j) {
    const auto& members = groups.groups[j];
    if (members.empty()) continue;
    for (const SlotRef& slot : members) {
      const std::size_t row =
          static_cast<std::size_t>(slot.first) * fixed.max_roles + slot.second;
      for (std::size_t f = 0; f < dim; ++f) {
        out.per_group.at(j, f) += out.per_role.at(row, f);
      }
    }
    const double inv = 1.0 / static_cast<double>(members.size());
    for (std::size_t f = 0; f < dim; ++f) out.per_group.at(j, f) *= inv;
  }
  return out;
}

}  // namespace mec::assign
