#include "mec/finch.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mec/errors.hpp"
#include "mec/log.hpp"

namespace mec::finch {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Union-find whose roots carry the sorted frame indices of their members.
// union_if_valid refuses merges that would place two boxes from the same
// frame into one track.
class GuardedUnion {
 public:
  explicit GuardedUnion(std::vector<std::vector<int>> frames)
      : parent_(frames.size()), frames_(std::move(frames)) {
    std::iota(parent_.begin(), parent_.end(), 0);
  }

  int find(int x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  bool union_if_valid(int a, int b) {
    int ra = find(a);
    int rb = find(b);
    if (ra == rb) return true;
    const auto& fa = frames_[ra];
    const auto& fb = frames_[rb];
    // Sorted-merge intersection test.
    std::size_t i = 0, j = 0;
    while (i < fa.size() && j < fb.size()) {
      if (fa[i] == fb[j]) return false;
      if (fa[i] < fb[j]) ++i;
      else ++j;
    }
    if (fa.size() < fb.size()) std::swap(ra, rb);
    std::vector<int> merged;
    merged.reserve(frames_[ra].size() + frames_[rb].size());
    std::merge(frames_[ra].begin(), frames_[ra].end(), frames_[rb].begin(),
               frames_[rb].end(), std::back_inserter(merged));
    frames_[ra] = std::move(merged);
    frames_[rb].clear();
    parent_[rb] = ra;
    return true;
  }

 private:
  std::vector<int> parent_;
  std::vector<std::vector<int>> frames_;
};

// First neighbor of each item: argmin over finite distances, ties broken by
// lowest index; -1 when every other item is at infinite distance.
std::vector<int> first_neighbors(const DistanceMatrix& d) {
  const std::size_t n = d.size();
  std::vector<int> nn(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    double best = kInf;
    int best_j = -1;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double v = d.at(i, j);
      if (v < best) {
        best = v;
        best_j = static_cast<int>(j);
      }
    }
    nn[i] = best_j;
  }
  return nn;
}

struct Edge {
  double weight;
  int a;
  int b;

  bool operator<(const Edge& other) const {
    if (weight != other.weight) return weight < other.weight;
    if (a != other.a) return a < other.a;
    return b < other.b;
  }
};

// Adjacency edges of the first-neighbor graph: (i, nn(i)) for every i plus
// (i, j) whenever nn(i) == nn(j).
std::vector<Edge> adjacency_edges(const DistanceMatrix& d,
                                  const std::vector<int>& nn) {
  const std::size_t n = d.size();
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i) {
    if (nn[i] < 0) continue;
    const int a = std::min<int>(static_cast<int>(i), nn[i]);
    const int b = std::max<int>(static_cast<int>(i), nn[i]);
    edges.push_back({d.at(a, b), a, b});
  }
  std::vector<std::vector<int>> by_target(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (nn[i] >= 0) by_target[nn[i]].push_back(static_cast<int>(i));
  }
  for (const auto& sources : by_target) {
    for (std::size_t x = 0; x < sources.size(); ++x) {
      for (std::size_t y = x + 1; y < sources.size(); ++y) {
        edges.push_back({d.at(sources[x], sources[y]), sources[x], sources[y]});
      }
    }
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end(),
                          [](const Edge& l, const Edge& r) {
                            return l.a == r.a && l.b == r.b &&
                                   l.weight == r.weight;
                          }),
              edges.end());
  return edges;
}

std::vector<int> normalize_labels(std::vector<int> roots) {
  std::vector<int> remap(roots.size(), -1);
  int next = 0;
  for (int& r : roots) {
    if (remap[r] < 0) remap[r] = next++;
    r = remap[r];
  }
  return roots;
}

// Guarded variant of the partition step used inside the hierarchy. `frames`
// holds the frame indices covered by each item; `forced_pairs` are unioned
// first regardless of distance (shot-level tracklets at level 0).
std::vector<int> guarded_partition_step(
    const DistanceMatrix& d, std::vector<std::vector<int>> frames,
    const std::vector<std::pair<int, int>>& forced_pairs) {
  const std::size_t n = d.size();
  GuardedUnion uf(std::move(frames));
  for (const auto& [a, b] : forced_pairs) {
    if (!uf.union_if_valid(a, b)) {
      log::warn("tracklet union of items " + std::to_string(a) + " and " +
                std::to_string(b) +
                " skipped: it would place two boxes in one frame");
    }
  }
  const std::vector<int> nn = first_neighbors(d);
  for (const Edge& e : adjacency_edges(d, nn)) {
    uf.union_if_valid(e.a, e.b);
  }
  std::vector<int> roots(n);
  for (std::size_t i = 0; i < n; ++i) roots[i] = uf.find(static_cast<int>(i));
  return normalize_labels(std::move(roots));
}

DistanceMatrix mean_distance_matrix(const EmbeddingMatrix& embeddings,
                                    const std::vector<std::vector<int>>& members) {
  const std::size_t k = members.size();
  const std::size_t dim = embeddings.dim();
  Matrix means(k, dim);
  for (std::size_t c = 0; c < k; ++c) {
    for (int idx : members[c]) {
      for (std::size_t f = 0; f < dim; ++f) {
        means.at(c, f) += embeddings.values.at(idx, f);
      }
    }
    const double inv = 1.0 / static_cast<double>(members[c].size());
    for (std::size_t f = 0; f < dim; ++f) means.at(c, f) *= inv;
  }
  EmbeddingMatrix mean_embeddings;
  mean_embeddings.values = std::move(means);
  return cosine_distance_matrix(mean_embeddings);
}

}  // namespace

DistanceMatrix cosine_distance_matrix(const EmbeddingMatrix& embeddings) {
  const std::size_t n = embeddings.count();
  const std::size_t dim = embeddings.dim();
  std::vector<double> norms(n);
  for (std::size_t i = 0; i < n; ++i) {
    double sq = 0.0;
    for (std::size_t f = 0; f < dim; ++f) {
      const double v = embeddings.values.at(i, f);
      sq += v * v;
    }
    norms[i] = std::sqrt(sq);
    if (norms[i] == 0.0) {
      raise(ErrorKind::degenerate_embedding,
            "embedding row " + std::to_string(i) + " has zero norm");
    }
  }
  DistanceMatrix d;
  d.values = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double dot = 0.0;
      for (std::size_t f = 0; f < dim; ++f) {
        dot += embeddings.values.at(i, f) * embeddings.values.at(j, f);
      }
      double cos = dot / (norms[i] * norms[j]);
      cos = std::clamp(cos, -1.0, 1.0);
      const double dist = 1.0 - cos;
      d.values.at(i, j) = dist;
      d.values.at(j, i) = dist;
    }
  }
  return d;
}

DistanceMatrix apply_constraints(DistanceMatrix d, const ProposalSet& proposals,
                                 double tracklet_scale) {
  const std::size_t n = d.size();
  if (n != proposals.proposals.size()) {
    raise(ErrorKind::consistency,
          "distance matrix order " + std::to_string(n) +
              " != proposal count " +
              std::to_string(proposals.proposals.size()));
  }
  if (!(tracklet_scale > 0.0) || tracklet_scale > 1.0) {
    raise(ErrorKind::value, "tracklet_scale must lie in (0, 1]");
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto& pi = proposals.proposals[i];
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto& pj = proposals.proposals[j];
      double v = d.values.at(i, j);
      if (pi.tracklet_id == pj.tracklet_id) v *= tracklet_scale;
      if (pi.frame_index == pj.frame_index) v = kInf;
      d.values.at(i, j) = v;
      d.values.at(j, i) = v;
    }
  }
  return d;
}

std::vector<int> finch_partition_step(const DistanceMatrix& d) {
  const std::size_t n = d.size();
  if (n == 0) return {};
  const std::vector<int> nn = first_neighbors(d);
  // Connected components over (i, nn(i)) links; shared-neighbor adjacency is
  // subsumed because both endpoints already link to the shared neighbor.
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  for (std::size_t i = 0; i < n; ++i) {
    if (nn[i] < 0) continue;
    const int ra = find(static_cast<int>(i));
    const int rb = find(nn[i]);
    if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
  }
  std::vector<int> roots(n);
  for (std::size_t i = 0; i < n; ++i) roots[i] = find(static_cast<int>(i));
  return normalize_labels(std::move(roots));
}

PartitionHierarchy finch_hierarchy(const EmbeddingMatrix& embeddings,
                                   const ProposalSet& proposals,
                                   double tracklet_scale, int levels) {
  if (levels < 1) {
    raise(ErrorKind::value, "levels must be >= 1");
  }
  const std::size_t n = embeddings.count();
  if (n != proposals.proposals.size()) {
    raise(ErrorKind::consistency,
          "embedding rows " + std::to_string(n) + " != proposal count " +
              std::to_string(proposals.proposals.size()));
  }
  PartitionHierarchy hierarchy;
  if (n == 0) {
    hierarchy.levels.push_back({});
    hierarchy.cluster_counts.push_back(0);
    return hierarchy;
  }

  // Level 0: constrained proposal-level matrix, tracklets unioned up front.
  DistanceMatrix d0 =
      apply_constraints(cosine_distance_matrix(embeddings), proposals,
                        tracklet_scale);
  std::vector<std::vector<int>> frames(n);
  for (std::size_t i = 0; i < n; ++i) {
    frames[i] = {proposals.proposals[i].frame_index};
  }
  std::vector<std::pair<int, int>> tracklet_pairs;
  {
    std::map<int, int> first_of_tracklet;
    for (std::size_t i = 0; i < n; ++i) {
      const int tid = proposals.proposals[i].tracklet_id;
      auto [it, inserted] = first_of_tracklet.emplace(tid, static_cast<int>(i));
      if (!inserted) tracklet_pairs.emplace_back(it->second, static_cast<int>(i));
    }
  }
  std::vector<int> point_labels =
      guarded_partition_step(d0, std::move(frames), tracklet_pairs);
  int count = 1 + *std::max_element(point_labels.begin(), point_labels.end());
  hierarchy.levels.push_back(point_labels);
  hierarchy.cluster_counts.push_back(count);

  // Higher levels: recurse on cluster means with the same-frame exclusion
  // lifted to clusters. Constraint 2 applies only at level 0, where items are
  // individual boxes.
  for (int level = 1; level < levels; ++level) {
    const int k = hierarchy.cluster_counts.back();
    if (k <= 1) break;
    std::vector<std::vector<int>> members(k);
    for (std::size_t i = 0; i < n; ++i) {
      members[point_labels[i]].push_back(static_cast<int>(i));
    }
    std::vector<std::vector<int>> cluster_frames(k);
    for (int c = 0; c < k; ++c) {
      for (int idx : members[c]) {
        cluster_frames[c].push_back(proposals.proposals[idx].frame_index);
      }
      std::sort(cluster_frames[c].begin(), cluster_frames[c].end());
    }
    DistanceMatrix dc = mean_distance_matrix(embeddings, members);
    for (int a = 0; a < k; ++a) {
      for (int b = a + 1; b < k; ++b) {
        const auto& fa = cluster_frames[a];
        const auto& fb = cluster_frames[b];
        std::size_t x = 0, y = 0;
        bool overlap = false;
        while (x < fa.size() && y < fb.size()) {
          if (fa[x] == fb[y]) {
            overlap = true;
            break;
          }
          if (fa[x] < fb[y]) ++x;
          else ++y;
        }
        if (overlap) {
          dc.values.at(a, b) = kInf;
          dc.values.at(b, a) = kInf;
        }
      }
    }
    const std::vector<int> cluster_labels =
        guarded_partition_step(dc, std::move(cluster_frames), {});
    const int new_count =
        1 + *std::max_element(cluster_labels.begin(), cluster_labels.end());
    if (new_count >= k) break;  // fixpoint: no merge happened
    for (std::size_t i = 0; i < n; ++i) {
      point_labels[i] = cluster_labels[point_labels[i]];
    }
    hierarchy.levels.push_back(point_labels);
    hierarchy.cluster_counts.push_back(new_count);
  }
  return hierarchy;
}

VisualClusterSet clusters_from_hierarchy(const PartitionHierarchy& h,
                                         int level) {
  if (h.levels.empty()) {
    raise(ErrorKind::value, "empty hierarchy");
  }
  int effective = level;
  if (effective >= h.num_levels()) {
    effective = h.num_levels() - 1;
    log::warn("requested hierarchy level " + std::to_string(level) +
              " beyond fixpoint; clamping to level " +
              std::to_string(effective));
  }
  if (effective < 0) {
    raise(ErrorKind::value, "negative hierarchy level");
  }
  const auto& labels = h.levels[effective];
  VisualClusterSet set;
  set.level = effective;
  set.clusters.resize(h.cluster_counts[effective]);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    set.clusters[labels[i]].push_back(static_cast<int>(i));
  }
  return set;
}

}  // namespace mec::finch
