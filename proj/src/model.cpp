#include "mec/model.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "mec/errors.hpp"

namespace mec {

double box_iou(const BoundingBox& a, const BoundingBox& b) {
  const double ix1 = std::max(a.x1, b.x1);
  const double iy1 = std::max(a.y1, b.y1);
  const double ix2 = std::min(a.x2, b.x2);
  const double iy2 = std::min(a.y2, b.y2);
  const double iw = ix2 - ix1;
  const double ih = iy2 - iy1;
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) return 0.0;
  return inter / uni;
}

void validate_cluster_set(const VisualClusterSet& set,
                          const ProposalSet& proposals) {
  const int n = static_cast<int>(proposals.proposals.size());
  std::vector<int> owner(n, -1);
  for (std::size_t c = 0; c < set.clusters.size(); ++c) {
    std::set<int> frames_seen;
    for (int idx : set.clusters[c]) {
      if (idx < 0 || idx >= n) {
        raise(ErrorKind::schema, "cluster " + std::to_string(c) +
                                     " references proposal index " +
                                     std::to_string(idx) + " outside [0," +
                                     std::to_string(n) + ") in video " +
                                     proposals.video_id);
      }
      if (owner[idx] != -1) {
        raise(ErrorKind::schema,
              "proposal " + std::to_string(idx) + " appears in clusters " +
                  std::to_string(owner[idx]) + " and " + std::to_string(c));
      }
      owner[idx] = static_cast<int>(c);
      const int frame = proposals.proposals[idx].frame_index;
      if (!frames_seen.insert(frame).second) {
        raise(ErrorKind::schema,
              "cluster " + std::to_string(c) + " holds two proposals in frame " +
                  std::to_string(frame) + " of video " + proposals.video_id);
      }
    }
  }
  for (int i = 0; i < n; ++i) {
    if (owner[i] == -1) {
      raise(ErrorKind::schema, "proposal " + std::to_string(i) +
                                   " missing from cluster partition of video " +
                                   proposals.video_id);
    }
  }
}

std::vector<std::string> derive_roles(const std::string& verb,
                                      const VerbRoleMap& map) {
  auto it = map.roles_by_verb.find(verb);
  if (it == map.roles_by_verb.end()) {
    raise(ErrorKind::unknown_verb, "verb '" + verb + "' not in verb-role map");
  }
  return it->second;
}

EntityGroupSet mention_map_to_groups(const MentionMap& m) {
  // std::map keys iterate in (event, role) scan order, which defines the
  // normalized entity numbering.
  std::map<int, int> normalized;  // raw id -> normalized id
  EntityGroupSet out;
  for (const auto& [slot, raw_id] : m.ids) {
    auto [it, inserted] =
        normalized.emplace(raw_id, static_cast<int>(out.groups.size()));
    if (inserted) out.groups.emplace_back();
    out.groups[it->second].push_back(slot);
  }
  for (auto& group : out.groups) std::sort(group.begin(), group.end());
  return out;
}

MentionMap groups_to_mention_map(const EntityGroupSet& groups) {
  MentionMap m;
  for (std::size_t j = 0; j < groups.groups.size(); ++j) {
    for (const SlotRef& slot : groups.groups[j]) {
      m.ids[slot] = static_cast<int>(j);
    }
  }
  return m;
}

}  // namespace mec
