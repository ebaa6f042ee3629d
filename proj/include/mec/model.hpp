#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mec/matrix.hpp"

namespace mec {

// (event_index, role_index) pair identifying one mention slot.
using SlotRef = std::pair<int, int>;

struct RoleSlot {
  std::string role_label;               // open-ended; "Arg0", "ArgM-Loc", ...
  std::string caption;                  // normalized at construction/load
  std::optional<int> gold_entity_id;    // >= 0 when present
};

struct Event {
  int index = 0;
  std::vector<std::string> gt_verbs;    // multiple GT annotations allowed
  std::vector<RoleSlot> roles;          // input order preserved, never reordered
};

struct VideoAnnotation {
  std::string video_id;
  std::vector<Event> events;
  double fps_sampled = 1.0;
};

// Verb-sense id -> ordered role-label list. Loaded data, no lexicon bundled.
struct VerbRoleMap {
  std::map<std::string, std::vector<std::string>> roles_by_verb;
};

struct BoundingBox {
  double x1 = 0.0, y1 = 0.0, x2 = 0.0, y2 = 0.0;

  double area() const { return (x2 - x1) * (y2 - y1); }
};

// Intersection-over-union of two boxes; 0 when either is empty or disjoint.
double box_iou(const BoundingBox& a, const BoundingBox& b);

struct BoxProposal {
  int frame_index = 0;   // 0-based over F sampled frames
  int slot_index = 0;    // 0-based, < L
  BoundingBox box;
  int tracklet_id = 0;   // shot-level track from the upstream tracker
  int shot_id = 0;
};

struct ProposalSet {
  std::string video_id;
  int num_frames = 0;    // F
  int max_slots = 0;     // L
  std::vector<BoxProposal> proposals;
};

// Rows follow proposal order of the owning ProposalSet.
struct EmbeddingMatrix {
  Matrix values;  // |proposals| x d

  std::size_t count() const { return values.rows; }
  std::size_t dim() const { return values.cols; }
};

// Role-query x box-proposal affinity. Row order is event-major, role-minor
// over num_events * max_roles queries; column order is proposal order.
struct AttentionMatrix {
  Matrix values;
  int num_events = 0;
  int max_roles = 0;

  std::size_t row_of(int event_index, int role_index) const {
    return static_cast<std::size_t>(event_index) * max_roles + role_index;
  }
};

// Partial map from (event, role) to an entity id.
struct MentionMap {
  std::map<SlotRef, int> ids;
};

// Partition of mention slots into entity groups. Group order follows first
// appearance of the entity in (event, role) scan order; members are sorted.
struct EntityGroupSet {
  std::vector<std::vector<SlotRef>> groups;

  std::size_t size() const { return groups.size(); }
};

// Partition of proposal indices into candidate video-level entity tracks.
struct VisualClusterSet {
  std::vector<std::vector<int>> clusters;
  int level = 0;
};

// Checks the partition and one-box-per-frame invariants of a cluster set
// produced by the clustering pipeline. Throws SchemaError on violation.
void validate_cluster_set(const VisualClusterSet& set,
                          const ProposalSet& proposals);

// Role list lookup through the deterministic verb-role map.
// Throws UnknownVerb when the verb has no entry.
std::vector<std::string> derive_roles(const std::string& verb,
                                      const VerbRoleMap& map);

// Converts a mention map to its induced entity group set. Entity ids are
// renumbered by first appearance in (event, role) scan order, so equal
// partitions always compare equal. An empty map yields an empty group set.
EntityGroupSet mention_map_to_groups(const MentionMap& m);

// Inverse of mention_map_to_groups under id normalization.
MentionMap groups_to_mention_map(const EntityGroupSet& groups);

}  // namespace mec
