#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mec/model.hpp"

namespace mec::coref {

struct GroupPurity {
  int group_index = 0;
  int correct_roles = 0;
  int wrong_roles = 0;
  // The subset split behind the counts: members agreeing with the group's
  // majority gold entity and the others. Downstream analyses (e.g. scoring
  // captions of correctly vs wrongly grouped roles separately) consume these.
  std::vector<SlotRef> correct_members;
  std::vector<SlotRef> wrong_members;
};

struct PurityReport {
  double purity = 0.0;
  std::vector<GroupPurity> per_group;
};

// Coreference-eligible slots of an annotation (Arg0/Arg1/Arg2/Location-Scene)
// with non-empty captions, in (event, role) scan order.
std::vector<SlotRef> filter_coref_roles(const VideoAnnotation& annotation);

// Drops ineligible slots from a group set; emptied groups disappear.
EntityGroupSet filter_coref_roles(const EntityGroupSet& groups,
                                  const VideoAnnotation& annotation);

// Gold entity groups: eligible role slots grouped by exact equality of their
// normalized captions. Group order follows first appearance.
EntityGroupSet gold_groups(const VideoAnnotation& annotation);

// Post-hoc entity grouping baseline: roles with identical predicted captions
// are grouped; when per-role detections are supplied, the detections of each
// group's members are merged (union, deduplicated). Roles with empty
// predicted captions stay singletons.
struct PosthocResult {
  EntityGroupSet groups;
  VisualClusterSet merged_clusters;  // parallel to groups
};
PosthocResult posthoc_groups(
    const std::map<SlotRef, std::string>& pred_captions,
    const std::map<SlotRef, std::vector<int>>* detections_per_role = nullptr);

// Majority-gold purity of a predicted grouping. Both partitions must cover
// the same slot universe; a majority tie counts as correct for the gold
// entity with the lowest id.
PurityReport grouping_purity(const EntityGroupSet& pred,
                             const EntityGroupSet& gold);

}  // namespace mec::coref
