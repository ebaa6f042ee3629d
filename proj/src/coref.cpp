#include "mec/coref.hpp"

#include <algorithm>
#include <set>

#include "mec/errors.hpp"
#include "mec/text.hpp"

namespace mec::coref {

std::vector<SlotRef> filter_coref_roles(const VideoAnnotation& annotation) {
  std::vector<SlotRef> slots;
  for (std::size_t e = 0; e < annotation.events.size(); ++e) {
    const auto& roles = annotation.events[e].roles;
    for (std::size_t k = 0; k < roles.size(); ++k) {
      if (text::is_coref_role(roles[k].role_label) &&
          !roles[k].caption.empty()) {
        slots.emplace_back(static_cast<int>(e), static_cast<int>(k));
      }
    }
  }
  return slots;
}

EntityGroupSet filter_coref_roles(const EntityGroupSet& groups,
                                  const VideoAnnotation& annotation) {
  const auto eligible_list = filter_coref_roles(annotation);
  const std::set<SlotRef> eligible(eligible_list.begin(), eligible_list.end());
  EntityGroupSet out;
  for (const auto& group : groups.groups) {
    std::vector<SlotRef> kept;
    for (const SlotRef& slot : group) {
      if (eligible.count(slot) != 0) kept.push_back(slot);
    }
    if (!kept.empty()) out.groups.push_back(std::move(kept));
  }
  return out;
}

EntityGroupSet gold_groups(const VideoAnnotation& annotation) {
  EntityGroupSet out;
  std::map<std::string, int> group_of_caption;
  for (const SlotRef& slot : filter_coref_roles(annotation)) {
    const std::string& caption =
        annotation.events[slot.first].roles[slot.second].caption;
    auto [it, inserted] =
        group_of_caption.emplace(caption, static_cast<int>(out.groups.size()));
    if (inserted) out.groups.emplace_back();
    out.groups[it->second].push_back(slot);
  }
  return out;
}

PosthocResult posthoc_groups(
    const std::map<SlotRef, std::string>& pred_captions,
    const std::map<SlotRef, std::vector<int>>* detections_per_role) {
  PosthocResult result;
  std::map<std::string, int> group_of_caption;
  for (const auto& [slot, raw_caption] : pred_captions) {
    const std::string caption = text::normalize_caption(raw_caption);
    int group_index;
    if (caption.empty()) {
      // An empty caption carries no identity; keep the slot isolated.
      group_index = static_cast<int>(result.groups.groups.size());
      result.groups.groups.emplace_back();
    } else {
      auto [it, inserted] = group_of_caption.emplace(
          caption, static_cast<int>(result.groups.groups.size()));
      if (inserted) result.groups.groups.emplace_back();
      group_index = it->second;
    }
    result.groups.groups[group_index].push_back(slot);
  }

  result.merged_clusters.clusters.resize(result.groups.groups.size());
  if (detections_per_role != nullptr) {
    for (std::size_t j = 0; j < result.groups.groups.size(); ++j) {
      std::set<int> merged;
      for (const SlotRef& slot : result.groups.groups[j]) {
        auto it = detections_per_role->find(slot);
        if (it == detections_per_role->end()) continue;
        merged.insert(it->second.begin(), it->second.end());
      }
      result.merged_clusters.clusters[j].assign(merged.begin(), merged.end());
    }
  }
  return result;
}

PurityReport grouping_purity(const EntityGroupSet& pred,
                             const EntityGroupSet& gold) {
  std::map<SlotRef, int> gold_of;
  for (std::size_t j = 0; j < gold.groups.size(); ++j) {
    for (const SlotRef& slot : gold.groups[j]) {
      gold_of[slot] = static_cast<int>(j);
    }
  }
  std::set<SlotRef> pred_slots;
  for (const auto& group : pred.groups) {
    pred_slots.insert(group.begin(), group.end());
  }
  if (pred_slots.size() != gold_of.size() ||
      !std::all_of(pred_slots.begin(), pred_slots.end(),
                   [&](const SlotRef& s) { return gold_of.count(s) != 0; })) {
    std::string extra, missing;
    for (const auto& s : pred_slots) {
      if (gold_of.count(s) == 0) {
        extra += " (" + std::to_string(s.first) + "," +
                 std::to_string(s.second) + ")";
      }
    }
    for (const auto& [s, _] : gold_of) {
      if (pred_slots.count(s) == 0) {
        missing += " (" + std::to_string(s.first) + "," +
                   std::to_string(s.second) + ")";
      }
    }
    raise(ErrorKind::domain,
          "purity universes differ; extra in pred:" +
              (extra.empty() ? " none" : extra) +
              "; missing from pred:" + (missing.empty() ? " none" : missing));
  }

  PurityReport report;
  long long total_correct = 0;
  long long total_members = 0;
  for (std::size_t g = 0; g < pred.groups.size(); ++g) {
    std::map<int, int> counts;  // gold entity -> members in this pred group
    for (const SlotRef& slot : pred.groups[g]) {
      counts[gold_of.at(slot)] += 1;
    }
    // Majority gold entity; ties resolve to the lowest gold id, which the
    // ordered map yields first.
    int best = 0;
    for (const auto& [_, c] : counts) best = std::max(best, c);
    int majority_gold = -1;
    for (const auto& [gold_id, c] : counts) {
      if (c == best) {
        majority_gold = gold_id;
        break;
      }
    }
    GroupPurity group;
    group.group_index = static_cast<int>(g);
    for (const SlotRef& slot : pred.groups[g]) {
      if (gold_of.at(slot) == majority_gold) {
        group.correct_members.push_back(slot);
      } else {
        group.wrong_members.push_back(slot);
      }
    }
    group.correct_roles = static_cast<int>(group.correct_members.size());
    group.wrong_roles = static_cast<int>(group.wrong_members.size());
    total_correct += group.correct_roles;
    total_members += static_cast<long long>(pred.groups[g].size());
    report.per_group.push_back(std::move(group));
  }
  report.purity = total_members == 0
                      ? 0.0
                      : static_cast<double>(total_correct) /
                            static_cast<double>(total_members);
  return report;
}

}  // namespace mec::coref
