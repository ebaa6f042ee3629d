#include <map>
#include <vector>

#include "mec/errors.hpp"
#include "mec/log.hpp"
#include "mec/metrics.hpp"

namespace mec::metrics {

namespace {

double link_count(long long n) {
  return 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
}

// One LEA side: importance-weighted resolution of `from` against `to`.
// weight(i, j) scales the contribution of the (from entity i, to entity j)
// intersection; plain LEA passes a constant 1.
double side(const Partition& from, const Partition& to,
            const std::function<double(std::size_t, std::size_t)>& weight) {
  std::map<int, std::size_t> entity_of;  // mention -> index in `to`
  for (std::size_t j = 0; j < to.entities.size(); ++j) {
    for (int m : to.entities[j]) entity_of[m] = j;
  }
  double numerator = 0.0;
  double denominator = 0.0;
  for (std::size_t i = 0; i < from.entities.size(); ++i) {
    const auto& entity = from.entities[i];
    if (entity.empty()) continue;
    const double importance = static_cast<double>(entity.size());
    denominator += importance;
    double resolution = 0.0;
    if (entity.size() == 1) {
      // Self-link convention: a singleton resolves to 1 iff the other
      // partition reproduces it as a singleton.
      auto it = entity_of.find(entity[0]);
      if (it != entity_of.end() && to.entities[it->second].size() == 1) {
        resolution = weight(i, it->second);
      }
    } else {
      std::map<std::size_t, long long> intersections;
      for (int m : entity) {
        auto it = entity_of.find(m);
        if (it != entity_of.end()) intersections[it->second] += 1;
      }
      const double total_links = link_count(static_cast<long long>(entity.size()));
      for (const auto& [j, shared] : intersections) {
        if (shared < 2) continue;
        resolution += weight(i, j) * link_count(shared) / total_links;
      }
    }
    numerator += importance * resolution;
  }
  return denominator == 0.0 ? 0.0 : numerator / denominator;
}

LeaScores combine(double recall, double precision) {
  LeaScores s;
  s.recall = recall;
  s.precision = precision;
  s.f1 = (precision + recall) == 0.0
             ? 0.0
             : 2.0 * precision * recall / (precision + recall);
  return s;
}

bool empty_partition(const Partition& p) {
  for (const auto& e : p.entities) {
    if (!e.empty()) return false;
  }
  return true;
}

}  // namespace

LeaScores lea(const Partition& key, const Partition& response) {
  if (empty_partition(key)) {
    log::warn("lea: empty key partition, all scores 0");
    return {};
  }
  const auto one = [](std::size_t, std::size_t) { return 1.0; };
  const double recall = side(key, response, one);
  const double precision = side(response, key, one);
  return combine(recall, precision);
}

LeaScores lea_soft(
    const Partition& key, const Partition& response,
    const std::function<double(std::size_t, std::size_t)>& similarity,
    SoftWeighting weighting) {
  if (empty_partition(key)) {
    log::warn("lea_soft: empty key partition, all scores 0");
    return {};
  }
  using Weight = std::function<double(std::size_t, std::size_t)>;
  const Weight one = [](std::size_t, std::size_t) { return 1.0; };
  // side() iterates `from` first, so the similarity arguments are flipped for
  // the precision pass to keep (key entity, response entity) ordering.
  const Weight sim_kr = [&](std::size_t i, std::size_t j) {
    return similarity(i, j);
  };
  const Weight sim_rk = [&](std::size_t i, std::size_t j) {
    return similarity(j, i);
  };
  const bool weight_recall = weighting != SoftWeighting::precision_only;
  const bool weight_precision = weighting != SoftWeighting::recall_only;
  const double recall = side(key, response, weight_recall ? sim_kr : one);
  const double precision = side(response, key, weight_precision ? sim_rk : one);
  return combine(recall, precision);
}

}  // namespace mec::metrics
