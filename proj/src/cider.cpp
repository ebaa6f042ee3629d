#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "mec/errors.hpp"
#include "mec/metrics.hpp"
#include "mec/text.hpp"

namespace mec::metrics {

namespace {

// N-grams are joined with a unit separator so multi-word grams cannot collide.
std::string join_gram(const std::vector<std::string>& tokens, std::size_t start,
                      std::size_t order) {
  std::string key = tokens[start];
  for (std::size_t i = 1; i < order; ++i) {
    key.push_back('\x1f');
    key += tokens[start + i];
  }
  return key;
}

std::vector<std::map<std::string, int>> ngram_counts(
    const std::vector<std::string>& tokens, int max_ngram) {
  std::vector<std::map<std::string, int>> counts(max_ngram);
  for (int order = 1; order <= max_ngram; ++order) {
    if (tokens.size() < static_cast<std::size_t>(order)) break;
    for (std::size_t start = 0; start + order <= tokens.size(); ++start) {
      counts[order - 1][join_gram(tokens, start, order)] += 1;
    }
  }
  return counts;
}

}  // namespace

// TF-IDF profile of one sentence: weighted n-gram vectors, their norms, and
// the token length used by the gaussian length penalty.
struct CiderScorer::Profile {
  std::vector<std::map<std::string, double>> vec;
  std::vector<double> norm;
  double length = 0.0;
};

CiderScorer::CiderScorer(const std::vector<std::vector<std::string>>& idf_corpus,
                         CiderOptions options)
    : options_(options), doc_frequency_(options.max_ngram) {
  if (idf_corpus.empty()) {
    raise(ErrorKind::value, "idf_corpus must be non-empty");
  }
  for (const auto& document : idf_corpus) {
    std::vector<std::set<std::string>> seen(options_.max_ngram);
    for (const auto& caption : document) {
      const auto counts = ngram_counts(text::tokenize(caption), options_.max_ngram);
      for (int o = 0; o < options_.max_ngram; ++o) {
        for (const auto& [gram, _] : counts[o]) seen[o].insert(gram);
      }
    }
    for (int o = 0; o < options_.max_ngram; ++o) {
      for (const auto& gram : seen[o]) doc_frequency_[o][gram] += 1;
    }
  }
  // log corpus size; a single-document corpus degenerates to a flat weight.
  log_num_docs_ = idf_corpus.size() == 1
                      ? 1.0
                      : std::log(static_cast<double>(idf_corpus.size()));
}

CiderScorer::Profile CiderScorer::profile(const std::string& sentence) const {
  const auto tokens = text::tokenize(sentence);
  const auto counts = ngram_counts(tokens, options_.max_ngram);
  Profile p;
  p.vec.resize(options_.max_ngram);
  p.norm.assign(options_.max_ngram, 0.0);
  p.length = static_cast<double>(tokens.size());
  for (int o = 0; o < options_.max_ngram; ++o) {
    for (const auto& [gram, tf] : counts[o]) {
      auto it = doc_frequency_[o].find(gram);
      const double df = it == doc_frequency_[o].end()
                            ? 0.0
                            : static_cast<double>(it->second);
      const double idf = log_num_docs_ - std::log(std::max(1.0, df));
      const double w = static_cast<double>(tf) * std::max(0.0, idf);
      p.vec[o][gram] = w;
      p.norm[o] += w * w;
    }
    p.norm[o] = std::sqrt(p.norm[o]);
  }
  return p;
}

double CiderScorer::pair_score(
    const std::string& candidate,
    const std::vector<std::string>& references) const {
  if (references.empty()) {
    raise(ErrorKind::value, "cider pair needs at least one reference");
  }
  const Profile cand = profile(candidate);
  if (cand.length == 0.0) return 0.0;
  std::vector<double> per_order(options_.max_ngram, 0.0);
  for (const auto& reference : references) {
    const Profile ref = profile(reference);
    const double delta = cand.length - ref.length;
    const double penalty =
        std::exp(-(delta * delta) / (2.0 * options_.sigma * options_.sigma));
    for (int o = 0; o < options_.max_ngram; ++o) {
      double dot = 0.0;
      for (const auto& [gram, wc] : cand.vec[o]) {
        auto it = ref.vec[o].find(gram);
        if (it == ref.vec[o].end()) continue;
        dot += std::min(wc, it->second) * it->second;  // clipped
      }
      double val = 0.0;
      if (cand.norm[o] != 0.0 && ref.norm[o] != 0.0) {
        val = dot / (cand.norm[o] * ref.norm[o]);
      }
      per_order[o] += val * penalty;
    }
  }
  double score = 0.0;
  for (double v : per_order) score += v;
  score /= static_cast<double>(options_.max_ngram);
  score /= static_cast<double>(references.size());
  return 10.0 * score;
}

double CiderScorer::mean_score(
    const std::vector<std::string>& candidates,
    const std::vector<std::vector<std::string>>& references) const {
  if (candidates.size() != references.size()) {
    raise(ErrorKind::domain, "cider candidate/reference count mismatch: " +
                                 std::to_string(candidates.size()) + " vs " +
                                 std::to_string(references.size()));
  }
  if (candidates.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    total += pair_score(candidates[i], references[i]);
  }
  return total / static_cast<double>(candidates.size());
}

}  // namespace mec::metrics
