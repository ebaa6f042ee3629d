#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "fixtures.hpp"
#include "mec/errors.hpp"
#include "mec/finch.hpp"
#include "oracles.hpp"

using namespace mec;
using namespace mec::finch;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

EmbeddingMatrix embeddings_from(const std::vector<std::vector<double>>& rows) {
  EmbeddingMatrix m;
  m.values = Matrix(rows.size(), rows.empty() ? 0 : rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      m.values.at(i, j) = rows[i][j];
    }
  }
  return m;
}

DistanceMatrix matrix_from(const std::vector<std::vector<double>>& rows) {
  DistanceMatrix d;
  d.values = Matrix(rows.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows.size(); ++j) {
      d.values.at(i, j) = rows[i][j];
    }
  }
  return d;
}

// Partitions compared as sets of sets, ignoring label values.
std::set<std::set<int>> as_set_partition(const std::vector<int>& labels) {
  std::map<int, std::set<int>> buckets;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    buckets[labels[i]].insert(static_cast<int>(i));
  }
  std::set<std::set<int>> out;
  for (auto& [_, members] : buckets) out.insert(std::move(members));
  return out;
}

ProposalSet simple_proposals(const std::vector<std::pair<int, int>>& frame_tracklet) {
  ProposalSet set;
  set.video_id = "t";
  int max_frame = 0;
  std::map<int, int> slot_counter;
  for (const auto& [frame, tracklet] : frame_tracklet) {
    BoxProposal p;
    p.frame_index = frame;
    p.slot_index = slot_counter[frame]++;
    const double base = 10.0 * static_cast<double>(set.proposals.size());
    p.box = {base, 0.0, base + 5.0, 5.0};
    p.tracklet_id = tracklet;
    p.shot_id = 0;
    max_frame = std::max(max_frame, frame);
    set.proposals.push_back(p);
  }
  set.num_frames = max_frame + 1;
  int max_slot = 0;
  for (const auto& [_, c] : slot_counter) max_slot = std::max(max_slot, c);
  set.max_slots = std::max(max_slot, 1);
  return set;
}

}  // namespace

TEST_CASE("cosine distance matrix") {
  SUBCASE("identical rows give zero distances") {
    const auto d = cosine_distance_matrix(
        embeddings_from({{1, 2, 3}, {1, 2, 3}, {1, 2, 3}}));
    for (std::size_t i = 0; i < 3; ++i) {
      for (std::size_t j = 0; j < 3; ++j) {
        CHECK(d.at(i, j) == doctest::Approx(0.0).epsilon(1e-12));
      }
    }
  }
  SUBCASE("orthogonal pair at distance 1") {
    const auto d = cosine_distance_matrix(embeddings_from({{1, 0}, {0, 1}}));
    CHECK(d.at(0, 1) == doctest::Approx(1.0));
    CHECK(d.at(1, 0) == doctest::Approx(1.0));
    CHECK(d.at(0, 0) == 0.0);
  }
  SUBCASE("matches the naive double loop on random vectors") {
    std::mt19937 rng(5);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<std::vector<double>> rows(10, std::vector<double>(6));
    for (auto& row : rows) {
      for (auto& v : row) v = gauss(rng);
    }
    const auto d = cosine_distance_matrix(embeddings_from(rows));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (std::size_t j = 0; j < rows.size(); ++j) {
        double dot = 0, ni = 0, nj = 0;
        for (std::size_t f = 0; f < rows[i].size(); ++f) {
          dot += rows[i][f] * rows[j][f];
          ni += rows[i][f] * rows[i][f];
          nj += rows[j][f] * rows[j][f];
        }
        const double expected =
            i == j ? 0.0 : 1.0 - dot / std::sqrt(ni * nj);
        CHECK(d.at(i, j) == doctest::Approx(expected).epsilon(1e-6));
        CHECK(d.at(i, j) == d.at(j, i));
      }
    }
  }
  SUBCASE("zero-norm row is degenerate") {
    try {
      cosine_distance_matrix(embeddings_from({{1, 0}, {0, 0}}));
      FAIL("expected DegenerateEmbedding");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::degenerate_embedding);
      CHECK(std::string(e.what()).find("1") != std::string::npos);
    }
  }
}

TEST_CASE("apply_constraints") {
  SUBCASE("same-frame pairs become infinite regardless of features") {
    const auto proposals = simple_proposals({{0, 0}, {0, 1}});
    auto d = cosine_distance_matrix(embeddings_from({{1, 0}, {1, 0}}));
    d = apply_constraints(std::move(d), proposals, 1e-5);
    CHECK(d.at(0, 1) == kInf);
    CHECK(d.at(1, 0) == kInf);
  }
  SUBCASE("same-tracklet distances are scaled") {
    const auto proposals = simple_proposals({{0, 7}, {1, 7}});
    DistanceMatrix d = matrix_from({{0.0, 0.4}, {0.4, 0.0}});
    d = apply_constraints(std::move(d), proposals, 1e-5);
    CHECK(d.at(0, 1) == doctest::Approx(4e-6).epsilon(1e-12));
    CHECK(d.at(1, 0) == doctest::Approx(4e-6).epsilon(1e-12));
  }
  SUBCASE("random layouts match element-wise rule application") {
    for (unsigned seed = 0; seed < 20; ++seed) {
      fixtures::RandomLayoutSpec spec;
      spec.seed = 500 + seed;
      const auto layout = fixtures::make_random_layout(spec);
      const auto raw = cosine_distance_matrix(layout.embeddings);
      const auto constrained = apply_constraints(raw, layout.proposals, 1e-5);
      const auto& ps = layout.proposals.proposals;
      for (std::size_t i = 0; i < ps.size(); ++i) {
        for (std::size_t j = 0; j < ps.size(); ++j) {
          double expected = raw.at(i, j);
          if (i != j) {
            if (ps[i].tracklet_id == ps[j].tracklet_id) expected *= 1e-5;
            if (ps[i].frame_index == ps[j].frame_index) expected = kInf;
          }
          CHECK(constrained.at(i, j) == expected);
        }
      }
    }
  }
  SUBCASE("same-frame exclusion wins over tracklet scaling") {
    // An invalid tracklet holding two boxes of one frame: the frame rule is
    // absolute, so the pair still ends at infinity.
    const auto proposals = simple_proposals({{0, 3}, {0, 3}});
    DistanceMatrix d = matrix_from({{0.0, 0.8}, {0.8, 0.0}});
    d = apply_constraints(std::move(d), proposals, 1e-5);
    CHECK(d.at(0, 1) == kInf);
    CHECK(d.at(1, 0) == kInf);
  }
  SUBCASE("out-of-range scale is rejected") {
    const auto proposals = simple_proposals({{0, 0}});
    DistanceMatrix d = matrix_from({{0.0}});
    CHECK_THROWS_AS(apply_constraints(d, proposals, 0.0), Error);
    CHECK_THROWS_AS(apply_constraints(d, proposals, 1.5), Error);
  }
}

TEST_CASE("finch_partition_step") {
  SUBCASE("single point forms one cluster") {
    CHECK(finch_partition_step(matrix_from({{0.0}})) == std::vector<int>{0});
  }
  SUBCASE("two tight pairs far apart give two clusters") {
    // Points at 0, 0.1, 10, 10.1 on a line, squared distances off-diagonal.
    std::vector<double> xs{0.0, 0.1, 10.0, 10.1};
    std::vector<std::vector<double>> rows(4, std::vector<double>(4, 0.0));
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) rows[i][j] = std::abs(xs[i] - xs[j]);
    }
    const auto labels = finch_partition_step(matrix_from(rows));
    CHECK(labels == std::vector<int>{0, 0, 1, 1});
  }
  SUBCASE("constrained pair co-clusters only when bridged") {
    // a and b share a frame (infinite distance) and both point to c.
    const auto labels = finch_partition_step(
        matrix_from({{0.0, kInf, 0.5}, {kInf, 0.0, 0.6}, {0.5, 0.6, 0.0}}));
    const auto oracle = oracles::nn_graph_components(
        matrix_from({{0.0, kInf, 0.5}, {kInf, 0.0, 0.6}, {0.5, 0.6, 0.0}}));
    CHECK(as_set_partition(labels) == as_set_partition(oracle));
    // Bridged through the shared neighbor c.
    CHECK(labels == std::vector<int>{0, 0, 0});
  }
  SUBCASE("isolated point stays a singleton") {
    const auto labels = finch_partition_step(
        matrix_from({{0.0, kInf, kInf},
                     {kInf, 0.0, 0.3},
                     {kInf, 0.3, 0.0}}));
    CHECK(labels == std::vector<int>{0, 1, 1});
  }
  SUBCASE("matches the oracle on random instances") {
    std::mt19937 rng(31);
    std::uniform_int_distribution<int> n_dist(1, 12);
    std::uniform_real_distribution<double> dist(0.01, 2.0);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
      const int n = n_dist(rng);
      std::vector<std::vector<double>> rows(n, std::vector<double>(n, 0.0));
      for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
          const double v = coin(rng) < 0.15 ? kInf : dist(rng);
          rows[i][j] = v;
          rows[j][i] = v;
        }
      }
      const auto d = matrix_from(rows);
      CHECK(as_set_partition(finch_partition_step(d)) ==
            as_set_partition(oracles::nn_graph_components(d)));
    }
  }
  SUBCASE("ties break to the lowest index deterministically") {
    // Point 0 is equidistant from 1 and 2; nn(0) must be 1.
    const auto labels = finch_partition_step(matrix_from(
        {{0.0, 0.5, 0.5, kInf},
         {0.5, 0.0, kInf, 2.0},
         {0.5, kInf, 0.0, 2.0},
         {kInf, 2.0, 2.0, 0.0}}));
    const auto repeat = finch_partition_step(matrix_from(
        {{0.0, 0.5, 0.5, kInf},
         {0.5, 0.0, kInf, 2.0},
         {0.5, kInf, 0.0, 2.0},
         {kInf, 2.0, 2.0, 0.0}}));
    CHECK(labels == repeat);
  }
}

TEST_CASE("finch_hierarchy") {
  SUBCASE("all-infinite matrix keeps every level singleton") {
    // Every proposal in the same frame: no merge is possible.
    const auto proposals =
        simple_proposals({{0, 0}, {0, 1}, {0, 2}, {0, 3}});
    const auto embeddings =
        embeddings_from({{1, 0}, {1, 0}, {1, 0}, {1, 0}});
    const auto h = finch_hierarchy(embeddings, proposals, 1e-5, 2);
    REQUIRE(h.num_levels() >= 1);
    for (const auto& level : h.levels) {
      CHECK(as_set_partition(level).size() == 4);
    }
  }
  SUBCASE("cross-shot tracklets merge at level 1") {
    // 2 shots x 2 tracklets; tracklet features nearly identical across shots.
    ProposalSet proposals;
    proposals.video_id = "x";
    proposals.num_frames = 4;
    proposals.max_slots = 2;
    auto add = [&](int frame, int slot, int tracklet, int shot) {
      BoxProposal p;
      p.frame_index = frame;
      p.slot_index = slot;
      const double base = 10.0 * (frame * 2 + slot);
      p.box = {base, 0.0, base + 4.0, 4.0};
      p.tracklet_id = tracklet;
      p.shot_id = shot;
      proposals.proposals.push_back(p);
    };
    // Shot 0: frames 0-1; shot 1: frames 2-3. Tracklets 0/2 are entity A,
    // tracklets 1/3 entity B.
    add(0, 0, 0, 0);
    add(1, 0, 0, 0);
    add(0, 1, 1, 0);
    add(1, 1, 1, 0);
    add(2, 0, 2, 1);
    add(3, 0, 2, 1);
    add(2, 1, 3, 1);
    add(3, 1, 3, 1);
    const auto embeddings = embeddings_from({{1.0, 0.01},
                                             {1.0, 0.02},
                                             {0.01, 1.0},
                                             {0.02, 1.0},
                                             {1.0, 0.03},
                                             {1.0, 0.04},
                                             {0.03, 1.0},
                                             {0.04, 1.0}});
    const auto h = finch_hierarchy(embeddings, proposals, 1e-5, 2);
    REQUIRE(h.num_levels() == 2);
    CHECK(h.cluster_counts[0] == 4);  // the four tracklets
    CHECK(h.cluster_counts[1] == 2);  // linked across shots
    const auto clusters = clusters_from_hierarchy(h, 1);
    std::set<std::set<int>> got;
    for (const auto& c : clusters.clusters) {
      got.insert(std::set<int>(c.begin(), c.end()));
    }
    CHECK(got == std::set<std::set<int>>{{0, 1, 4, 5}, {2, 3, 6, 7}});
  }
  SUBCASE("every level coarsens the previous one") {
    for (unsigned seed = 0; seed < 200; ++seed) {
      fixtures::RandomLayoutSpec spec;
      spec.seed = 900 + seed;
      const auto layout = fixtures::make_random_layout(spec);
      const auto h =
          finch_hierarchy(layout.embeddings, layout.proposals, 1e-5, 4);
      for (int level = 1; level < h.num_levels(); ++level) {
        CHECK(h.cluster_counts[level] < h.cluster_counts[level - 1]);
        // Every coarse cluster is a union of finer clusters: points sharing a
        // fine label share the coarse label.
        std::map<int, int> coarse_of_fine;
        for (std::size_t i = 0; i < layout.proposals.proposals.size(); ++i) {
          const int fine = h.levels[level - 1][i];
          const int coarse = h.levels[level][i];
          auto [it, inserted] = coarse_of_fine.emplace(fine, coarse);
          CHECK(it->second == coarse);
        }
      }
    }
  }
  SUBCASE("no cluster ever holds two boxes from one frame") {
    for (unsigned seed = 0; seed < 200; ++seed) {
      fixtures::RandomLayoutSpec spec;
      spec.seed = 1700 + seed;
      const auto layout = fixtures::make_random_layout(spec);
      const auto h =
          finch_hierarchy(layout.embeddings, layout.proposals, 1e-5, 3);
      for (int level = 0; level < h.num_levels(); ++level) {
        std::set<std::pair<int, int>> seen;  // (cluster, frame)
        for (std::size_t i = 0; i < layout.proposals.proposals.size(); ++i) {
          const auto key = std::make_pair(
              h.levels[level][i], layout.proposals.proposals[i].frame_index);
          CHECK(seen.insert(key).second);
        }
      }
    }
  }
  SUBCASE("tracklets stay intact at level 0") {
    for (unsigned seed = 0; seed < 100; ++seed) {
      fixtures::RandomLayoutSpec spec;
      spec.seed = 2500 + seed;
      const auto layout = fixtures::make_random_layout(spec);
      // Precondition: raw cosine distances in (0.01, 2].
      const auto raw = cosine_distance_matrix(layout.embeddings);
      bool in_range = true;
      for (std::size_t i = 0; i < raw.size() && in_range; ++i) {
        for (std::size_t j = i + 1; j < raw.size(); ++j) {
          if (raw.at(i, j) <= 0.01) {
            in_range = false;
            break;
          }
        }
      }
      REQUIRE(in_range);
      const auto h =
          finch_hierarchy(layout.embeddings, layout.proposals, 1e-5, 2);
      std::map<int, std::set<int>> labels_of_tracklet;
      for (std::size_t i = 0; i < layout.proposals.proposals.size(); ++i) {
        labels_of_tracklet[layout.proposals.proposals[i].tracklet_id].insert(
            h.levels[0][i]);
      }
      for (const auto& [tracklet, labels] : labels_of_tracklet) {
        CHECK(labels.size() == 1);
      }
    }
  }
  SUBCASE("identical inputs give identical hierarchies") {
    fixtures::RandomLayoutSpec spec;
    spec.seed = 4040;
    const auto layout = fixtures::make_random_layout(spec);
    const auto a = finch_hierarchy(layout.embeddings, layout.proposals, 1e-5, 2);
    const auto b = finch_hierarchy(layout.embeddings, layout.proposals, 1e-5, 2);
    CHECK(a.levels == b.levels);
  }
  SUBCASE("permutation equivariance on conflict-free instances") {
    std::mt19937 rng(606);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
      // All proposals in distinct frames with distinct tracklets: the
      // constraints never fire, so permuting the order must permute labels.
      const int n = 5 + trial % 6;
      ProposalSet proposals;
      proposals.video_id = "perm";
      proposals.num_frames = n;
      proposals.max_slots = 1;
      std::vector<std::vector<double>> rows(n, std::vector<double>(5));
      for (int i = 0; i < n; ++i) {
        BoxProposal p;
        p.frame_index = i;
        p.slot_index = 0;
        p.box = {1.0 * i, 0.0, 1.0 * i + 2.0, 2.0};
        p.tracklet_id = i;
        p.shot_id = 0;
        proposals.proposals.push_back(p);
        for (auto& v : rows[i]) v = gauss(rng);
      }
      std::vector<int> perm(n);
      std::iota(perm.begin(), perm.end(), 0);
      std::shuffle(perm.begin(), perm.end(), rng);
      ProposalSet shuffled = proposals;
      std::vector<std::vector<double>> shuffled_rows(n);
      for (int i = 0; i < n; ++i) {
        shuffled.proposals[i] = proposals.proposals[perm[i]];
        shuffled_rows[i] = rows[perm[i]];
      }
      const auto ha =
          finch_hierarchy(embeddings_from(rows), proposals, 1e-5, 2);
      const auto hb =
          finch_hierarchy(embeddings_from(shuffled_rows), shuffled, 1e-5, 2);
      REQUIRE(ha.num_levels() == hb.num_levels());
      for (int level = 0; level < ha.num_levels(); ++level) {
        // Compare as set-of-sets after undoing the permutation.
        std::vector<int> undone(n);
        for (int i = 0; i < n; ++i) undone[perm[i]] = hb.levels[level][i];
        CHECK(as_set_partition(ha.levels[level]) == as_set_partition(undone));
      }
    }
  }
}

TEST_CASE("hierarchy level 0 equals the pure step when no constraint fires") {
  std::mt19937 rng(808);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + trial % 10;
    ProposalSet proposals;
    proposals.video_id = "pure";
    proposals.num_frames = n;
    proposals.max_slots = 1;
    std::vector<std::vector<double>> rows(n, std::vector<double>(6));
    for (int i = 0; i < n; ++i) {
      BoxProposal p;
      p.frame_index = i;  // all frames distinct
      p.slot_index = 0;
      p.box = {1.0 * i, 0.0, 1.0 * i + 2.0, 2.0};
      p.tracklet_id = i;  // all tracklets singleton
      p.shot_id = 0;
      proposals.proposals.push_back(p);
      for (auto& v : rows[i]) v = gauss(rng);
    }
    const auto embeddings = embeddings_from(rows);
    const auto h = finch_hierarchy(embeddings, proposals, 1e-5, 1);
    const auto pure = finch_partition_step(cosine_distance_matrix(embeddings));
    CHECK(as_set_partition(h.levels[0]) == as_set_partition(pure));
  }
}

TEST_CASE("with singleton tracklets, guarded level 0 refines the pure step") {
  // Same-frame exclusions can only split nearest-neighbor components, never
  // join them, as long as no tracklet union forces a merge.
  std::mt19937 rng(909);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (unsigned seed = 0; seed < 50; ++seed) {
    fixtures::RandomLayoutSpec spec;
    spec.seed = 7000 + seed;
    auto layout = fixtures::make_random_layout(spec);
    for (std::size_t i = 0; i < layout.proposals.proposals.size(); ++i) {
      layout.proposals.proposals[i].tracklet_id = static_cast<int>(i);
    }
    const auto h =
        finch_hierarchy(layout.embeddings, layout.proposals, 1e-5, 1);
    const auto pure = finch_partition_step(
        apply_constraints(cosine_distance_matrix(layout.embeddings),
                          layout.proposals, 1e-5));
    // Every guarded cluster lies inside one pure component.
    std::map<int, std::set<int>> pure_of_guarded;
    for (std::size_t i = 0; i < pure.size(); ++i) {
      pure_of_guarded[h.levels[0][i]].insert(pure[i]);
    }
    for (const auto& [guarded_label, pure_labels] : pure_of_guarded) {
      CHECK(pure_labels.size() == 1);
    }
  }
}

TEST_CASE("clusters_from_hierarchy") {
  SUBCASE("level 0 of a singleton hierarchy") {
    const auto proposals = simple_proposals({{0, 0}, {0, 1}, {0, 2}});
    const auto embeddings = embeddings_from({{1, 0}, {0, 1}, {1, 1}});
    const auto h = finch_hierarchy(embeddings, proposals, 1e-5, 2);
    const auto set = clusters_from_hierarchy(h, 0);
    CHECK(set.clusters.size() == 3);
    validate_cluster_set(set, proposals);
  }
  SUBCASE("extraction equals bucketing the stored labels") {
    fixtures::RandomLayoutSpec spec;
    spec.seed = 5050;
    const auto layout = fixtures::make_random_layout(spec);
    const auto h = finch_hierarchy(layout.embeddings, layout.proposals, 1e-5, 3);
    for (int level = 0; level < h.num_levels(); ++level) {
      const auto set = clusters_from_hierarchy(h, level);
      std::map<int, std::vector<int>> buckets;
      for (std::size_t i = 0; i < h.levels[level].size(); ++i) {
        buckets[h.levels[level][i]].push_back(static_cast<int>(i));
      }
      REQUIRE(set.clusters.size() == buckets.size());
      for (std::size_t c = 0; c < set.clusters.size(); ++c) {
        CHECK(set.clusters[c] == buckets[static_cast<int>(c)]);
      }
      validate_cluster_set(set, layout.proposals);
    }
  }
  SUBCASE("levels beyond the fixpoint clamp to the last level") {
    const auto proposals = simple_proposals({{0, 0}, {0, 1}});
    const auto embeddings = embeddings_from({{1, 0}, {0, 1}});
    const auto h = finch_hierarchy(embeddings, proposals, 1e-5, 4);
    const auto set = clusters_from_hierarchy(h, 3);
    CHECK(set.level == h.num_levels() - 1);
  }
}
