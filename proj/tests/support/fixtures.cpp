#include "fixtures.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>

#include "mec/text.hpp"

namespace fs = std::filesystem;

namespace fixtures {

namespace {

const char* kColors[] = {"red",    "blue",  "green", "yellow",
                         "purple", "black", "white", "orange"};
const char* kNouns[] = {"ball",  "man",  "woman", "dog",
                        "chair", "car",  "tree",  "kid"};
const char* kVerbs[] = {"throw", "walk", "watch", "catch", "run",
                        "sit",   "open", "close", "hold",  "wave"};

std::string entity_caption(int entity, unsigned seed) {
  // >= 4 tokens so every n-gram order up to 4 is populated.
  const int color = (entity + static_cast<int>(seed)) % 8;
  const int noun = (entity * 3 + static_cast<int>(seed / 8)) % 8;
  return std::string("the ") + kColors[color] + " " + kNouns[noun] +
         " number " + std::to_string(entity);
}

mec::BoundingBox entity_box(int entity, int frame) {
  mec::BoundingBox box;
  box.x1 = 10.0 + 60.0 * entity + 2.0 * frame;
  box.y1 = 10.0 + 40.0 * entity;
  box.x2 = box.x1 + 20.0;
  box.y2 = box.y1 + 18.0;
  return box;
}

}  // namespace

mec::ingest::RunBundle make_video(const VideoSpec& spec) {
  std::mt19937 rng(spec.seed);
  std::uniform_real_distribution<double> jitter(-0.01, 0.01);
  mec::ingest::RunBundle bundle;

  const int E = spec.num_entities;
  const int F = spec.num_frames;
  const int max_roles = 6;

  // --- annotation ------------------------------------------------------
  mec::VideoAnnotation& annotation = bundle.annotation;
  annotation.video_id = spec.video_id;
  std::vector<std::string> captions(E);
  for (int e = 0; e < E; ++e) captions[e] = entity_caption(e, spec.seed);
  const char* role_labels[] = {"Arg0", "Arg1", "Arg2"};
  for (int i = 0; i < spec.num_events; ++i) {
    mec::Event event;
    event.index = i;
    event.gt_verbs = {kVerbs[(i + spec.seed) % 10]};
    const int roles_here = 2 + (i % 2);
    for (int k = 0; k < roles_here; ++k) {
      mec::RoleSlot slot;
      slot.role_label = role_labels[k % 3];
      const int entity = (i * 2 + k) % E;
      slot.caption = captions[entity];
      slot.gold_entity_id = entity;
      event.roles.push_back(slot);
    }
    if (spec.extra_unlocalized_role && i == 0 &&
        roles_here < max_roles) {
      mec::RoleSlot manner;
      manner.role_label = "ArgM-Mnr";
      manner.caption = "quickly and without any visible effort";
      event.roles.push_back(manner);
    }
    annotation.events.push_back(std::move(event));
  }

  // --- proposals: one box per entity per frame, two shots ---------------
  mec::ProposalSet& proposals = bundle.proposals;
  proposals.video_id = spec.video_id;
  proposals.num_frames = F;
  proposals.max_slots = std::max(E, 2);
  std::vector<std::vector<int>> proposals_of_entity(E);
  for (int t = 0; t < F; ++t) {
    const int shot = t < F / 2 ? 0 : 1;
    for (int e = 0; e < E; ++e) {
      mec::BoxProposal p;
      p.frame_index = t;
      p.slot_index = e;
      p.box = entity_box(e, t);
      p.shot_id = shot;
      p.tracklet_id = e * 2 + shot;
      proposals_of_entity[e].push_back(
          static_cast<int>(proposals.proposals.size()));
      proposals.proposals.push_back(p);
    }
  }
  const std::size_t P = proposals.proposals.size();

  // --- embeddings: near-one-hot per entity -------------------------------
  const int dim = std::max(spec.embedding_dim, E + 1);
  bundle.embeddings.values = mec::Matrix(P, dim);
  for (std::size_t i = 0; i < P; ++i) {
    const int e = proposals.proposals[i].slot_index;
    for (int f = 0; f < dim; ++f) {
      bundle.embeddings.values.at(i, f) = jitter(rng) * 0.2;
    }
    bundle.embeddings.values.at(i, e) = 1.0;
  }

  // --- attention: 1.0 on the role's entity proposals ---------------------
  bundle.attention.num_events = spec.num_events;
  bundle.attention.max_roles = max_roles;
  bundle.attention.values =
      mec::Matrix(static_cast<std::size_t>(spec.num_events) * max_roles, P);
  for (int i = 0; i < spec.num_events; ++i) {
    const auto& roles = annotation.events[i].roles;
    for (std::size_t k = 0; k < roles.size(); ++k) {
      const std::size_t row = bundle.attention.row_of(i, static_cast<int>(k));
      for (std::size_t c = 0; c < P; ++c) {
        bundle.attention.values.at(row, c) = 0.001;
      }
      if (roles[k].gold_entity_id.has_value()) {
        for (int idx : proposals_of_entity[*roles[k].gold_entity_id]) {
          bundle.attention.values.at(row, static_cast<std::size_t>(idx)) = 1.0;
        }
      }
    }
  }

  // --- predictions -------------------------------------------------------
  mec::ingest::Predictions& pred = bundle.predictions;
  pred.video_id = spec.video_id;
  for (int i = 0; i < spec.num_events; ++i) {
    std::vector<std::string> ranked;
    if (spec.perfect_predictions) {
      ranked.push_back(annotation.events[i].gt_verbs.front());
      ranked.push_back(kVerbs[(i + spec.seed + 3) % 10]);
    } else {
      // GT verb somewhere in the top 5 for roughly half the events.
      if (i % 2 == 0) {
        ranked.push_back(kVerbs[(i + spec.seed + 1) % 10]);
        ranked.push_back(annotation.events[i].gt_verbs.front());
      } else {
        ranked.push_back(kVerbs[(i + spec.seed + 1) % 10]);
        ranked.push_back(kVerbs[(i + spec.seed + 2) % 10]);
      }
    }
    pred.pred_verbs.push_back(std::move(ranked));
  }
  std::uniform_int_distribution<int> entity_pick(0, E - 1);
  for (int i = 0; i < spec.num_events; ++i) {
    const auto& roles = annotation.events[i].roles;
    for (std::size_t k = 0; k < roles.size(); ++k) {
      const mec::SlotRef slot{i, static_cast<int>(k)};
      if (roles[k].gold_entity_id.has_value()) {
        int id = *roles[k].gold_entity_id;
        if (!spec.perfect_predictions && (i + static_cast<int>(k)) % 3 == 0) {
          id = entity_pick(rng);
        }
        pred.pred_mention_map.ids[slot] = id;
        pred.pred_captions[slot] = spec.perfect_predictions
                                       ? roles[k].caption
                                       : captions[id];
      } else {
        pred.pred_captions[slot] =
            spec.perfect_predictions
                ? roles[k].caption
                : std::string("somehow rather differently phrased");
      }
    }
  }

  // --- grounding: the boxes of every entity mentioned in a role ----------
  if (spec.with_grounding) {
    std::set<int> mentioned;
    for (const auto& event : annotation.events) {
      for (const auto& slot : event.roles) {
        if (slot.gold_entity_id.has_value()) mentioned.insert(*slot.gold_entity_id);
      }
    }
    mec::ingest::GroundingSet grounding;
    grounding.video_id = spec.video_id;
    for (int e : mentioned) {
      for (int t = 0; t < F; ++t) {
        grounding.entries.push_back({captions[e], t, entity_box(e, t)});
      }
    }
    bundle.grounding = std::move(grounding);
  }
  return bundle;
}

RandomLayout make_random_layout(const RandomLayoutSpec& spec) {
  std::mt19937 rng(spec.seed);
  RandomLayout layout;
  layout.proposals.video_id = "random_" + std::to_string(spec.seed);
  std::uniform_int_distribution<int> frames_dist(1, spec.max_frames);
  std::uniform_int_distribution<int> slots_dist(1, spec.max_slots);
  const int F = frames_dist(rng);
  const int L = slots_dist(rng);
  layout.proposals.num_frames = F;
  layout.proposals.max_slots = L;

  // Shots: contiguous frame ranges.
  std::uniform_int_distribution<int> shot_count_dist(1, std::min(3, F));
  const int num_shots = shot_count_dist(rng);
  std::vector<int> shot_of_frame(F);
  for (int t = 0; t < F; ++t) {
    shot_of_frame[t] = std::min(num_shots - 1, t * num_shots / F);
  }

  // Tracklets: per shot, walk frames and extend or start tracklets so that a
  // tracklet never holds two boxes of one frame.
  int next_tracklet = 0;
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<int> per_frame_dist(0, L);
  struct Open {
    int tracklet;
    int shot;
  };
  std::vector<Open> open;
  for (int t = 0; t < F; ++t) {
    const int shot = shot_of_frame[t];
    open.erase(std::remove_if(open.begin(), open.end(),
                              [&](const Open& o) { return o.shot != shot; }),
               open.end());
    const int boxes_here = per_frame_dist(rng);
    std::vector<int> slots(L);
    for (int s = 0; s < L; ++s) slots[s] = s;
    std::shuffle(slots.begin(), slots.end(), rng);
    std::size_t open_cursor = 0;
    std::vector<Open> opened_this_frame;  // usable from the next frame on
    for (int b = 0; b < boxes_here; ++b) {
      mec::BoxProposal p;
      p.frame_index = t;
      p.slot_index = slots[b];
      const double x = 300.0 * coin(rng);
      const double y = 300.0 * coin(rng);
      p.box = {x, y, x + 5.0 + 40.0 * coin(rng), y + 5.0 + 40.0 * coin(rng)};
      p.shot_id = shot;
      if (open_cursor < open.size() && coin(rng) < 0.6) {
        p.tracklet_id = open[open_cursor].tracklet;
        open_cursor += 1;
      } else {
        p.tracklet_id = next_tracklet++;
        opened_this_frame.push_back({p.tracklet_id, shot});
      }
      layout.proposals.proposals.push_back(p);
    }
    open.insert(open.end(), opened_this_frame.begin(),
                opened_this_frame.end());
  }
  if (layout.proposals.proposals.empty()) {
    // Degenerate draw: keep at least one proposal so downstream code has work.
    mec::BoxProposal p;
    p.frame_index = 0;
    p.slot_index = 0;
    p.box = {1.0, 1.0, 10.0, 10.0};
    p.tracklet_id = next_tracklet++;
    p.shot_id = shot_of_frame[0];
    layout.proposals.proposals.push_back(p);
  }

  // Random unit-ish embeddings.
  const std::size_t P = layout.proposals.proposals.size();
  layout.embeddings.values = mec::Matrix(P, spec.embedding_dim);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (std::size_t i = 0; i < P; ++i) {
    double norm_sq = 0.0;
    for (int f = 0; f < spec.embedding_dim; ++f) {
      const double v = gauss(rng);
      layout.embeddings.values.at(i, f) = v;
      norm_sq += v * v;
    }
    const double inv = 1.0 / std::sqrt(norm_sq);
    for (int f = 0; f < spec.embedding_dim; ++f) {
      layout.embeddings.values.at(i, f) *= inv;
    }
  }
  return layout;
}

void write_bundle(const std::string& dir,
                  const mec::ingest::RunBundle& bundle) {
  fs::create_directories(dir);
  const fs::path base(dir);
  mec::ingest::save_annotations((base / "annotations.json").string(),
                                {bundle.annotation});
  mec::ingest::save_proposals((base / "proposals.json").string(),
                              bundle.proposals);
  mec::ingest::save_predictions((base / "predictions.json").string(),
                                bundle.predictions);

  mec::ingest::Tensor emb;
  emb.dims = {static_cast<std::uint32_t>(bundle.embeddings.values.rows),
              static_cast<std::uint32_t>(bundle.embeddings.values.cols)};
  for (double v : bundle.embeddings.values.data) {
    emb.values.push_back(static_cast<float>(v));
  }
  mec::ingest::save_tensor((base / "embeddings.bin").string(), emb);

  mec::ingest::Tensor att;
  att.dims = {static_cast<std::uint32_t>(bundle.attention.values.rows),
              static_cast<std::uint32_t>(bundle.attention.values.cols)};
  for (double v : bundle.attention.values.data) {
    att.values.push_back(static_cast<float>(v));
  }
  mec::ingest::save_tensor((base / "attention.bin").string(), att);

  if (bundle.grounding.has_value()) {
    mec::ingest::save_grounding((base / "grounding.json").string(),
                                {*bundle.grounding});
  }
  mec::ingest::save_manifest((base / "manifest.json").string(),
                             bundle.grounding.has_value());
}

void write_corpus(const std::string& dir, int num_videos, unsigned seed,
                  bool perfect_predictions, int skip_grounding_every) {
  fs::create_directories(dir);
  for (int v = 0; v < num_videos; ++v) {
    VideoSpec spec;
    char name[32];
    std::snprintf(name, sizeof(name), "video_%03d", v);
    spec.video_id = name;
    spec.seed = seed + static_cast<unsigned>(v);
    spec.num_entities = 2 + v % 3;
    spec.num_frames = 4 + v % 4;
    spec.perfect_predictions = perfect_predictions;
    spec.with_grounding =
        skip_grounding_every == 0 || (v % skip_grounding_every) != 0;
    write_bundle((fs::path(dir) / name).string(), make_video(spec));
  }
}

void write_embedding_dump(const std::string& path,
                          const mec::EmbeddingMatrix& embeddings) {
  mec::ingest::Tensor tensor;
  tensor.dims = {static_cast<std::uint32_t>(embeddings.values.rows),
                 static_cast<std::uint32_t>(embeddings.values.cols)};
  for (double v : embeddings.values.data) {
    tensor.values.push_back(static_cast<float>(v));
  }
  mec::ingest::save_tensor(path, tensor);
}

std::string make_temp_dir(const std::string& tag) {
  static std::atomic<unsigned> counter{0};
  const auto stamp =
      std::chrono::steady_clock::now().time_since_epoch().count();
  const fs::path dir = fs::temp_directory_path() /
                       ("mec_" + tag + "_" + std::to_string(stamp) + "_" +
                        std::to_string(counter.fetch_add(1)));
  fs::create_directories(dir);
  return dir.string();
}

}  // namespace fixtures
