#include "mec/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "mec/errors.hpp"
#include "mec/log.hpp"
#include "mec/text.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace mec::ingest {

namespace {

constexpr char kMagic[4] = {'M', 'E', 'C', 'T'};
constexpr std::uint8_t kVersion = 1;
constexpr std::uint8_t kDtypeFloat32 = 0;

std::string read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    raise(ErrorKind::io, "cannot open '" + path + "'");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

ordered_json parse_json_file(const std::string& path) {
  const std::string bytes = read_file_bytes(path);
  try {
    return ordered_json::parse(bytes);
  } catch (const nlohmann::json::parse_error& e) {
    raise(ErrorKind::parse, "malformed JSON in '" + path + "' at byte " +
                                std::to_string(e.byte) + ": " + e.what());
  }
}

void write_json_file(const std::string& path, const ordered_json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    raise(ErrorKind::io, "cannot open '" + path + "' for writing");
  }
  out << j.dump(2) << "\n";
  if (!out) {
    raise(ErrorKind::io, "short write to '" + path + "'");
  }
}

[[noreturn]] void schema_fail(const std::string& path, const std::string& field,
                              const std::string& video_id,
                              const std::string& detail) {
  std::string where = field;
  if (!video_id.empty()) where += " (video " + video_id + ")";
  raise(ErrorKind::schema, "'" + path + "': " + where + ": " + detail);
}

const ordered_json& require_field(const ordered_json& j, const char* key,
                                  const std::string& path,
                                  const std::string& video_id) {
  auto it = j.find(key);
  if (it == j.end()) {
    schema_fail(path, key, video_id, "missing field");
  }
  return *it;
}

BoundingBox parse_box(const ordered_json& j, const std::string& path,
                      const std::string& field, const std::string& video_id) {
  if (!j.is_array() || j.size() != 4) {
    schema_fail(path, field, video_id, "box must be [x1,y1,x2,y2]");
  }
  BoundingBox box;
  double* coords[4] = {&box.x1, &box.y1, &box.x2, &box.y2};
  for (int i = 0; i < 4; ++i) {
    if (!j[i].is_number()) {
      schema_fail(path, field, video_id, "box coordinate is not a number");
    }
    *coords[i] = j[i].get<double>();
    if (!std::isfinite(*coords[i]) || *coords[i] < 0.0) {
      schema_fail(path, field, video_id,
                  "box coordinates must be finite and >= 0");
    }
  }
  if (!(box.x1 < box.x2) || !(box.y1 < box.y2)) {
    schema_fail(path, field, video_id, "box requires x1 < x2 and y1 < y2");
  }
  return box;
}

ordered_json box_to_json(const BoundingBox& box) {
  return ordered_json::array({box.x1, box.y1, box.x2, box.y2});
}

void put_u32_le(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

std::uint32_t get_u32_le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) |
         (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

std::size_t Tensor::element_count() const {
  std::size_t n = 1;
  for (std::uint32_t d : dims) n *= d;
  return dims.empty() ? 0 : n;
}

Tensor load_tensor(const std::string& path) {
  const std::string bytes = read_file_bytes(path);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (bytes.size() < 7) {
    raise(ErrorKind::truncation,
          "'" + path + "': file shorter than the fixed header");
  }
  if (std::memcmp(p, kMagic, 4) != 0) {
    raise(ErrorKind::format, "'" + path + "': bad magic, expected \"MECT\"");
  }
  if (p[4] != kVersion) {
    raise(ErrorKind::format, "'" + path + "': unsupported version " +
                                 std::to_string(static_cast<int>(p[4])));
  }
  if (p[5] != kDtypeFloat32) {
    raise(ErrorKind::format, "'" + path + "': unsupported dtype " +
                                 std::to_string(static_cast<int>(p[5])));
  }
  const std::size_t ndim = p[6];
  const std::size_t header_size = 7 + 4 * ndim;
  if (bytes.size() < header_size) {
    raise(ErrorKind::truncation, "'" + path + "': header cut short");
  }
  Tensor tensor;
  tensor.dims.resize(ndim);
  std::size_t count = ndim == 0 ? 0 : 1;
  for (std::size_t i = 0; i < ndim; ++i) {
    tensor.dims[i] = get_u32_le(p + 7 + 4 * i);
    count *= tensor.dims[i];
  }
  const std::size_t payload = 4 * count;
  if (bytes.size() < header_size + payload) {
    raise(ErrorKind::truncation,
          "'" + path + "': payload holds " +
              std::to_string((bytes.size() - header_size) / 4) +
              " floats, header promises " + std::to_string(count));
  }
  if (bytes.size() > header_size + payload) {
    raise(ErrorKind::format, "'" + path + "': trailing bytes after payload");
  }
  tensor.values.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint32_t bits = get_u32_le(p + header_size + 4 * i);
    float f;
    std::memcpy(&f, &bits, 4);
    if (!std::isfinite(f)) {
      raise(ErrorKind::value, "'" + path + "': non-finite value at element " +
                                  std::to_string(i));
    }
    tensor.values[i] = f;
  }
  return tensor;
}

void save_tensor(const std::string& path, const Tensor& tensor) {
  if (tensor.values.size() != tensor.element_count()) {
    raise(ErrorKind::value, "tensor value count does not match dims");
  }
  for (float f : tensor.values) {
    if (!std::isfinite(f)) {
      raise(ErrorKind::value, "refusing to write non-finite tensor value");
    }
  }
  std::string out;
  out.reserve(7 + 4 * tensor.dims.size() + 4 * tensor.values.size());
  out.append(kMagic, 4);
  out.push_back(static_cast<char>(kVersion));
  out.push_back(static_cast<char>(kDtypeFloat32));
  out.push_back(static_cast<char>(tensor.dims.size()));
  for (std::uint32_t d : tensor.dims) put_u32_le(out, d);
  for (float f : tensor.values) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32_le(out, bits);
  }
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) {
    raise(ErrorKind::io, "cannot open '" + path + "' for writing");
  }
  os.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!os) {
    raise(ErrorKind::io, "short write to '" + path + "'");
  }
}

namespace {

GroundingSet parse_grounding_set(const ordered_json& j,
                                 const std::string& path) {
  GroundingSet set;
  set.video_id =
      require_field(j, "video_id", path, "").get<std::string>();
  std::set<std::pair<std::string, int>> seen;
  for (const auto& entry : require_field(j, "entries", path, set.video_id)) {
    GroundingEntry g;
    g.caption = text::normalize_caption(
        require_field(entry, "caption", path, set.video_id)
            .get<std::string>());
    if (g.caption.empty()) {
      schema_fail(path, "entries.caption", set.video_id,
                  "empty caption after normalization");
    }
    g.frame_index =
        require_field(entry, "frame_index", path, set.video_id).get<int>();
    if (g.frame_index < 0) {
      schema_fail(path, "entries.frame_index", set.video_id, "negative frame");
    }
    g.box = parse_box(require_field(entry, "box", path, set.video_id), path,
                      "entries.box", set.video_id);
    if (!seen.emplace(g.caption, g.frame_index).second) {
      schema_fail(path, "entries", set.video_id,
                  "duplicate (caption, frame) pair: '" + g.caption +
                      "' in frame " + std::to_string(g.frame_index));
    }
    set.entries.push_back(std::move(g));
  }
  return set;
}

}  // namespace

std::map<std::string, GroundingSet> load_grounding(const std::string& path) {
  const ordered_json j = parse_json_file(path);
  std::map<std::string, GroundingSet> out;
  auto insert = [&](GroundingSet set) {
    if (out.count(set.video_id) != 0) {
      schema_fail(path, "video_id", set.video_id, "duplicate video entry");
    }
    out.emplace(set.video_id, std::move(set));
  };
  if (j.is_array()) {
    for (const auto& item : j) insert(parse_grounding_set(item, path));
  } else if (j.is_object()) {
    insert(parse_grounding_set(j, path));
  } else {
    schema_fail(path, "<root>", "", "expected object or array");
  }
  return out;
}

void save_grounding(const std::string& path,
                    const std::vector<GroundingSet>& sets) {
  ordered_json arr = ordered_json::array();
  for (const auto& set : sets) {
    ordered_json entries = ordered_json::array();
    for (const auto& e : set.entries) {
      entries.push_back(ordered_json{{"caption", e.caption},
                                     {"frame_index", e.frame_index},
                                     {"box", box_to_json(e.box)}});
    }
    arr.push_back(
        ordered_json{{"video_id", set.video_id}, {"entries", entries}});
  }
  write_json_file(path, arr);
}

GroundingStats grounding_stats(
    const std::map<std::string, GroundingSet>& sets) {
  GroundingStats stats;
  stats.num_videos = sets.size();
  // Captions name entities within a video, so uniqueness is counted per
  // (video, caption) pair.
  std::size_t unique = 0;
  for (const auto& [id, set] : sets) {
    stats.total_boxes += set.entries.size();
    std::set<std::string> captions;
    for (const auto& e : set.entries) captions.insert(e.caption);
    unique += captions.size();
  }
  stats.unique_captions = unique;
  if (unique > 0) {
    stats.avg_boxes_per_caption =
        static_cast<double>(stats.total_boxes) / static_cast<double>(unique);
  }
  if (stats.num_videos > 0) {
    stats.avg_boxes_per_video = static_cast<double>(stats.total_boxes) /
                                static_cast<double>(stats.num_videos);
  }
  return stats;
}

std::vector<VideoAnnotation> load_annotations(const std::string& path) {
  const ordered_json j = parse_json_file(path);
  if (!j.is_array()) {
    schema_fail(path, "<root>", "", "expected an array of videos");
  }
  std::vector<VideoAnnotation> out;
  for (const auto& vj : j) {
    VideoAnnotation video;
    video.video_id =
        require_field(vj, "video_id", path, "").get<std::string>();
    if (video.video_id.empty()) {
      schema_fail(path, "video_id", "", "empty video id");
    }
    if (vj.contains("fps_sampled")) {
      video.fps_sampled = vj["fps_sampled"].get<double>();
      if (!(video.fps_sampled > 0.0)) {
        schema_fail(path, "fps_sampled", video.video_id, "must be > 0");
      }
    }
    const auto& events = require_field(vj, "events", path, video.video_id);
    for (std::size_t i = 0; i < events.size(); ++i) {
      const auto& ej = events[i];
      Event event;
      event.index =
          require_field(ej, "index", path, video.video_id).get<int>();
      if (event.index != static_cast<int>(i)) {
        schema_fail(path, "events.index", video.video_id,
                    "event indices must be contiguous from 0; position " +
                        std::to_string(i) + " has index " +
                        std::to_string(event.index));
      }
      for (const auto& verb :
           require_field(ej, "gt_verbs", path, video.video_id)) {
        event.gt_verbs.push_back(verb.get<std::string>());
      }
      const auto& roles = require_field(ej, "roles", path, video.video_id);
      if (roles.size() > 6) {
        schema_fail(path, "events.roles", video.video_id,
                    "more than 6 roles in event " + std::to_string(i));
      }
      for (const auto& rj : roles) {
        RoleSlot slot;
        slot.role_label =
            require_field(rj, "role_label", path, video.video_id)
                .get<std::string>();
        slot.caption = text::normalize_caption(
            require_field(rj, "caption", path, video.video_id)
                .get<std::string>());
        if (slot.caption.empty()) {
          schema_fail(path, "roles.caption", video.video_id,
                      "empty caption after normalization in event " +
                          std::to_string(i));
        }
        if (rj.contains("gold_entity_id") && !rj["gold_entity_id"].is_null()) {
          const int id = rj["gold_entity_id"].get<int>();
          if (id < 0) {
            schema_fail(path, "roles.gold_entity_id", video.video_id,
                        "negative entity id");
          }
          slot.gold_entity_id = id;
        }
        event.roles.push_back(std::move(slot));
      }
      video.events.push_back(std::move(event));
    }
    out.push_back(std::move(video));
  }
  return out;
}

void save_annotations(const std::string& path,
                      const std::vector<VideoAnnotation>& annotations) {
  ordered_json arr = ordered_json::array();
  for (const auto& video : annotations) {
    ordered_json events = ordered_json::array();
    for (const auto& event : video.events) {
      ordered_json roles = ordered_json::array();
      for (const auto& slot : event.roles) {
        ordered_json rj{{"role_label", slot.role_label},
                        {"caption", slot.caption}};
        if (slot.gold_entity_id) rj["gold_entity_id"] = *slot.gold_entity_id;
        roles.push_back(std::move(rj));
      }
      events.push_back(ordered_json{{"index", event.index},
                                    {"gt_verbs", event.gt_verbs},
                                    {"roles", roles}});
    }
    arr.push_back(ordered_json{{"video_id", video.video_id},
                               {"fps_sampled", video.fps_sampled},
                               {"events", events}});
  }
  write_json_file(path, arr);
}

ProposalSet load_proposals(const std::string& path) {
  const ordered_json j = parse_json_file(path);
  ProposalSet set;
  set.video_id = require_field(j, "video_id", path, "").get<std::string>();
  set.num_frames =
      require_field(j, "num_frames", path, set.video_id).get<int>();
  set.max_slots = require_field(j, "max_slots", path, set.video_id).get<int>();
  if (set.num_frames <= 0 || set.max_slots <= 0) {
    schema_fail(path, "num_frames/max_slots", set.video_id, "must be positive");
  }
  std::set<std::pair<int, int>> seen;
  std::map<int, int> shot_of_tracklet;
  for (const auto& pj : require_field(j, "proposals", path, set.video_id)) {
    BoxProposal p;
    p.frame_index =
        require_field(pj, "frame_index", path, set.video_id).get<int>();
    p.slot_index =
        require_field(pj, "slot_index", path, set.video_id).get<int>();
    if (p.frame_index < 0 || p.frame_index >= set.num_frames) {
      schema_fail(path, "proposals.frame_index", set.video_id,
                  "frame " + std::to_string(p.frame_index) + " outside [0," +
                      std::to_string(set.num_frames) + ")");
    }
    if (p.slot_index < 0 || p.slot_index >= set.max_slots) {
      schema_fail(path, "proposals.slot_index", set.video_id,
                  "slot " + std::to_string(p.slot_index) + " outside [0," +
                      std::to_string(set.max_slots) + ")");
    }
    if (!seen.emplace(p.frame_index, p.slot_index).second) {
      schema_fail(path, "proposals", set.video_id,
                  "duplicate (frame_index, slot_index) = (" +
                      std::to_string(p.frame_index) + "," +
                      std::to_string(p.slot_index) + ")");
    }
    p.box = parse_box(require_field(pj, "box", path, set.video_id), path,
                      "proposals.box", set.video_id);
    p.tracklet_id =
        require_field(pj, "tracklet_id", path, set.video_id).get<int>();
    p.shot_id = require_field(pj, "shot_id", path, set.video_id).get<int>();
    auto [it, inserted] = shot_of_tracklet.emplace(p.tracklet_id, p.shot_id);
    if (!inserted && it->second != p.shot_id) {
      schema_fail(path, "proposals.shot_id", set.video_id,
                  "tracklet " + std::to_string(p.tracklet_id) +
                      " spans shots " + std::to_string(it->second) + " and " +
                      std::to_string(p.shot_id));
    }
    set.proposals.push_back(p);
  }
  if (set.proposals.size() >
      static_cast<std::size_t>(set.num_frames) *
          static_cast<std::size_t>(set.max_slots)) {
    schema_fail(path, "proposals", set.video_id,
                "more proposals than num_frames * max_slots");
  }
  return set;
}

void save_proposals(const std::string& path, const ProposalSet& proposals) {
  ordered_json arr = ordered_json::array();
  for (const auto& p : proposals.proposals) {
    arr.push_back(ordered_json{{"frame_index", p.frame_index},
                               {"slot_index", p.slot_index},
                               {"box", box_to_json(p.box)},
                               {"tracklet_id", p.tracklet_id},
                               {"shot_id", p.shot_id}});
  }
  write_json_file(path, ordered_json{{"video_id", proposals.video_id},
                                     {"num_frames", proposals.num_frames},
                                     {"max_slots", proposals.max_slots},
                                     {"proposals", arr}});
}

Predictions load_predictions(
    const std::string& path,
    const std::optional<VideoAnnotation>& annotation) {
  const ordered_json j = parse_json_file(path);
  Predictions pred;
  pred.video_id = require_field(j, "video_id", path, "").get<std::string>();

  auto check_slot = [&](int event, int role, const char* field) {
    if (event < 0 || role < 0) {
      schema_fail(path, field, pred.video_id, "negative event/role index");
    }
    if (annotation) {
      if (event >= static_cast<int>(annotation->events.size())) {
        schema_fail(path, field, pred.video_id,
                    "event " + std::to_string(event) + " outside [0," +
                        std::to_string(annotation->events.size()) + ")");
      }
      const auto& roles = annotation->events[event].roles;
      if (role >= static_cast<int>(roles.size())) {
        schema_fail(path, field, pred.video_id,
                    "role " + std::to_string(role) + " outside event " +
                        std::to_string(event) + "'s " +
                        std::to_string(roles.size()) + " roles");
      }
    }
  };

  for (const auto& verbs :
       require_field(j, "pred_verbs", path, pred.video_id)) {
    std::vector<std::string> ranked;
    for (const auto& v : verbs) ranked.push_back(v.get<std::string>());
    pred.pred_verbs.push_back(std::move(ranked));
  }
  if (annotation &&
      pred.pred_verbs.size() != annotation->events.size()) {
    schema_fail(path, "pred_verbs", pred.video_id,
                "expected one ranked list per event (" +
                    std::to_string(annotation->events.size()) + "), found " +
                    std::to_string(pred.pred_verbs.size()));
  }

  for (const auto& mj :
       require_field(j, "pred_mention_map", path, pred.video_id)) {
    const int event = require_field(mj, "event", path, pred.video_id).get<int>();
    const int role = require_field(mj, "role", path, pred.video_id).get<int>();
    const int id =
        require_field(mj, "entity_id", path, pred.video_id).get<int>();
    check_slot(event, role, "pred_mention_map");
    if (id < 0) {
      schema_fail(path, "pred_mention_map.entity_id", pred.video_id,
                  "negative entity id");
    }
    if (!pred.pred_mention_map.ids.emplace(SlotRef{event, role}, id).second) {
      schema_fail(path, "pred_mention_map", pred.video_id,
                  "duplicate mention for event " + std::to_string(event) +
                      " role " + std::to_string(role));
    }
  }

  const auto& captions =
      require_field(j, "pred_captions", path, pred.video_id);
  for (const auto& cj : captions) {
    const std::string caption = text::normalize_caption(
        require_field(cj, "caption", path, pred.video_id).get<std::string>());
    if (cj.contains("entity_id")) {
      // Entity-level captions are expanded to every mention of the entity.
      const int id = cj["entity_id"].get<int>();
      bool found = false;
      for (const auto& [slot, raw_id] : pred.pred_mention_map.ids) {
        if (raw_id == id) {
          pred.pred_captions[slot] = caption;
          found = true;
        }
      }
      if (!found) {
        schema_fail(path, "pred_captions.entity_id", pred.video_id,
                    "entity " + std::to_string(id) +
                        " has no mention in pred_mention_map");
      }
    } else {
      const int event =
          require_field(cj, "event", path, pred.video_id).get<int>();
      const int role =
          require_field(cj, "role", path, pred.video_id).get<int>();
      check_slot(event, role, "pred_captions");
      pred.pred_captions[SlotRef{event, role}] = caption;
    }
  }
  return pred;
}

void save_predictions(const std::string& path,
                      const Predictions& predictions) {
  ordered_json verbs = ordered_json::array();
  for (const auto& ranked : predictions.pred_verbs) verbs.push_back(ranked);
  ordered_json mentions = ordered_json::array();
  for (const auto& [slot, id] : predictions.pred_mention_map.ids) {
    mentions.push_back(ordered_json{
        {"event", slot.first}, {"role", slot.second}, {"entity_id", id}});
  }
  ordered_json captions = ordered_json::array();
  for (const auto& [slot, caption] : predictions.pred_captions) {
    captions.push_back(ordered_json{
        {"event", slot.first}, {"role", slot.second}, {"caption", caption}});
  }
  write_json_file(path, ordered_json{{"video_id", predictions.video_id},
                                     {"pred_verbs", verbs},
                                     {"pred_mention_map", mentions},
                                     {"pred_captions", captions}});
}

VerbRoleMap load_verb_role_map(const std::string& path) {
  const ordered_json j = parse_json_file(path);
  if (!j.is_object()) {
    schema_fail(path, "<root>", "", "expected {verb: [role,...]} object");
  }
  VerbRoleMap map;
  for (const auto& [verb, roles] : j.items()) {
    std::vector<std::string> list;
    for (const auto& r : roles) list.push_back(r.get<std::string>());
    if (list.size() > 6) {
      schema_fail(path, verb, "", "role list longer than 6");
    }
    map.roles_by_verb.emplace(verb, std::move(list));
  }
  return map;
}

namespace {

[[noreturn]] void consistency_fail(const std::string& manifest_path,
                                   const std::string& detail) {
  raise(ErrorKind::consistency, "'" + manifest_path + "': " + detail);
}

}  // namespace

RunBundle load_run_bundle(const std::string& manifest_path,
                          const BundleLimits& limits) {
  const ordered_json manifest = parse_json_file(manifest_path);
  const fs::path base = fs::path(manifest_path).parent_path();
  auto resolve = [&](const char* key) -> std::string {
    const auto& v = require_field(manifest, key, manifest_path, "");
    return (base / v.get<std::string>()).string();
  };

  RunBundle bundle;
  bundle.proposals = load_proposals(resolve("proposals"));
  const std::string& video_id = bundle.proposals.video_id;

  auto annotations = load_annotations(resolve("annotations"));
  bool found = false;
  for (auto& a : annotations) {
    if (a.video_id == video_id) {
      bundle.annotation = std::move(a);
      found = true;
      break;
    }
  }
  if (!found) {
    consistency_fail(manifest_path,
                     "annotations file has no entry for video " + video_id);
  }

  if (bundle.proposals.num_frames > limits.max_frames) {
    consistency_fail(manifest_path,
                     "num_frames " + std::to_string(bundle.proposals.num_frames) +
                         " exceeds configured limit " +
                         std::to_string(limits.max_frames));
  }
  if (bundle.proposals.max_slots > limits.max_slots) {
    consistency_fail(manifest_path,
                     "max_slots " + std::to_string(bundle.proposals.max_slots) +
                         " exceeds configured limit " +
                         std::to_string(limits.max_slots));
  }
  for (const auto& event : bundle.annotation.events) {
    if (static_cast<int>(event.roles.size()) > limits.max_roles) {
      consistency_fail(manifest_path,
                       "event " + std::to_string(event.index) + " has " +
                           std::to_string(event.roles.size()) +
                           " roles, limit is " +
                           std::to_string(limits.max_roles));
    }
  }

  const std::size_t num_proposals = bundle.proposals.proposals.size();
  const std::size_t num_events = bundle.annotation.events.size();
  const std::size_t expected_rows =
      num_events * static_cast<std::size_t>(limits.max_roles);

  const Tensor emb = load_tensor(resolve("embeddings"));
  if (emb.dims.size() != 2) {
    consistency_fail(manifest_path, "embeddings tensor must be rank 2");
  }
  if (emb.dims[0] != num_proposals) {
    consistency_fail(manifest_path,
                     "embeddings rows: expected " +
                         std::to_string(num_proposals) + " (proposal count), " +
                         "found " + std::to_string(emb.dims[0]));
  }
  bundle.embeddings.values = Matrix(emb.dims[0], emb.dims[1]);
  for (std::size_t i = 0; i < emb.values.size(); ++i) {
    bundle.embeddings.values.data[i] = emb.values[i];
  }

  const Tensor att = load_tensor(resolve("attention"));
  if (att.dims.size() != 2) {
    consistency_fail(manifest_path, "attention tensor must be rank 2");
  }
  if (att.dims[0] != expected_rows || att.dims[1] != num_proposals) {
    consistency_fail(manifest_path,
                     "attention shape: expected " +
                         std::to_string(expected_rows) + "x" +
                         std::to_string(num_proposals) + ", found " +
                         std::to_string(att.dims[0]) + "x" +
                         std::to_string(att.dims[1]));
  }
  bundle.attention.values = Matrix(att.dims[0], att.dims[1]);
  bundle.attention.num_events = static_cast<int>(num_events);
  bundle.attention.max_roles = limits.max_roles;
  for (std::size_t i = 0; i < att.values.size(); ++i) {
    if (att.values[i] < 0.0f) {
      consistency_fail(manifest_path, "attention entries must be >= 0");
    }
    bundle.attention.values.data[i] = att.values[i];
  }
  for (std::size_t e = 0; e < num_events; ++e) {
    const auto& roles = bundle.annotation.events[e].roles;
    for (std::size_t k = 0; k < roles.size(); ++k) {
      const std::size_t row =
          bundle.attention.row_of(static_cast<int>(e), static_cast<int>(k));
      double sum = 0.0;
      for (std::size_t c = 0; c < bundle.attention.values.cols; ++c) {
        sum += bundle.attention.values.at(row, c);
      }
      if (!(sum > 0.0)) {
        consistency_fail(manifest_path,
                         "attention row for active role (event " +
                             std::to_string(e) + ", role " + std::to_string(k) +
                             ") sums to zero");
      }
    }
  }

  bundle.predictions =
      load_predictions(resolve("predictions"), bundle.annotation);
  if (bundle.predictions.video_id != video_id) {
    consistency_fail(manifest_path, "predictions video_id '" +
                                        bundle.predictions.video_id +
                                        "' != proposals video_id '" +
                                        video_id + "'");
  }

  if (manifest.contains("grounding") && !manifest["grounding"].is_null()) {
    auto grounding = load_grounding(resolve("grounding"));
    auto it = grounding.find(video_id);
    if (it == grounding.end()) {
      consistency_fail(manifest_path,
                       "grounding file has no entry for video " + video_id);
    }
    std::set<std::string> role_captions;
    for (const auto& event : bundle.annotation.events) {
      for (const auto& slot : event.roles) role_captions.insert(slot.caption);
    }
    for (const auto& entry : it->second.entries) {
      if (entry.frame_index >= bundle.proposals.num_frames) {
        consistency_fail(manifest_path,
                         "grounding frame " + std::to_string(entry.frame_index) +
                             " outside the video's " +
                             std::to_string(bundle.proposals.num_frames) +
                             " frames");
      }
      if (role_captions.count(entry.caption) == 0) {
        consistency_fail(manifest_path, "grounding caption '" + entry.caption +
                                            "' is not a role caption of video " +
                                            video_id);
      }
    }
    bundle.grounding = std::move(it->second);
  }

  return bundle;
}

void save_manifest(const std::string& manifest_path, bool with_grounding) {
  ordered_json manifest{{"annotations", "annotations.json"},
                        {"proposals", "proposals.json"},
                        {"embeddings", "embeddings.bin"},
                        {"attention", "attention.bin"},
                        {"predictions", "predictions.json"}};
  if (with_grounding) manifest["grounding"] = "grounding.json";
  write_json_file(manifest_path, manifest);
}

std::vector<std::string> discover_manifests(const std::string& bundle_dir) {
  const fs::path root(bundle_dir);
  if (!fs::is_directory(root)) {
    raise(ErrorKind::io, "'" + bundle_dir + "' is not a directory");
  }
  if (fs::exists(root / "manifest.json")) {
    return {(root / "manifest.json").string()};
  }
  std::vector<std::string> manifests;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory() && fs::exists(entry.path() / "manifest.json")) {
      manifests.push_back((entry.path() / "manifest.json").string());
    }
  }
  std::sort(manifests.begin(), manifests.end());
  if (manifests.empty()) {
    raise(ErrorKind::io,
          "no manifest.json found in '" + bundle_dir + "' or its subdirectories");
  }
  return manifests;
}

}  // namespace mec::ingest
