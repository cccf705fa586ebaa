#include "rad/scene.hpp"

#include <cmath>
#include <filesystem>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "rad/error.hpp"
#include "rad/util.hpp"

namespace rad {

using nlohmann::ordered_json;

std::string_view object_class_name(ObjectClass c) noexcept {
  switch (c) {
    case ObjectClass::Vehicle: return "vehicle";
    case ObjectClass::Pedestrian: return "pedestrian";
    case ObjectClass::StaticObstacle: return "static_obstacle";
  }
  return "vehicle";
}

std::optional<ObjectClass> object_class_from_name(std::string_view name) noexcept {
  if (name == "vehicle") return ObjectClass::Vehicle;
  if (name == "pedestrian") return ObjectClass::Pedestrian;
  if (name == "static_obstacle") return ObjectClass::StaticObstacle;
  return std::nullopt;
}

double ObjectAnnotation::speed() const noexcept { return std::hypot(velocity.x, velocity.y); }

bool ObjectAnnotation::is_moving() const noexcept { return speed() > kMovingSpeedThreshold; }

double ObjectAnnotation::yaw() const noexcept {
  return is_moving() ? std::atan2(velocity.y, velocity.x) : 0.0;
}

bool ObjectAnnotation::footprint_contains(Vec2 p) const noexcept {
  const double c = std::cos(yaw());
  const double s = std::sin(yaw());
  const double dx = p.x - center.x;
  const double dy = p.y - center.y;
  const double along = c * dx + s * dy;
  const double across = -s * dx + c * dy;
  return std::abs(along) <= 0.5 * size.length && std::abs(across) <= 0.5 * size.width;
}

std::string_view split_name(Split s) noexcept {
  switch (s) {
    case Split::Finetune: return "finetune";
    case Split::Database: return "database";
    case Split::Test: return "test";
  }
  return "test";
}

std::optional<Split> split_from_name(std::string_view name) noexcept {
  if (name == "finetune") return Split::Finetune;
  if (name == "database") return Split::Database;
  if (name == "test") return Split::Test;
  return std::nullopt;
}

std::filesystem::path resolve_image(const std::filesystem::path& base_dir,
                                    std::string_view reference) {
  std::filesystem::path p{std::string(reference)};
  return p.is_absolute() ? p : base_dir / p;
}

namespace {

[[noreturn]] void fail(int line_no, const std::string& field, const std::string& why) {
  throw Error(ErrorCode::ParseError,
              "manifest line " + std::to_string(line_no) + ": field '" + field + "': " + why);
}

double number(const ordered_json& j, int line_no, const std::string& field) {
  if (!j.is_number()) fail(line_no, field, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(line_no, field, "not finite");
  return v;
}

const ordered_json& member(const ordered_json& obj, const char* key, int line_no,
                           const std::string& field) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(line_no, field, "missing");
  return *it;
}

Vec2 vec2(const ordered_json& j, int line_no, const std::string& field) {
  if (!j.is_array() || j.size() != 2) fail(line_no, field, "expected [x, y]");
  return {number(j[0], line_no, field + "[0]"), number(j[1], line_no, field + "[1]")};
}

std::string string_field(const ordered_json& j, int line_no, const std::string& field) {
  if (!j.is_string()) fail(line_no, field, "expected a string");
  return j.get<std::string>();
}

ObjectAnnotation parse_annotation(const ordered_json& j, int line_no, const std::string& field) {
  if (!j.is_object()) fail(line_no, field, "expected an object");
  ObjectAnnotation a;
  const std::string cls = string_field(member(j, "class", line_no, field + ".class"), line_no,
                                       field + ".class");
  const auto oc = object_class_from_name(cls);
  if (!oc) fail(line_no, field + ".class", "unknown class '" + cls + "'");
  a.object_class = *oc;
  a.center = vec2(member(j, "center", line_no, field + ".center"), line_no, field + ".center");
  const auto& size = member(j, "size", line_no, field + ".size");
  if (!size.is_array() || size.size() != 3) fail(line_no, field + ".size", "expected [l, w, h]");
  a.size = {number(size[0], line_no, field + ".size[0]"),
            number(size[1], line_no, field + ".size[1]"),
            number(size[2], line_no, field + ".size[2]")};
  if (a.size.length <= 0 || a.size.width <= 0 || a.size.height <= 0) {
    fail(line_no, field + ".size", "components must be strictly positive");
  }
  if (auto it = j.find("velocity"); it != j.end()) {
    a.velocity = vec2(*it, line_no, field + ".velocity");
  }
  if (a.object_class == ObjectClass::StaticObstacle && (a.velocity.x != 0 || a.velocity.y != 0)) {
    fail(line_no, field + ".velocity", "static obstacles must have zero velocity");
  }
  return a;
}

EgoPose parse_pose(const ordered_json& j, int line_no, const std::string& field) {
  if (!j.is_object()) fail(line_no, field, "expected an object");
  EgoPose p;
  p.t = number(member(j, "t", line_no, field + ".t"), line_no, field + ".t");
  p.x = number(member(j, "x", line_no, field + ".x"), line_no, field + ".x");
  p.y = number(member(j, "y", line_no, field + ".y"), line_no, field + ".y");
  p.heading = number(member(j, "heading", line_no, field + ".heading"), line_no,
                     field + ".heading");
  p.speed = number(member(j, "speed", line_no, field + ".speed"), line_no, field + ".speed");
  if (p.speed < 0) fail(line_no, field + ".speed", "must be non-negative");
  return p;
}

void require_image(const std::filesystem::path& base_dir, const std::string& scene_id,
                   const std::string& reference) {
  if (!std::filesystem::exists(resolve_image(base_dir, reference))) {
    throw Error(ErrorCode::MissingImage,
                "scene '" + scene_id + "': image not found: " + reference);
  }
}

SceneRecord parse_scene(const std::string& line, int line_no) {
  ordered_json j;
  try {
    j = ordered_json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::ParseError,
                "manifest line " + std::to_string(line_no) + ": invalid JSON: " + e.what());
  }
  if (!j.is_object()) fail(line_no, "<root>", "expected an object");

  SceneRecord s;
  s.scene_id = string_field(member(j, "scene_id", line_no, "scene_id"), line_no, "scene_id");
  if (s.scene_id.empty()) fail(line_no, "scene_id", "must not be empty");
  s.front_image =
      string_field(member(j, "front_image", line_no, "front_image"), line_no, "front_image");

  if (auto it = j.find("surround_images"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) fail(line_no, "surround_images", "expected an array");
    for (const auto& img : *it) s.surround_images.push_back(string_field(img, line_no, "surround_images"));
    if (!s.surround_images.empty() && s.surround_images.size() != 6) {
      fail(line_no, "surround_images", "expected exactly 6 images");
    }
  }
  if (auto it = j.find("bev_image"); it != j.end() && !it->is_null()) {
    s.bev_image = string_field(*it, line_no, "bev_image");
  }
  if (auto it = j.find("annotations"); it != j.end()) {
    if (!it->is_array()) fail(line_no, "annotations", "expected an array");
    for (std::size_t i = 0; i < it->size(); ++i) {
      s.annotations.push_back(
          parse_annotation((*it)[i], line_no, "annotations[" + std::to_string(i) + "]"));
    }
  }
  if (auto it = j.find("ego_history"); it != j.end()) {
    if (!it->is_array()) fail(line_no, "ego_history", "expected an array");
    for (std::size_t i = 0; i < it->size(); ++i) {
      s.ego_history.push_back(
          parse_pose((*it)[i], line_no, "ego_history[" + std::to_string(i) + "]"));
      if (i > 0 && s.ego_history[i].t <= s.ego_history[i - 1].t) {
        fail(line_no, "ego_history[" + std::to_string(i) + "].t",
             "timestamps must be strictly increasing");
      }
    }
  }
  if (auto it = j.find("nav_hint"); it != j.end() && !it->is_null()) {
    s.nav_hint = string_field(*it, line_no, "nav_hint");
  }
  if (auto it = j.find("split"); it != j.end() && !it->is_null()) {
    const std::string name = string_field(*it, line_no, "split");
    s.split = split_from_name(name);
    if (!s.split) fail(line_no, "split", "unknown split '" + name + "'");
  }
  if (auto it = j.find("gt_action"); it != j.end() && !it->is_null()) {
    const std::string name = string_field(*it, line_no, "gt_action");
    s.gt_action = action_from_label(name);
    if (!s.gt_action) fail(line_no, "gt_action", "unknown meta-action '" + name + "'");
  }
  return s;
}

ordered_json vec2_json(Vec2 v) { return ordered_json::array({v.x, v.y}); }

}  // namespace

std::vector<SceneRecord> parse_manifest(std::string_view jsonl,
                                        const std::filesystem::path& base_dir,
                                        const ManifestOptions& options) {
  std::vector<SceneRecord> scenes;
  std::unordered_set<std::string> ids;
  std::istringstream in{std::string(jsonl)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    SceneRecord s = parse_scene(line, line_no);
    if (!ids.insert(s.scene_id).second) {
      throw Error(ErrorCode::DuplicateId, "manifest line " + std::to_string(line_no) +
                                              ": duplicate scene_id '" + s.scene_id + "'");
    }
    if (options.check_images) {
      require_image(base_dir, s.scene_id, s.front_image);
      for (const auto& img : s.surround_images) require_image(base_dir, s.scene_id, img);
      if (s.bev_image) require_image(base_dir, s.scene_id, *s.bev_image);
    }
    scenes.push_back(std::move(s));
  }
  return scenes;
}

std::vector<SceneRecord> load_manifest(const std::filesystem::path& path,
                                       const ManifestOptions& options) {
  return parse_manifest(read_text_file(path), path.parent_path(), options);
}

std::string scene_to_json_line(const SceneRecord& s) {
  ordered_json j;
  j["scene_id"] = s.scene_id;
  j["front_image"] = s.front_image;
  j["surround_images"] = s.surround_images;
  if (s.bev_image) j["bev_image"] = *s.bev_image;
  ordered_json anns = ordered_json::array();
  for (const auto& a : s.annotations) {
    ordered_json o;
    o["class"] = object_class_name(a.object_class);
    o["center"] = vec2_json(a.center);
    o["size"] = ordered_json::array({a.size.length, a.size.width, a.size.height});
    o["velocity"] = vec2_json(a.velocity);
    anns.push_back(std::move(o));
  }
  j["annotations"] = std::move(anns);
  ordered_json poses = ordered_json::array();
  for (const auto& p : s.ego_history) {
    poses.push_back({{"t", p.t}, {"x", p.x}, {"y", p.y}, {"heading", p.heading}, {"speed", p.speed}});
  }
  j["ego_history"] = std::move(poses);
  j["nav_hint"] = s.nav_hint;
  if (s.split) j["split"] = split_name(*s.split);
  if (s.gt_action) j["gt_action"] = label_name(*s.gt_action);
  return j.dump();
}

std::string serialize_manifest(const std::vector<SceneRecord>& scenes) {
  std::string out;
  for (const auto& s : scenes) {
    out += scene_to_json_line(s);
    out += '\n';
  }
  return out;
}

void write_manifest(const std::filesystem::path& path, const std::vector<SceneRecord>& scenes) {
  write_text_file(path, serialize_manifest(scenes));
}

void assign_split(std::vector<SceneRecord>& records, std::uint64_t seed, SplitCounts counts) {
  const std::size_t wanted = counts.finetune + counts.database + counts.test;
  if (wanted > records.size()) {
    throw Error(ErrorCode::InsufficientScenes,
                "split needs " + std::to_string(wanted) + " scenes, manifest has " +
                    std::to_string(records.size()));
  }
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(order);
  for (std::size_t i = 0; i < order.size(); ++i) {
    auto& split = records[order[i]].split;
    if (i < counts.finetune) {
      split = Split::Finetune;
    } else if (i < counts.finetune + counts.database) {
      split = Split::Database;
    } else if (i < wanted) {
      split = Split::Test;
    } else {
      split.reset();
    }
  }
}

}  // namespace rad
