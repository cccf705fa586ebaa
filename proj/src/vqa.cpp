#include "rad/vqa.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include <json.hpp>

#include "rad/util.hpp"
#include "rad_builtin_data.hpp"

namespace rad {

std::string_view vqa_task_name(VqaTask t) noexcept {
  switch (t) {
    case VqaTask::ClassRecognition: return "class_recognition";
    case VqaTask::PositionEstimation: return "position_estimation";
    case VqaTask::DistanceEstimation: return "distance_estimation";
    case VqaTask::SizeEstimation: return "size_estimation";
  }
  return "class_recognition";
}

std::string_view sector_name(Sector s) noexcept {
  switch (s) {
    case Sector::Front: return "front";
    case Sector::LeftFront: return "left-front";
    case Sector::Left: return "left";
    case Sector::LeftRear: return "left-rear";
    case Sector::Rear: return "rear";
    case Sector::RightRear: return "right-rear";
    case Sector::Right: return "right";
    case Sector::RightFront: return "right-front";
  }
  return "front";
}

Sector sector_of(Vec2 p) noexcept {
  // Bearing in [0, 360) counter-clockwise from forward, shifted by half a
  // sector so each sector is a half-open [k*45, (k+1)*45) bucket.
  double deg = std::atan2(p.y, p.x) * 180.0 / std::numbers::pi;
  deg = std::fmod(deg + 22.5 + 360.0, 360.0);
  static constexpr Sector kOrder[] = {Sector::Front, Sector::LeftFront, Sector::Left,
                                      Sector::LeftRear, Sector::Rear, Sector::RightRear,
                                      Sector::Right, Sector::RightFront};
  return kOrder[std::min(7, static_cast<int>(deg / 45.0))];
}

std::string_view object_class_phrase(ObjectClass c) noexcept {
  switch (c) {
    case ObjectClass::Vehicle: return "vehicle";
    case ObjectClass::Pedestrian: return "pedestrian";
    case ObjectClass::StaticObstacle: return "static obstacle";
  }
  return "vehicle";
}

double round1(double value) {
  // The epsilon absorbs binary representation error so 0.25 -> 0.3 style
  // half-way cases round up as written in decimal.
  const double r = std::floor(value * 10.0 + 0.5 + 1e-9) / 10.0;
  return r == 0.0 ? 0.0 : r;
}

namespace {

std::string d1(double v) { return format_fixed(round1(v), 1); }

struct AnswerRenderer {
  std::string operator()(ObjectClass c) const { return std::string(object_class_phrase(c)); }
  std::string operator()(Vec2 p) const { return "[" + d1(p.x) + "," + d1(p.y) + "]"; }
  std::string operator()(DistanceMeters d) const { return d1(d.value) + " m"; }
  std::string operator()(ObjectSize s) const {
    return "[" + d1(s.length) + "," + d1(s.width) + "," + d1(s.height) + "]";
  }
};

std::string referent_phrase(const ObjectAnnotation& a) {
  return "the " + std::string(sector_name(sector_of(a.center))) + " " +
         std::string(object_class_phrase(a.object_class));
}

std::vector<bool> uniquely_referable(const std::vector<ObjectAnnotation>& objects) {
  std::map<std::pair<Sector, ObjectClass>, int> counts;
  for (const auto& a : objects) ++counts[{sector_of(a.center), a.object_class}];
  std::vector<bool> unique(objects.size());
  for (std::size_t i = 0; i < objects.size(); ++i) {
    unique[i] = counts[{sector_of(objects[i].center), objects[i].object_class}] == 1;
  }
  return unique;
}

std::optional<std::size_t> sole_container(const std::vector<ObjectAnnotation>& objects, Vec2 p) {
  std::optional<std::size_t> hit;
  for (std::size_t i = 0; i < objects.size(); ++i) {
    if (!objects[i].footprint_contains(p)) continue;
    if (hit) return std::nullopt;
    hit = i;
  }
  return hit;
}

}  // namespace

std::string render_answer(const VqaTruth& truth) { return std::visit(AnswerRenderer{}, truth); }

std::vector<VqaPair> gen_vqa_pairs(const SceneRecord& scene, const VqaConfig& cfg) {
  const auto& objects = scene.annotations;
  Rng rng(cfg.seed ^ fnv1a64(scene.scene_id));
  std::vector<VqaPair> pairs;
  auto emit = [&](VqaTask task, std::string question, VqaTruth truth,
                  std::vector<std::size_t> referents) {
    VqaPair p;
    p.scene_id = scene.scene_id;
    p.question = std::move(question);
    p.answer = render_answer(truth);
    p.task = task;
    p.ground_truth = truth;
    p.referents = std::move(referents);
    pairs.push_back(std::move(p));
  };

  // Class at a coordinate: a rounded point inside one footprint and no other.
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const auto& a = objects[i];
    const double c = std::cos(a.yaw());
    const double s = std::sin(a.yaw());
    for (int attempt = 0; attempt < 4; ++attempt) {
      const double along = rng.uniform(-0.4, 0.4) * a.size.length;
      const double across = rng.uniform(-0.4, 0.4) * a.size.width;
      const Vec2 q{round1(a.center.x + c * along - s * across),
                   round1(a.center.y + s * along + c * across)};
      if (sole_container(objects, q) == i) {
        emit(VqaTask::ClassRecognition,
             "Which kind of object (pedestrian, vehicle, or static obstacle) occupies the "
             "coordinate [" + d1(q.x) + "," + d1(q.y) + "] in this image?",
             a.object_class, {i});
        break;
      }
    }
  }

  const std::vector<bool> unique = uniquely_referable(objects);
  for (std::size_t i = 0; i < objects.size(); ++i) {
    if (!unique[i]) continue;
    emit(VqaTask::PositionEstimation,
         "Where is the center of " + referent_phrase(objects[i]) +
             " in this image? Give [longitudinal,lateral] with one decimal place.",
         objects[i].center, {i});
  }
  for (std::size_t i = 0; i < objects.size(); ++i) {
    if (!unique[i]) continue;
    emit(VqaTask::SizeEstimation,
         "How large is " + referent_phrase(objects[i]) +
             "? Give [length,width,height] in meters with one decimal place.",
         objects[i].size, {i});
  }
  for (std::size_t i = 0; i < objects.size(); ++i) {
    for (std::size_t j = i + 1; j < objects.size(); ++j) {
      if (!unique[i] || !unique[j]) continue;
      const double dist = std::hypot(objects[i].center.x - objects[j].center.x,
                                     objects[i].center.y - objects[j].center.y);
      emit(VqaTask::DistanceEstimation,
           "How far is " + referent_phrase(objects[i]) + " from " + referent_phrase(objects[j]) +
               "? Answer in meters with one decimal place.",
           DistanceMeters{dist}, {i, j});
    }
  }

  if (pairs.size() > cfg.max_pairs_per_scene) {
    std::vector<std::size_t> keep(pairs.size());
    for (std::size_t i = 0; i < keep.size(); ++i) keep[i] = i;
    rng.shuffle(keep);
    keep.resize(cfg.max_pairs_per_scene);
    std::sort(keep.begin(), keep.end());
    std::vector<VqaPair> kept;
    kept.reserve(keep.size());
    for (std::size_t k : keep) kept.push_back(std::move(pairs[k]));
    pairs = std::move(kept);
  }
  return pairs;
}

std::string vqa_system_prompt(const BevConfig& bev) {
  std::string text(builtin_data::kVqaSystemTxt);
  auto sub = [&](std::string_view key, double v) {
    const std::string token = "{{" + std::string(key) + "}}";
    for (auto pos = text.find(token); pos != std::string::npos; pos = text.find(token)) {
      text.replace(pos, token.size(), format_fixed(v, v == std::floor(v) ? 0 : 1));
    }
  };
  sub("ahead", bev.ahead);
  sub("behind", bev.behind);
  sub("left", bev.left);
  sub("right", bev.right);
  while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
  return text;
}

std::string vqa_export_line(const VqaPair& pair, const SceneRecord& scene,
                            const std::string& system_prompt) {
  nlohmann::ordered_json j;
  j["scene_id"] = pair.scene_id;
  j["images"] = nlohmann::ordered_json::array({scene.front_image, scene.bev_image.value_or("")});
  j["system"] = system_prompt;
  j["question"] = pair.question;
  j["answer"] = pair.answer;
  j["task_kind"] = vqa_task_name(pair.task);
  return j.dump();
}

}  // namespace rad
