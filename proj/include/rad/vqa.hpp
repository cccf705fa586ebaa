#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "rad/bev_raster.hpp"
#include "rad/scene.hpp"

namespace rad {

enum class VqaTask { ClassRecognition, PositionEstimation, DistanceEstimation, SizeEstimation };

std::string_view vqa_task_name(VqaTask t) noexcept;

/// Eight 45-degree sectors centered on the ego axes and diagonals.
enum class Sector { Front, LeftFront, Left, LeftRear, Rear, RightRear, Right, RightFront };

std::string_view sector_name(Sector s) noexcept;
Sector sector_of(Vec2 ego_frame_point) noexcept;

/// Phrase used inside questions: "vehicle", "pedestrian", "static obstacle".
std::string_view object_class_phrase(ObjectClass c) noexcept;

struct DistanceMeters {
  double value = 0.0;
};

using VqaTruth = std::variant<ObjectClass, Vec2, DistanceMeters, ObjectSize>;

/// Rounds half toward +infinity at one decimal.
double round1(double value);

/// The fixed answer template for each payload kind.
std::string render_answer(const VqaTruth& truth);

struct VqaPair {
  std::string scene_id;
  std::string question;
  std::string answer;
  VqaTask task = VqaTask::ClassRecognition;
  VqaTruth ground_truth;
  std::vector<std::size_t> referents;  // annotation indices the question names
};

struct VqaConfig {
  std::size_t max_pairs_per_scene = 12;
  std::uint64_t seed = 0;
};

/// Emits only questions whose referent is unique in the scene; ambiguous
/// ones are dropped.
std::vector<VqaPair> gen_vqa_pairs(const SceneRecord& scene, const VqaConfig& cfg = {});

/// System text describing the BEV legend for the given extents.
std::string vqa_system_prompt(const BevConfig& bev);

/// One JSON Lines record in the fine-tuning export layout.
std::string vqa_export_line(const VqaPair& pair, const SceneRecord& scene,
                            const std::string& system_prompt);

}  // namespace rad
