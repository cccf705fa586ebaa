#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rad/taxonomy.hpp"

namespace rad {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Vec2&, const Vec2&) = default;
};

/// World-frame ego pose. Heading in radians, counter-clockwise from +x.
struct EgoPose {
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
  double speed = 0.0;

  friend bool operator==(const EgoPose&, const EgoPose&) = default;
};

enum class ObjectClass : std::uint8_t { Vehicle, Pedestrian, StaticObstacle };

std::string_view object_class_name(ObjectClass c) noexcept;
std::optional<ObjectClass> object_class_from_name(std::string_view name) noexcept;

struct ObjectSize {
  double length = 0.0;
  double width = 0.0;
  double height = 0.0;

  friend bool operator==(const ObjectSize&, const ObjectSize&) = default;
};

/// Object in the ego frame: x forward, y left, meters.
struct ObjectAnnotation {
  ObjectClass object_class = ObjectClass::Vehicle;
  Vec2 center;
  ObjectSize size;
  Vec2 velocity;

  friend bool operator==(const ObjectAnnotation&, const ObjectAnnotation&) = default;

  double speed() const noexcept;
  bool is_moving() const noexcept;
  /// Yaw of the footprint: direction of travel when moving, else 0.
  double yaw() const noexcept;
  /// Oriented length x width rectangle test.
  bool footprint_contains(Vec2 point) const noexcept;
};

/// Below this speed an object is drawn and treated as stationary.
inline constexpr double kMovingSpeedThreshold = 0.1;

enum class Split : std::uint8_t { Finetune, Database, Test };

std::string_view split_name(Split s) noexcept;
std::optional<Split> split_from_name(std::string_view name) noexcept;

struct SceneRecord {
  std::string scene_id;
  std::string front_image;
  std::vector<std::string> surround_images;  // empty or exactly 6
  std::optional<std::string> bev_image;
  std::vector<ObjectAnnotation> annotations;
  std::vector<EgoPose> ego_history;
  std::string nav_hint;
  std::optional<Split> split;
  std::optional<MetaAction> gt_action;

  friend bool operator==(const SceneRecord&, const SceneRecord&) = default;
};

struct ManifestOptions {
  /// Resolve image paths relative to the manifest and require they exist.
  bool check_images = true;
};

/// Image paths are kept as written; relative paths resolve against the
/// manifest's directory.
std::vector<SceneRecord> parse_manifest(std::string_view jsonl,
                                        const std::filesystem::path& base_dir,
                                        const ManifestOptions& options = {});
std::vector<SceneRecord> load_manifest(const std::filesystem::path& path,
                                       const ManifestOptions& options = {});

std::string scene_to_json_line(const SceneRecord& scene);
std::string serialize_manifest(const std::vector<SceneRecord>& scenes);
void write_manifest(const std::filesystem::path& path, const std::vector<SceneRecord>& scenes);

std::filesystem::path resolve_image(const std::filesystem::path& base_dir,
                                    std::string_view reference);

struct SplitCounts {
  std::size_t finetune = 0;
  std::size_t database = 0;
  std::size_t test = 0;
};

/// Seeded shuffle, then cut into finetune/database/test of exactly the
/// requested sizes. Records past the cut end up with no split.
void assign_split(std::vector<SceneRecord>& records, std::uint64_t seed, SplitCounts counts);

}  // namespace rad
