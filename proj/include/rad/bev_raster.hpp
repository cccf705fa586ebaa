#pragma once

#include <cstddef>
#include <vector>

#include "rad/image.hpp"
#include "rad/scene.hpp"

namespace rad {

namespace bev_colors {
inline constexpr Rgb kBackground{255, 255, 255};
inline constexpr Rgb kEgo{0, 0, 255};
inline constexpr Rgb kVehicle{255, 0, 0};
inline constexpr Rgb kVehicleArrow{160, 0, 0};
inline constexpr Rgb kPedestrian{0, 255, 0};
inline constexpr Rgb kPedestrianArrow{0, 128, 0};
inline constexpr Rgb kStatic{0, 0, 0};
}  // namespace bev_colors

struct BevConfig {
  double ahead = 60.0;
  double behind = 30.0;
  double left = 30.0;
  double right = 30.0;
  double pixels_per_meter = 8.0;
  double ego_length = 4.5;
  double ego_width = 1.9;
  double pedestrian_radius = 0.4;
  double static_radius = 0.5;
  /// Arrow length is the displacement covered in this many seconds.
  double arrow_seconds = 1.0;

  void validate() const;
  int width_px() const;
  int height_px() const;
};

/// Ego-frame meters (x forward, y left) to continuous pixel coordinates.
/// Forward is up, left is left; pixel (c, r) covers [c, c+1) x [r, r+1).
struct BevTransform {
  double pixels_per_meter = 8.0;
  double ahead = 60.0;
  double left = 30.0;

  struct Pixel {
    double col = 0.0;
    double row = 0.0;
  };

  Pixel to_pixel(Vec2 meters) const noexcept {
    return {(left - meters.y) * pixels_per_meter, (ahead - meters.x) * pixels_per_meter};
  }
  Vec2 to_meters(Pixel p) const noexcept {
    return {ahead - p.row / pixels_per_meter, left - p.col / pixels_per_meter};
  }
  Vec2 pixel_center_meters(int col, int row) const noexcept {
    return to_meters({col + 0.5, row + 0.5});
  }
};

enum class GlyphKind { Ego, Vehicle, Pedestrian, StaticObstacle };

struct BevGlyph {
  GlyphKind kind = GlyphKind::Ego;
  std::size_t annotation_index = 0;  // meaningless for Ego
  Vec2 center;
  bool has_arrow = false;
  std::size_t body_pixels = 0;
};

struct BevRender {
  RgbImage image;
  BevTransform transform;
  std::vector<BevGlyph> glyphs;
  std::size_t omitted = 0;  // wholly outside the extent
  std::size_t skipped = 0;  // degenerate annotations
};

BevRender render_bev(const std::vector<ObjectAnnotation>& annotations, const BevConfig& cfg = {});
inline BevRender render_bev(const SceneRecord& scene, const BevConfig& cfg = {}) {
  return render_bev(scene.annotations, cfg);
}

}  // namespace rad
