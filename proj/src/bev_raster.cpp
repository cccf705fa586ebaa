#include "rad/bev_raster.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rad/error.hpp"

namespace rad {

void BevConfig::validate() const {
  if (!(ahead > 0 && behind > 0 && left > 0 && right > 0)) {
    throw Error(ErrorCode::InvalidArgument, "BEV extents must be > 0");
  }
  if (!(pixels_per_meter >= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "pixels_per_meter must be >= 1");
  }
  if (!(ego_length > 0 && ego_width > 0 && pedestrian_radius > 0 && static_radius > 0 &&
        arrow_seconds > 0)) {
    throw Error(ErrorCode::InvalidArgument, "BEV glyph sizes must be > 0");
  }
}

int BevConfig::width_px() const {
  return static_cast<int>(std::lround((left + right) * pixels_per_meter));
}

int BevConfig::height_px() const {
  return static_cast<int>(std::lround((ahead + behind) * pixels_per_meter));
}

namespace {

struct Box {
  double min_x, max_x, min_y, max_y;
};

class Painter {
 public:
  Painter(RgbImage& image, const BevTransform& tf) : image_(image), tf_(tf) {}

  // Fills every pixel whose center satisfies `inside`, scanning only the
  // pixels covering `box` (meters). Returns the number of pixels painted.
  template <typename Inside>
  std::size_t fill(const Box& box, Rgb color, Inside&& inside) {
    const auto a = tf_.to_pixel({box.max_x, box.max_y});
    const auto b = tf_.to_pixel({box.min_x, box.min_y});
    const int c0 = std::max(0, static_cast<int>(std::floor(a.col)) - 1);
    const int c1 = std::min(image_.width() - 1, static_cast<int>(std::ceil(b.col)) + 1);
    const int r0 = std::max(0, static_cast<int>(std::floor(a.row)) - 1);
    const int r1 = std::min(image_.height() - 1, static_cast<int>(std::ceil(b.row)) + 1);
    std::size_t painted = 0;
    for (int r = r0; r <= r1; ++r) {
      for (int c = c0; c <= c1; ++c) {
        if (inside(tf_.pixel_center_meters(c, r))) {
          image_.set(c, r, color);
          ++painted;
        }
      }
    }
    return painted;
  }

  std::size_t rect(Vec2 center, double length, double width, double yaw, Rgb color) {
    const double c = std::cos(yaw);
    const double s = std::sin(yaw);
    const double hx = 0.5 * (std::abs(c) * length + std::abs(s) * width);
    const double hy = 0.5 * (std::abs(s) * length + std::abs(c) * width);
    return fill({center.x - hx, center.x + hx, center.y - hy, center.y + hy}, color,
                [&](Vec2 p) {
                  const double dx = p.x - center.x;
                  const double dy = p.y - center.y;
                  return std::abs(c * dx + s * dy) <= 0.5 * length &&
                         std::abs(-s * dx + c * dy) <= 0.5 * width;
                });
  }

  std::size_t dot(Vec2 center, double radius, Rgb color) {
    return fill({center.x - radius, center.x + radius, center.y - radius, center.y + radius},
                color, [&](Vec2 p) { return std::hypot(p.x - center.x, p.y - center.y) <= radius; });
  }

  void segment(Vec2 from, Vec2 to, double half_thickness, Rgb color) {
    const double pad = half_thickness;
    const Box box{std::min(from.x, to.x) - pad, std::max(from.x, to.x) + pad,
                  std::min(from.y, to.y) - pad, std::max(from.y, to.y) + pad};
    const double vx = to.x - from.x;
    const double vy = to.y - from.y;
    const double len2 = vx * vx + vy * vy;
    fill(box, color, [&](Vec2 p) {
      double u = len2 > 0 ? ((p.x - from.x) * vx + (p.y - from.y) * vy) / len2 : 0.0;
      u = std::clamp(u, 0.0, 1.0);
      return std::hypot(p.x - (from.x + u * vx), p.y - (from.y + u * vy)) <= half_thickness;
    });
  }

  void arrow(Vec2 from, Vec2 velocity, double seconds, Rgb color) {
    const Vec2 tip{from.x + velocity.x * seconds, from.y + velocity.y * seconds};
    const double len = std::hypot(tip.x - from.x, tip.y - from.y);
    const double half = 0.75 / tf_.pixels_per_meter;
    segment(from, tip, half, color);
    const double head = std::min(1.5, 0.35 * len);
    const double dir = std::atan2(velocity.y, velocity.x);
    for (double side : {-1.0, 1.0}) {
      const double a = dir + std::numbers::pi + side * 0.45;
      segment(tip, {tip.x + head * std::cos(a), tip.y + head * std::sin(a)}, half, color);
    }
  }

 private:
  RgbImage& image_;
  const BevTransform& tf_;
};

bool finite(const ObjectAnnotation& a) {
  return std::isfinite(a.center.x) && std::isfinite(a.center.y) && std::isfinite(a.size.length) &&
         std::isfinite(a.size.width) && std::isfinite(a.size.height) &&
         std::isfinite(a.velocity.x) && std::isfinite(a.velocity.y);
}

double body_radius(const ObjectAnnotation& a, const BevConfig& cfg) {
  switch (a.object_class) {
    case ObjectClass::Vehicle: return 0.5 * std::hypot(a.size.length, a.size.width);
    case ObjectClass::Pedestrian: return cfg.pedestrian_radius;
    case ObjectClass::StaticObstacle: return cfg.static_radius;
  }
  return 0.0;
}

// Dots never shrink below one and a half pixels so they stay visible.
double dot_radius(double meters, const BevConfig& cfg) {
  return std::max(meters, 1.5 / cfg.pixels_per_meter);
}

}  // namespace

BevRender render_bev(const std::vector<ObjectAnnotation>& annotations, const BevConfig& cfg) {
  cfg.validate();
  BevRender out;
  out.transform = {cfg.pixels_per_meter, cfg.ahead, cfg.left};
  out.image = RgbImage(cfg.width_px(), cfg.height_px(), bev_colors::kBackground);
  Painter paint(out.image, out.transform);

  std::vector<std::size_t> visible;
  for (std::size_t i = 0; i < annotations.size(); ++i) {
    const auto& a = annotations[i];
    if (!finite(a) || a.size.length <= 0 || a.size.width <= 0 || a.size.height <= 0) {
      ++out.skipped;
      continue;
    }
    const double r = body_radius(a, cfg);
    if (a.center.x - r > cfg.ahead || a.center.x + r < -cfg.behind || a.center.y - r > cfg.left ||
        a.center.y + r < -cfg.right) {
      ++out.omitted;
      continue;
    }
    visible.push_back(i);
  }

  // Arrows go down first so object bodies stay whole on top of them.
  for (std::size_t i : visible) {
    const auto& a = annotations[i];
    if (!a.is_moving() || a.object_class == ObjectClass::StaticObstacle) continue;
    paint.arrow(a.center, a.velocity, cfg.arrow_seconds,
                a.object_class == ObjectClass::Vehicle ? bev_colors::kVehicleArrow
                                                       : bev_colors::kPedestrianArrow);
  }

  for (ObjectClass pass : {ObjectClass::StaticObstacle, ObjectClass::Pedestrian, ObjectClass::Vehicle}) {
    for (std::size_t i : visible) {
      const auto& a = annotations[i];
      if (a.object_class != pass) continue;
      BevGlyph g;
      g.annotation_index = i;
      g.center = a.center;
      switch (a.object_class) {
        case ObjectClass::Vehicle:
          g.kind = GlyphKind::Vehicle;
          g.has_arrow = a.is_moving();
          g.body_pixels = paint.rect(a.center, a.size.length, a.size.width, a.yaw(),
                                     bev_colors::kVehicle);
          break;
        case ObjectClass::Pedestrian:
          g.kind = GlyphKind::Pedestrian;
          g.has_arrow = a.is_moving();
          g.body_pixels = paint.dot(a.center, dot_radius(cfg.pedestrian_radius, cfg),
                                    bev_colors::kPedestrian);
          break;
        case ObjectClass::StaticObstacle:
          g.kind = GlyphKind::StaticObstacle;
          g.body_pixels =
              paint.dot(a.center, dot_radius(cfg.static_radius, cfg), bev_colors::kStatic);
          break;
      }
      out.glyphs.push_back(g);
    }
  }

  BevGlyph ego;
  ego.kind = GlyphKind::Ego;
  ego.body_pixels = paint.rect({0.0, 0.0}, cfg.ego_length, cfg.ego_width, 0.0, bev_colors::kEgo);
  out.glyphs.push_back(ego);
  return out;
}

}  // namespace rad
