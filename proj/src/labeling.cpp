#include "rad/labeling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "rad/error.hpp"

namespace rad {

namespace {

constexpr double kTimeSlack = 1e-9;
constexpr double kStandstill = 1e-6;

double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * std::numbers::pi);
  return a <= -std::numbers::pi ? a + 2.0 * std::numbers::pi : a;
}

}  // namespace

void LabelingConfig::validate() const {
  const double values[] = {window,      stop_disp,   turn_heading, curve_heading,
                           lane_shift,  slight_shift, accel_ratio, rapid_ratio,
                           decel_ratio, rapid_decel_ratio, slow_speed};
  for (double v : values) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw Error(ErrorCode::InvalidArgument, "labeling thresholds must be finite and > 0");
    }
  }
  if (!(rapid_ratio > accel_ratio && accel_ratio > 1.0 && 1.0 > decel_ratio &&
        decel_ratio > rapid_decel_ratio)) {
    throw Error(ErrorCode::InvalidArgument,
                "labeling ratios must satisfy rapid_ratio > accel_ratio > 1 > decel_ratio > "
                "rapid_decel_ratio");
  }
}

TrajectoryFeatures trajectory_features(std::span<const EgoPose> poses, const LabelingConfig& cfg) {
  if (poses.size() < 2) {
    throw Error(ErrorCode::InsufficientPoses, "labeling needs at least two poses");
  }
  const EgoPose& first = poses.front();
  if (poses.back().t - first.t < cfg.window - kTimeSlack) {
    throw Error(ErrorCode::InsufficientPoses, "poses do not cover the labeling window");
  }
  std::size_t end = 1;
  while (end + 1 < poses.size() && poses[end].t - first.t < cfg.window - kTimeSlack) ++end;
  const auto window = poses.first(end + 1);

  TrajectoryFeatures f;
  double speed_sum = 0.0;
  for (std::size_t i = 0; i < window.size(); ++i) {
    const EgoPose& p = window[i];
    f.max_displacement = std::max(f.max_displacement, std::hypot(p.x - first.x, p.y - first.y));
    speed_sum += p.speed;
    if (i + 1 < window.size()) {
      const EgoPose& q = window[i + 1];
      f.longitudinal_motion +=
          (q.x - p.x) * std::cos(p.heading) + (q.y - p.y) * std::sin(p.heading);
      f.heading_change += wrap_angle(q.heading - p.heading);
    }
  }
  const EgoPose& last = window.back();
  const double dx = last.x - first.x;
  const double dy = last.y - first.y;
  f.lateral_offset = -std::sin(first.heading) * dx + std::cos(first.heading) * dy;
  f.start_speed = first.speed;
  f.end_speed = last.speed;
  f.mean_speed = speed_sum / static_cast<double>(window.size());
  return f;
}

MetaAction extract_meta_action(std::span<const EgoPose> poses, const LabelingConfig& cfg) {
  const TrajectoryFeatures f = trajectory_features(poses, cfg);
  const double turn = std::abs(f.heading_change);
  const double lateral = std::abs(f.lateral_offset);
  const bool left = f.heading_change > 0.0;

  if (f.max_displacement < cfg.stop_disp) return MetaAction::Stop;
  if (f.longitudinal_motion < 0.0) return MetaAction::Reverse;
  if (turn >= std::numbers::pi - cfg.turn_heading) return MetaAction::TurnAround;
  if (turn >= cfg.turn_heading) return left ? MetaAction::TurnLeft : MetaAction::TurnRight;
  if (turn >= cfg.curve_heading) return MetaAction::DriveAlongCurve;
  if (lateral >= cfg.lane_shift) {
    return f.lateral_offset > 0.0 ? MetaAction::ChangeLaneLeft : MetaAction::ChangeLaneRight;
  }
  if (lateral >= cfg.slight_shift) {
    return f.lateral_offset > 0.0 ? MetaAction::ShiftSlightlyLeft
                                  : MetaAction::ShiftSlightlyRight;
  }

  double ratio = 1.0;
  if (f.start_speed > kStandstill) {
    ratio = f.end_speed / f.start_speed;
  } else if (f.end_speed > kStandstill) {
    ratio = std::numeric_limits<double>::infinity();
  }
  if (ratio >= cfg.rapid_ratio) return MetaAction::SpeedUpRapidly;
  if (ratio >= cfg.accel_ratio) return MetaAction::SpeedUp;
  if (ratio <= cfg.rapid_decel_ratio) return MetaAction::SlowDownRapidly;
  if (ratio <= cfg.decel_ratio) return MetaAction::SlowDown;

  return f.mean_speed < cfg.slow_speed ? MetaAction::GoStraightSlowly
                                       : MetaAction::GoStraightConstantly;
}

}  // namespace rad
