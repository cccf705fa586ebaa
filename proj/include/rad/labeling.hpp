#pragma once

#include <span>

#include "rad/scene.hpp"
#include "rad/taxonomy.hpp"

namespace rad {

/// Thresholds for trajectory labeling. Distances in meters, angles in
/// radians, ratios are end speed over start speed.
struct LabelingConfig {
  double window = 3.0;
  double stop_disp = 0.5;
  double turn_heading = 0.6;
  double curve_heading = 0.15;
  double lane_shift = 1.0;
  double slight_shift = 0.3;
  double accel_ratio = 1.15;
  double rapid_ratio = 1.4;
  double decel_ratio = 0.85;
  double rapid_decel_ratio = 0.6;
  double slow_speed = 2.0;

  /// Throws InvalidArgument when a threshold is non-positive or the ratio
  /// ordering rapid > accel > 1 > decel > rapid_decel is broken.
  void validate() const;
};

/// Motion summary over the labeling window, measured in the frame of the
/// first pose (x forward, y left).
struct TrajectoryFeatures {
  double max_displacement = 0.0;
  double longitudinal_motion = 0.0;
  double heading_change = 0.0;
  double lateral_offset = 0.0;
  double start_speed = 0.0;
  double end_speed = 0.0;
  double mean_speed = 0.0;
};

TrajectoryFeatures trajectory_features(std::span<const EgoPose> poses, const LabelingConfig& cfg);

/// Ordered rules: stop, reverse, turn around, turn, curve, lane change,
/// slight shift, speed change, then straight driving by mean speed.
/// Throws InsufficientPoses if fewer than two poses or the poses do not span
/// cfg.window seconds.
MetaAction extract_meta_action(std::span<const EgoPose> poses, const LabelingConfig& cfg = {});

}  // namespace rad
