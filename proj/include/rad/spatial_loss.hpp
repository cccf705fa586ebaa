#pragma once

#include <array>
#include <span>
#include <string_view>
#include <vector>

namespace rad {

/// One fine-tuning sample for the spatial-perception objective. The lambda
/// flags switch the class, size and distance terms on or off.
struct SpatialSample {
  int lambda_class = 0;
  int lambda_size = 0;
  int lambda_distance = 0;
  std::vector<double> y;  // one-hot over n classes
  std::vector<double> p;  // predicted distribution over n classes
  std::array<double, 3> z{};       // predicted size
  std::array<double, 3> z_star{};  // ground-truth size
  double x = 0.0;                  // predicted distance
  double x_star = 0.0;             // ground-truth distance

  /// Throws InvalidProbability for a bad p, InvalidArgument otherwise.
  void validate() const;
};

inline constexpr double kProbabilityClamp = 1e-12;

/// Per-sample bracket: cross-entropy + mean squared size error + squared
/// distance error, each gated by its flag. All three terms are penalties.
double sample_loss(const SpatialSample& sample);

/// Batch mean of sample_loss. Throws EmptyBatch on an empty batch.
double batch_loss(std::span<const SpatialSample> samples);

/// JSON Lines with keys lambda1, lambda2, lambda3, y, p, z, z_star, x, x_star.
std::vector<SpatialSample> parse_spatial_samples(std::string_view jsonl);

}  // namespace rad
