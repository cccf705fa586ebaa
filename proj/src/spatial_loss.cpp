#include "rad/spatial_loss.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include <json.hpp>

#include "rad/error.hpp"

namespace rad {

void SpatialSample::validate() const {
  for (int flag : {lambda_class, lambda_size, lambda_distance}) {
    if (flag != 0 && flag != 1) throw Error(ErrorCode::InvalidArgument, "lambda flags must be 0 or 1");
  }
  if (y.size() != p.size() || y.empty()) {
    throw Error(ErrorCode::InvalidArgument, "y and p must be non-empty and the same length");
  }
  int ones = 0;
  for (double v : y) {
    if (v == 1.0) {
      ++ones;
    } else if (v != 0.0) {
      throw Error(ErrorCode::InvalidArgument, "y must be one-hot");
    }
  }
  if (ones != 1) throw Error(ErrorCode::InvalidArgument, "y must be one-hot");
  double sum = 0.0;
  for (double v : p) {
    if (!std::isfinite(v) || v < 0.0) {
      throw Error(ErrorCode::InvalidProbability, "p components must be finite and >= 0");
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-6) {
    throw Error(ErrorCode::InvalidProbability, "p must sum to 1");
  }
  for (double v : z) if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "z not finite");
  for (double v : z_star) if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "z_star not finite");
  if (!std::isfinite(x) || !std::isfinite(x_star)) {
    throw Error(ErrorCode::InvalidArgument, "distances must be finite");
  }
}

double sample_loss(const SpatialSample& s) {
  double loss = 0.0;
  if (s.lambda_class) {
    double ce = 0.0;
    for (std::size_t c = 0; c < s.y.size(); ++c) {
      if (s.y[c] != 0.0) ce -= s.y[c] * std::log(std::max(s.p[c], kProbabilityClamp));
    }
    loss += ce;
  }
  if (s.lambda_size) {
    double se = 0.0;
    for (std::size_t j = 0; j < 3; ++j) se += (s.z[j] - s.z_star[j]) * (s.z[j] - s.z_star[j]);
    loss += se / 3.0;
  }
  if (s.lambda_distance) loss += (s.x - s.x_star) * (s.x - s.x_star);
  return loss;
}

double batch_loss(std::span<const SpatialSample> samples) {
  if (samples.empty()) throw Error(ErrorCode::EmptyBatch, "loss over an empty batch");
  double total = 0.0;
  for (const auto& s : samples) {
    s.validate();
    total += sample_loss(s);
  }
  return total / static_cast<double>(samples.size());
}

std::vector<SpatialSample> parse_spatial_samples(std::string_view jsonl) {
  std::vector<SpatialSample> out;
  std::istringstream in{std::string(jsonl)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      SpatialSample s;
      s.lambda_class = j.at("lambda1").get<int>();
      s.lambda_size = j.at("lambda2").get<int>();
      s.lambda_distance = j.at("lambda3").get<int>();
      s.y = j.at("y").get<std::vector<double>>();
      s.p = j.at("p").get<std::vector<double>>();
      s.z = j.at("z").get<std::array<double, 3>>();
      s.z_star = j.at("z_star").get<std::array<double, 3>>();
      s.x = j.at("x").get<double>();
      s.x_star = j.at("x_star").get<double>();
      out.push_back(std::move(s));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::ParseError,
                  "samples line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace rad
