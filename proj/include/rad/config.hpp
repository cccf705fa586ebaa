#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "rad/bev_raster.hpp"
#include "rad/evaluation.hpp"
#include "rad/labeling.hpp"

namespace rad {

/// Every tunable the subcommands read. Keys in the config file match the
/// field names; nested structs use a dotted prefix (labeling.window,
/// bev.ahead, weights = a,b,g,d).
struct EngineConfig {
  std::string embed_endpoint;
  std::string chat_endpoint;
  std::string api_key;
  double omega = 0.5;
  std::size_t k = 1;
  ScoreWeights weights;
  std::size_t metric_classes = kNumMetaActions;
  LabelingConfig labeling;
  BevConfig bev;
  std::size_t parallelism = 8;
  std::size_t retrieval_threads = 1;
  int timeout_seconds = 60;
  int max_retries = 3;
  int backoff_ms = 200;
  double temperature = 0.0;
  int max_tokens = 32;
  bool include_surround = false;
  std::size_t mock_dim = 256;
  std::size_t vqa_max_pairs = 12;
  std::uint64_t seed = 0;

  void validate() const;

  /// Applies one key=value setting. Throws InvalidArgument for unknown keys
  /// or unparsable values.
  void set(std::string_view key, std::string_view value);
};

/// Parses a flat key=value file. Blank lines and '#' comments are skipped.
std::map<std::string, std::string> parse_config_text(std::string_view text);

using EnvLookup = std::function<std::optional<std::string>(const char*)>;
std::optional<std::string> process_env(const char* name);

/// Defaults, then the file (if any), then RAD_EMBED_ENDPOINT,
/// RAD_CHAT_ENDPOINT and RAD_API_KEY. Command-line flags are applied by the
/// caller afterwards.
EngineConfig load_engine_config(const std::optional<std::filesystem::path>& file,
                                const EnvLookup& env = process_env);

}  // namespace rad
