#include "rad/config.hpp"

#include <cstdlib>
#include <sstream>

#include "rad/error.hpp"
#include "rad/util.hpp"

namespace rad {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value) {
  throw Error(ErrorCode::InvalidArgument,
              "config key '" + std::string(key) + "' has bad value '" + std::string(value) + "'");
}

double to_double(std::string_view key, std::string_view value) {
  const std::string s(value);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    bad_value(key, value);
  }
  if (used != s.size()) bad_value(key, value);
  return v;
}

long long to_int(std::string_view key, std::string_view value) {
  const std::string s(value);
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &used);
  } catch (const std::exception&) {
    bad_value(key, value);
  }
  if (used != s.size()) bad_value(key, value);
  return v;
}

std::size_t to_size(std::string_view key, std::string_view value) {
  const long long v = to_int(key, value);
  if (v < 0) bad_value(key, value);
  return static_cast<std::size_t>(v);
}

bool to_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  bad_value(key, value);
}

}  // namespace

void EngineConfig::validate() const {
  if (!(omega >= 0.0 && omega <= 1.0)) {
    throw Error(ErrorCode::OmegaOutOfRange, "omega must lie in [0, 1]");
  }
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be at least 1");
  weights.validate();
  if (metric_classes < kNumMetaActions) {
    throw Error(ErrorCode::InvalidArgument, "metric_classes must be at least 16");
  }
  labeling.validate();
  bev.validate();
  if (parallelism == 0 || retrieval_threads == 0) {
    throw Error(ErrorCode::InvalidArgument, "parallelism and retrieval_threads must be >= 1");
  }
  if (timeout_seconds <= 0) throw Error(ErrorCode::InvalidArgument, "timeout_seconds must be > 0");
  if (max_retries < 0 || backoff_ms < 0) {
    throw Error(ErrorCode::InvalidArgument, "max_retries and backoff_ms must be >= 0");
  }
  if (!(temperature >= 0.0)) throw Error(ErrorCode::InvalidArgument, "temperature must be >= 0");
  if (max_tokens <= 0) throw Error(ErrorCode::InvalidArgument, "max_tokens must be > 0");
  if (mock_dim == 0) throw Error(ErrorCode::InvalidArgument, "mock_dim must be > 0");
}

void EngineConfig::set(std::string_view key, std::string_view value) {
  const std::map<std::string_view, double*> doubles = {
      {"omega", &omega},
      {"temperature", &temperature},
      {"labeling.window", &labeling.window},
      {"labeling.stop_disp", &labeling.stop_disp},
      {"labeling.turn_heading", &labeling.turn_heading},
      {"labeling.curve_heading", &labeling.curve_heading},
      {"labeling.lane_shift", &labeling.lane_shift},
      {"labeling.slight_shift", &labeling.slight_shift},
      {"labeling.accel_ratio", &labeling.accel_ratio},
      {"labeling.rapid_ratio", &labeling.rapid_ratio},
      {"labeling.decel_ratio", &labeling.decel_ratio},
      {"labeling.rapid_decel_ratio", &labeling.rapid_decel_ratio},
      {"labeling.slow_speed", &labeling.slow_speed},
      {"bev.ahead", &bev.ahead},
      {"bev.behind", &bev.behind},
      {"bev.left", &bev.left},
      {"bev.right", &bev.right},
      {"bev.pixels_per_meter", &bev.pixels_per_meter},
      {"bev.ego_length", &bev.ego_length},
      {"bev.ego_width", &bev.ego_width},
      {"bev.pedestrian_radius", &bev.pedestrian_radius},
      {"bev.static_radius", &bev.static_radius},
      {"bev.arrow_seconds", &bev.arrow_seconds},
  };
  const std::map<std::string_view, std::size_t*> sizes = {
      {"k", &k},
      {"metric_classes", &metric_classes},
      {"parallelism", &parallelism},
      {"retrieval_threads", &retrieval_threads},
      {"mock_dim", &mock_dim},
      {"vqa_max_pairs", &vqa_max_pairs},
  };
  const std::map<std::string_view, int*> ints = {
      {"timeout_seconds", &timeout_seconds},
      {"max_retries", &max_retries},
      {"backoff_ms", &backoff_ms},
      {"max_tokens", &max_tokens},
  };

  if (auto it = doubles.find(key); it != doubles.end()) {
    *it->second = to_double(key, value);
  } else if (auto it = sizes.find(key); it != sizes.end()) {
    *it->second = to_size(key, value);
  } else if (auto it = ints.find(key); it != ints.end()) {
    *it->second = static_cast<int>(to_int(key, value));
  } else if (key == "embed_endpoint") {
    embed_endpoint = value;
  } else if (key == "chat_endpoint") {
    chat_endpoint = value;
  } else if (key == "api_key") {
    api_key = value;
  } else if (key == "weights") {
    weights = ScoreWeights::parse(value);
  } else if (key == "include_surround") {
    include_surround = to_bool(key, value);
  } else if (key == "seed") {
    const long long v = to_int(key, value);
    if (v < 0) bad_value(key, value);
    seed = static_cast<std::uint64_t>(v);
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown config key '" + std::string(key) + "'");
  }
}

std::map<std::string, std::string> parse_config_text(std::string_view text) {
  std::map<std::string, std::string> out;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::ParseError,
                  "config line " + std::to_string(line_no) + " is not key=value");
    }
    const std::string key(trim(line.substr(0, eq)));
    if (key.empty()) {
      throw Error(ErrorCode::ParseError, "config line " + std::to_string(line_no) + " has no key");
    }
    out[key] = std::string(trim(line.substr(eq + 1)));
  }
  return out;
}

std::optional<std::string> process_env(const char* name) {
  if (const char* v = std::getenv(name); v && *v) return std::string(v);
  return std::nullopt;
}

EngineConfig load_engine_config(const std::optional<std::filesystem::path>& file,
                                const EnvLookup& env) {
  EngineConfig cfg;
  if (file) {
    for (const auto& [key, value] : parse_config_text(read_text_file(*file))) cfg.set(key, value);
  }
  if (auto v = env("RAD_EMBED_ENDPOINT")) cfg.embed_endpoint = *v;
  if (auto v = env("RAD_CHAT_ENDPOINT")) cfg.chat_endpoint = *v;
  if (auto v = env("RAD_API_KEY")) cfg.api_key = *v;
  return cfg;
}

}  // namespace rad
