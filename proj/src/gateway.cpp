#include "rad/gateway.hpp"

#include <cmath>
#include <thread>

#include <json.hpp>

#include "rad/error.hpp"

namespace rad {

using nlohmann::json;

std::string_view image_kind_name(ImageKind k) noexcept {
  return k == ImageKind::FrontView ? "front_view" : "bev";
}

namespace {

ImageKind parse_kind(const json& j) {
  const auto s = j.get<std::string>();
  if (s == "front_view") return ImageKind::FrontView;
  if (s == "bev") return ImageKind::Bev;
  throw Error(ErrorCode::BadResponse, "unknown image kind '" + s + "'");
}

json parse_body(std::string_view body) {
  try {
    return json::parse(body);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::BadResponse, std::string("response is not JSON: ") + e.what());
  }
}

}  // namespace

void check_embed_input(std::span<const std::uint8_t> image) {
  if (image.empty()) throw Error(ErrorCode::InvalidArgument, "embed_image needs image bytes");
}

void check_chat_input(const ChatRequest& request) {
  if (request.messages.empty()) {
    throw Error(ErrorCode::InvalidArgument, "chat needs at least one message part");
  }
  if (!(request.temperature >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "temperature must be >= 0");
  }
  if (request.max_tokens <= 0) throw Error(ErrorCode::InvalidArgument, "max_tokens must be > 0");
}

std::string embed_request_json(std::span<const std::uint8_t> image, ImageKind kind) {
  json j;
  j["image"] = base64_encode(image);
  j["kind"] = image_kind_name(kind);
  return j.dump();
}

EmbedRequest parse_embed_request(std::string_view body) {
  const json j = parse_body(body);
  try {
    return {base64_decode(j.at("image").get<std::string>()), parse_kind(j.at("kind"))};
  } catch (const json::exception& e) {
    throw Error(ErrorCode::BadResponse, std::string("malformed embed request: ") + e.what());
  }
}

std::string embed_response_json(std::span<const float> vector) {
  json j;
  j["vector"] = std::vector<float>(vector.begin(), vector.end());
  j["dim"] = vector.size();
  return j.dump();
}

std::string chat_response_json(std::string_view text) {
  json j;
  j["text"] = text;
  return j.dump();
}

std::vector<float> parse_embed_response(std::string_view body) {
  const json j = parse_body(body);
  if (!j.is_object() || !j.contains("vector") || !j["vector"].is_array() || !j.contains("dim") ||
      !j["dim"].is_number_integer()) {
    throw Error(ErrorCode::BadResponse, "embed response needs {vector: [..], dim: n}");
  }
  std::vector<float> v;
  v.reserve(j["vector"].size());
  for (const auto& x : j["vector"]) {
    if (!x.is_number()) throw Error(ErrorCode::BadResponse, "embed vector has a non-number");
    const double d = x.get<double>();
    if (!std::isfinite(d)) throw Error(ErrorCode::BadResponse, "embed vector is not finite");
    v.push_back(static_cast<float>(d));
  }
  if (v.empty() || j["dim"].get<long long>() != static_cast<long long>(v.size())) {
    throw Error(ErrorCode::BadResponse, "embed response dim does not match vector length");
  }
  return v;
}

std::string chat_request_json(const ChatRequest& request) {
  json j;
  j["system"] = request.system;
  json parts = json::array();
  for (const auto& part : request.messages) {
    if (const auto* t = std::get_if<TextPart>(&part)) {
      parts.push_back({{"type", "text"}, {"text", t->text}});
    } else {
      parts.push_back({{"type", "image"}, {"image", base64_encode(std::get<ImagePart>(part).data)}});
    }
  }
  j["messages"] = std::move(parts);
  j["temperature"] = request.temperature;
  j["max_tokens"] = request.max_tokens;
  if (request.echo) j["echo"] = true;
  return j.dump();
}

ChatRequest parse_chat_request(std::string_view body) {
  const json j = parse_body(body);
  try {
    ChatRequest r;
    r.system = j.at("system").get<std::string>();
    for (const auto& part : j.at("messages")) {
      const auto type = part.at("type").get<std::string>();
      if (type == "text") {
        r.messages.emplace_back(TextPart{part.at("text").get<std::string>()});
      } else if (type == "image") {
        r.messages.emplace_back(ImagePart{base64_decode(part.at("image").get<std::string>())});
      } else {
        throw Error(ErrorCode::BadResponse, "unknown message part type '" + type + "'");
      }
    }
    r.temperature = j.value("temperature", 0.0);
    r.max_tokens = j.value("max_tokens", 64);
    r.echo = j.value("echo", false);
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::BadResponse, std::string("malformed chat request: ") + e.what());
  }
}

std::string parse_chat_response(std::string_view body) {
  const json j = parse_body(body);
  if (!j.is_object() || !j.contains("text") || !j["text"].is_string()) {
    throw Error(ErrorCode::BadResponse, "chat response needs {text: string}");
  }
  return j["text"].get<std::string>();
}

std::string echo_reply(const ChatRequest& request) {
  std::string out = "image_bytes=";
  bool first = true;
  for (const auto& part : request.messages) {
    if (const auto* img = std::get_if<ImagePart>(&part)) {
      if (!first) out += ',';
      out += std::to_string(img->data.size());
      first = false;
    }
  }
  return out;
}

std::string chat_fingerprint(const ChatRequest& request) {
  std::uint64_t h = fnv1a64(std::string_view{});
  for (const auto& part : request.messages) {
    if (const auto* img = std::get_if<ImagePart>(&part)) {
      h = fnv1a64(img->data, h);
      h = fnv1a64(std::string_view("|"), h);
    }
  }
  return hex64(h);
}

std::vector<float> mock_embedding(std::span<const std::uint8_t> image, ImageKind kind,
                                  std::size_t dim) {
  Rng rng(fnv1a64(image_kind_name(kind), fnv1a64(image)));
  std::vector<double> v(dim);
  double norm2 = 0.0;
  for (double& x : v) {
    x = rng.normal();
    norm2 += x * x;
  }
  const double inv = 1.0 / std::sqrt(norm2);
  std::vector<float> out(dim);
  for (std::size_t i = 0; i < dim; ++i) out[i] = static_cast<float>(v[i] * inv);
  return out;
}

MockGateway::MockGateway(MockGatewayConfig cfg) : cfg_(std::move(cfg)), failure_rng_(cfg_.seed) {}

void MockGateway::maybe_fail() {
  if (cfg_.failure_rate <= 0.0) return;
  std::lock_guard lock(mu_);
  if (failure_rng_.uniform() < cfg_.failure_rate) {
    throw Error(ErrorCode::Transport, "injected transport failure");
  }
}

std::vector<float> MockGateway::embed_image(std::span<const std::uint8_t> image, ImageKind kind) {
  check_embed_input(image);
  ++embed_calls_;
  maybe_fail();
  return mock_embedding(image, kind, kind == ImageKind::FrontView ? cfg_.dim_fv : cfg_.dim_bev);
}

std::string MockGateway::chat(const ChatRequest& request) {
  check_chat_input(request);
  ++chat_calls_;
  maybe_fail();
  std::lock_guard lock(mu_);
  log_.push_back(request);
  if (request.echo) return echo_reply(request);
  const std::string fp = chat_fingerprint(request);
  if (auto it = cfg_.script.find(fp); it != cfg_.script.end() && !it->second.empty()) {
    std::size_t& pos = script_pos_[fp];
    const std::string& reply = it->second[std::min(pos, it->second.size() - 1)];
    ++pos;
    return reply;
  }
  if (cfg_.fallback) return cfg_.fallback(request);
  throw Error(ErrorCode::BadResponse, "mock chat has no reply for fingerprint " + fp);
}

std::vector<ChatRequest> MockGateway::chat_log() const {
  std::lock_guard lock(mu_);
  return log_;
}

GuardedGateway::GuardedGateway(std::shared_ptr<ModelGateway> inner, GatewayPolicy policy)
    : inner_(std::move(inner)),
      policy_(policy),
      in_flight_(static_cast<std::ptrdiff_t>(std::max<std::size_t>(1, policy.max_in_flight))) {}

template <typename Fn>
auto GuardedGateway::with_retries(Fn&& fn) -> decltype(fn()) {
  in_flight_.acquire();
  struct Release {
    std::counting_semaphore<>& sem;
    ~Release() { sem.release(); }
  } release{in_flight_};

  auto backoff = policy_.initial_backoff;
  for (int attempt = 0;; ++attempt) {
    ++attempts_;
    try {
      return fn();
    } catch (const Error& e) {
      if (e.code() != ErrorCode::Transport || attempt >= policy_.max_retries) {
        if (e.code() == ErrorCode::Transport) {
          throw Error(ErrorCode::Transport, std::string(e.what()) + " (after " +
                                                std::to_string(attempt) + " retries)");
        }
        throw;
      }
    }
    ++retries_;
    std::this_thread::sleep_for(backoff);
    backoff = std::chrono::milliseconds(
        static_cast<long long>(static_cast<double>(backoff.count()) * policy_.backoff_factor));
  }
}

std::vector<float> GuardedGateway::embed_image(std::span<const std::uint8_t> image,
                                               ImageKind kind) {
  check_embed_input(image);
  std::vector<float> v = with_retries([&] { return inner_->embed_image(image, kind); });
  if (v.empty()) throw Error(ErrorCode::BadResponse, "empty embedding");
  for (float x : v) {
    if (!std::isfinite(x)) throw Error(ErrorCode::BadResponse, "non-finite embedding");
  }
  std::lock_guard lock(dims_mu_);
  auto [it, inserted] = dims_.emplace(kind, v.size());
  if (!inserted && it->second != v.size()) {
    throw Error(ErrorCode::DimDrift, std::string(image_kind_name(kind)) + " embedding dim changed from " +
                                         std::to_string(it->second) + " to " +
                                         std::to_string(v.size()));
  }
  return v;
}

std::string GuardedGateway::chat(const ChatRequest& request) {
  check_chat_input(request);
  return with_retries([&] { return inner_->chat(request); });
}

}  // namespace rad
