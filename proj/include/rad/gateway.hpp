#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "rad/util.hpp"

namespace rad {

enum class ImageKind { FrontView, Bev };

std::string_view image_kind_name(ImageKind k) noexcept;

struct TextPart {
  std::string text;
  friend bool operator==(const TextPart&, const TextPart&) = default;
};

struct ImagePart {
  Bytes data;
  friend bool operator==(const ImagePart&, const ImagePart&) = default;
};

using MessagePart = std::variant<TextPart, ImagePart>;

struct ChatRequest {
  std::string system;
  std::vector<MessagePart> messages;
  double temperature = 0.0;
  int max_tokens = 64;
  /// Contract probe: the service answers with the byte length of each image
  /// part in order instead of running the model.
  bool echo = false;

  friend bool operator==(const ChatRequest&, const ChatRequest&) = default;
};

/// Client-side view of the embedding service and the vision-language model.
class ModelGateway {
 public:
  virtual ~ModelGateway() = default;
  virtual std::vector<float> embed_image(std::span<const std::uint8_t> image, ImageKind kind) = 0;
  virtual std::string chat(const ChatRequest& request) = 0;
};

// Wire format shared by the HTTP client, the mocks and the model adapter.
//   POST /v1/embed  {"image": <base64>, "kind": "front_view"|"bev"}
//                -> {"vector": [..], "dim": n}
//   POST /v1/chat   {"system": s, "messages": [{"type": "text", "text": t} |
//                    {"type": "image", "image": <base64>}], "temperature": x,
//                    "max_tokens": n[, "echo": true]}
//                -> {"text": s}
std::string embed_request_json(std::span<const std::uint8_t> image, ImageKind kind);
struct EmbedRequest {
  Bytes image;
  ImageKind kind = ImageKind::FrontView;
};
EmbedRequest parse_embed_request(std::string_view body);
std::string embed_response_json(std::span<const float> vector);
std::string chat_response_json(std::string_view text);
std::vector<float> parse_embed_response(std::string_view body);
std::string chat_request_json(const ChatRequest& request);
ChatRequest parse_chat_request(std::string_view body);
std::string parse_chat_response(std::string_view body);
std::string echo_reply(const ChatRequest& request);

/// Expected-shape checks before any request goes out.
void check_embed_input(std::span<const std::uint8_t> image);
void check_chat_input(const ChatRequest& request);

struct MockGatewayConfig {
  std::size_t dim_fv = 256;
  std::size_t dim_bev = 256;
  /// Fraction of calls that fail with a Transport error.
  double failure_rate = 0.0;
  std::uint64_t seed = 0;
  /// Replies keyed by chat_fingerprint(); successive calls walk the list and
  /// then repeat its last entry.
  std::map<std::string, std::vector<std::string>> script;
  /// Used when the fingerprint is not scripted. Without one, unscripted chats
  /// fail with BadResponse.
  std::function<std::string(const ChatRequest&)> fallback;
};

/// Stable hash over the image parts of a chat request, in order.
std::string chat_fingerprint(const ChatRequest& request);

/// Seeded unit vector keyed by the image bytes and kind.
std::vector<float> mock_embedding(std::span<const std::uint8_t> image, ImageKind kind,
                                  std::size_t dim);

/// Deterministic offline stand-in for both services.
class MockGateway final : public ModelGateway {
 public:
  explicit MockGateway(MockGatewayConfig cfg = {});

  std::vector<float> embed_image(std::span<const std::uint8_t> image, ImageKind kind) override;
  std::string chat(const ChatRequest& request) override;

  std::size_t embed_calls() const noexcept { return embed_calls_; }
  std::size_t chat_calls() const noexcept { return chat_calls_; }
  std::vector<ChatRequest> chat_log() const;

 private:
  void maybe_fail();

  MockGatewayConfig cfg_;
  std::atomic<std::size_t> embed_calls_{0};
  std::atomic<std::size_t> chat_calls_{0};
  mutable std::mutex mu_;
  Rng failure_rng_;
  std::map<std::string, std::size_t> script_pos_;
  std::vector<ChatRequest> log_;
};

struct GatewayPolicy {
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{200};
  double backoff_factor = 2.0;
  std::size_t max_in_flight = 8;
};

/// Retries transient Transport failures with exponential backoff, bounds the
/// number of in-flight calls, validates embeddings and detects dimension
/// drift per image kind.
class GuardedGateway final : public ModelGateway {
 public:
  GuardedGateway(std::shared_ptr<ModelGateway> inner, GatewayPolicy policy = {});

  std::vector<float> embed_image(std::span<const std::uint8_t> image, ImageKind kind) override;
  std::string chat(const ChatRequest& request) override;

  std::size_t attempts() const noexcept { return attempts_; }
  std::size_t retries() const noexcept { return retries_; }

 private:
  template <typename Fn>
  auto with_retries(Fn&& fn) -> decltype(fn());

  std::shared_ptr<ModelGateway> inner_;
  GatewayPolicy policy_;
  std::counting_semaphore<> in_flight_;
  std::atomic<std::size_t> attempts_{0};
  std::atomic<std::size_t> retries_{0};
  std::mutex dims_mu_;
  std::map<ImageKind, std::size_t> dims_;
};

}  // namespace rad
