#pragma once

#include <chrono>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "rad/gateway.hpp"

namespace rad {

struct HttpGatewayConfig {
  std::string embed_endpoint;  // base URL, e.g. http://127.0.0.1:8000
  std::string chat_endpoint;
  std::chrono::seconds timeout{60};
  std::string api_key;  // sent as a bearer token when set
};

struct Exchange {
  std::string path;
  std::string request_body;
  std::string response_body;
  int status = 0;
};

/// Append-only record of raw HTTP bodies, byte-exact.
class ExchangeLog {
 public:
  void record(Exchange e);
  std::vector<Exchange> entries() const;

 private:
  mutable std::mutex mu_;
  std::vector<Exchange> entries_;
};

/// One POST per call. Connection failures and 5xx map to Transport, 413 or
/// a context_too_large error body to ContextTooLarge, other failures to
/// BadResponse. Retries belong to GuardedGateway.
class HttpGateway final : public ModelGateway {
 public:
  explicit HttpGateway(HttpGatewayConfig cfg, std::shared_ptr<ExchangeLog> log = nullptr);

  std::vector<float> embed_image(std::span<const std::uint8_t> image, ImageKind kind) override;
  std::string chat(const ChatRequest& request) override;

  /// GET /healthz on a base URL; true on HTTP 200.
  bool healthy(const std::string& base_url) const;

 private:
  std::string post(const std::string& base_url, const std::string& path, const std::string& body);

  HttpGatewayConfig cfg_;
  std::shared_ptr<ExchangeLog> log_;
};

/// Result of probing a live model service against the wire contract.
struct ContractCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Embed schema and dim stability over `calls` requests per kind, chat
/// schema, and ordered multi-image echo.
std::vector<ContractCheck> run_contract_checks(ModelGateway& gateway, std::size_t calls = 100);

}  // namespace rad
