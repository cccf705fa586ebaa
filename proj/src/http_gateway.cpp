#include "rad/http_gateway.hpp"

#include <set>

#include <httplib.h>
#include <json.hpp>

#include "rad/error.hpp"

namespace rad {

void ExchangeLog::record(Exchange e) {
  std::lock_guard lock(mu_);
  entries_.push_back(std::move(e));
}

std::vector<Exchange> ExchangeLog::entries() const {
  std::lock_guard lock(mu_);
  return entries_;
}

namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // optional path prefix without trailing slash
};

SplitUrl split_url(const std::string& url) {
  if (url.empty()) throw Error(ErrorCode::InvalidArgument, "model endpoint URL is not set");
  const auto scheme = url.find("://");
  const auto path_at = url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  SplitUrl out;
  out.origin = url.substr(0, path_at);
  if (path_at != std::string::npos) out.prefix = url.substr(path_at);
  while (!out.prefix.empty() && out.prefix.back() == '/') out.prefix.pop_back();
  return out;
}

bool is_context_error(const std::string& body) {
  const auto j = nlohmann::json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("error")) return false;
  const auto& e = j["error"];
  if (e.is_string()) return e.get<std::string>() == "context_too_large";
  return e.is_object() && e.value("code", "") == "context_too_large";
}

}  // namespace

HttpGateway::HttpGateway(HttpGatewayConfig cfg, std::shared_ptr<ExchangeLog> log)
    : cfg_(std::move(cfg)), log_(std::move(log)) {}

std::string HttpGateway::post(const std::string& base_url, const std::string& path,
                              const std::string& body) {
  const SplitUrl url = split_url(base_url);
  httplib::Client client(url.origin);
  client.set_connection_timeout(cfg_.timeout);
  client.set_read_timeout(cfg_.timeout);
  client.set_write_timeout(cfg_.timeout);
  httplib::Headers headers;
  if (!cfg_.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg_.api_key);

  const std::string full_path = url.prefix + path;
  auto res = client.Post(full_path, headers, body, "application/json");
  if (!res) {
    if (log_) log_->record({full_path, body, "", 0});
    throw Error(ErrorCode::Transport,
                "POST " + base_url + path + " failed: " + httplib::to_string(res.error()));
  }
  if (log_) log_->record({full_path, body, res->body, res->status});
  if (res->status == 413 || (res->status >= 400 && is_context_error(res->body))) {
    throw Error(ErrorCode::ContextTooLarge, "service rejected the request as too large");
  }
  if (res->status >= 500) {
    throw Error(ErrorCode::Transport, "POST " + full_path + " returned HTTP " +
                                          std::to_string(res->status));
  }
  if (res->status != 200) {
    throw Error(ErrorCode::BadResponse, "POST " + full_path + " returned HTTP " +
                                            std::to_string(res->status) + ": " + res->body);
  }
  return res->body;
}

std::vector<float> HttpGateway::embed_image(std::span<const std::uint8_t> image, ImageKind kind) {
  check_embed_input(image);
  return parse_embed_response(post(cfg_.embed_endpoint, "/v1/embed", embed_request_json(image, kind)));
}

std::string HttpGateway::chat(const ChatRequest& request) {
  check_chat_input(request);
  return parse_chat_response(post(cfg_.chat_endpoint, "/v1/chat", chat_request_json(request)));
}

bool HttpGateway::healthy(const std::string& base_url) const {
  const SplitUrl url = split_url(base_url);
  httplib::Client client(url.origin);
  client.set_connection_timeout(cfg_.timeout);
  client.set_read_timeout(cfg_.timeout);
  auto res = client.Get(url.prefix + "/healthz");
  return res && res->status == 200;
}

std::vector<ContractCheck> run_contract_checks(ModelGateway& gateway, std::size_t calls) {
  std::vector<ContractCheck> checks;
  auto run = [&](std::string name, auto&& body) {
    ContractCheck c{std::move(name), false, ""};
    try {
      c.detail = body();
      c.passed = true;
    } catch (const std::exception& e) {
      c.detail = e.what();
    }
    checks.push_back(std::move(c));
  };

  for (ImageKind kind : {ImageKind::FrontView, ImageKind::Bev}) {
    run("embed_dim_stable_" + std::string(image_kind_name(kind)), [&] {
      std::set<std::size_t> dims;
      for (std::size_t i = 0; i < calls; ++i) {
        Bytes probe(16 + i, static_cast<std::uint8_t>(i * 31 + 7));
        dims.insert(gateway.embed_image(probe, kind).size());
      }
      if (dims.size() != 1) {
        throw Error(ErrorCode::DimDrift, "embedding dim varied across " + std::to_string(calls) +
                                             " calls");
      }
      return "dim " + std::to_string(*dims.begin()) + " over " + std::to_string(calls) + " calls";
    });
  }

  run("chat_schema", [&] {
    ChatRequest r;
    r.system = "Answer with one word.";
    r.messages.emplace_back(TextPart{"Say ok."});
    r.max_tokens = 8;
    return "text: " + gateway.chat(r);
  });

  run("chat_image_order", [&] {
    ChatRequest r;
    r.system = "contract probe";
    r.echo = true;
    r.messages.emplace_back(TextPart{"images follow"});
    for (std::size_t n : {11u, 3u, 29u, 7u}) r.messages.emplace_back(ImagePart{Bytes(n, 0x5a)});
    const std::string expected = "image_bytes=11,3,29,7";
    const std::string got = gateway.chat(r);
    if (got != expected) {
      throw Error(ErrorCode::BadResponse, "echo returned '" + got + "', expected '" + expected + "'");
    }
    return got;
  });
  return checks;
}

}  // namespace rad
