#include "mock_server.hpp"

#include <httplib.h>
#include <json.hpp>

#include "rad/error.hpp"

namespace rad::testing {

MockModelServer::MockModelServer(MockGatewayConfig cfg)
    : backend_(std::move(cfg)), server_(std::make_unique<httplib::Server>()) {
  // Returns true when the request was answered by an injected fault.
  auto inject = [this](const httplib::Request& req, httplib::Response& res) {
    ++requests_;
    std::lock_guard lock(mu_);
    if (fail_count_ > 0) {
      --fail_count_;
      res.status = fail_status_;
      res.set_content(fail_body_, "application/json");
      return true;
    }
    if (body_limit_ > 0 && req.body.size() > body_limit_) {
      res.status = 413;
      res.set_content(R"({"error":"context_too_large"})", "application/json");
      return true;
    }
    return false;
  };
  auto reject = [](httplib::Response& res, const std::exception& e) {
    res.status = 400;
    res.set_content(nlohmann::json{{"error", e.what()}}.dump(), "application/json");
  };

  server_->Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"status":"ok"})", "application/json");
  });
  server_->Post("/v1/embed", [=, this](const httplib::Request& req, httplib::Response& res) {
    if (inject(req, res)) return;
    try {
      const EmbedRequest in = parse_embed_request(req.body);
      std::vector<float> v = backend_.embed_image(in.image, in.kind);
      {
        std::lock_guard lock(mu_);
        ++embeds_served_;
        if (drift_after_ > 0 && embeds_served_ > drift_after_) v.push_back(0.5f);
      }
      res.set_content(embed_response_json(v), "application/json");
    } catch (const std::exception& e) {
      reject(res, e);
    }
  });
  server_->Post("/v1/chat", [=, this](const httplib::Request& req, httplib::Response& res) {
    if (inject(req, res)) return;
    try {
      res.set_content(chat_response_json(backend_.chat(parse_chat_request(req.body))),
                      "application/json");
    } catch (const std::exception& e) {
      reject(res, e);
    }
  });

  port_ = server_->bind_to_any_port("127.0.0.1");
  if (port_ <= 0) throw Error(ErrorCode::IoError, "mock server could not bind a port");
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

MockModelServer::~MockModelServer() {
  server_->stop();
  if (thread_.joinable()) thread_.join();
}

std::string MockModelServer::base_url() const {
  return "http://127.0.0.1:" + std::to_string(port_);
}

void MockModelServer::fail_next(int count, int status, std::string body) {
  std::lock_guard lock(mu_);
  fail_count_ = count;
  fail_status_ = status;
  fail_body_ = std::move(body);
}

void MockModelServer::set_body_limit(std::size_t bytes) {
  std::lock_guard lock(mu_);
  body_limit_ = bytes;
}

void MockModelServer::drift_after(std::size_t embed_calls) {
  std::lock_guard lock(mu_);
  drift_after_ = embed_calls;
}

}  // namespace rad::testing
