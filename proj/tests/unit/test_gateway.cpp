#include <doctest.h>

#include <cmath>
#include <set>
#include <thread>

#include "mock_server.hpp"
#include "oracles.hpp"
#include "rad/error.hpp"
#include "rad/gateway.hpp"
#include "rad/http_gateway.hpp"

using namespace rad;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected rad::Error");
  return ErrorCode::IoError;
}

Bytes bytes_of(std::string_view s) { return Bytes(s.begin(), s.end()); }

GatewayPolicy fast_policy() {
  GatewayPolicy p;
  p.initial_backoff = std::chrono::milliseconds(1);
  return p;
}

ChatRequest two_image_request() {
  ChatRequest r;
  r.system = "sys";
  r.messages = {TextPart{"look"}, ImagePart{bytes_of("front")}, TextPart{"and"},
                ImagePart{bytes_of("bev!")}};
  return r;
}

MockGatewayConfig with_fallback(MockGatewayConfig cfg = {}) {
  cfg.fallback = [](const ChatRequest&) { return std::string("Stop."); };
  return cfg;
}

}  // namespace

TEST_CASE("mock embeddings are deterministic unit vectors") {
  const Bytes img = bytes_of("some image");
  const auto a = mock_embedding(img, ImageKind::FrontView, 64);
  const auto b = mock_embedding(img, ImageKind::FrontView, 64);
  CHECK(a == b);
  REQUIRE(a.size() == 64);
  double n = 0;
  for (float x : a) n += double(x) * x;
  CHECK(std::sqrt(n) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(mock_embedding(img, ImageKind::Bev, 64) != a);
}

TEST_CASE("distinct images embed to distinct directions") {
  std::vector<std::vector<float>> vs;
  for (int i = 0; i < 1000; ++i) {
    vs.push_back(mock_embedding(bytes_of("img-" + std::to_string(i)), ImageKind::FrontView, 32));
  }
  Rng rng(3);
  for (int t = 0; t < 5000; ++t) {
    const auto i = rng.below(1000), j = rng.below(1000);
    if (i == j) continue;
    CHECK(oracle::cosine(vs[i], vs[j]) < 1.0L - 1e-6L);
  }
}

TEST_CASE("scripted replies walk the list and then repeat") {
  const ChatRequest r = two_image_request();
  MockGatewayConfig cfg;
  cfg.script[chat_fingerprint(r)] = {"Turn left.", "Stop."};
  MockGateway g(cfg);
  CHECK(g.chat(r) == "Turn left.");
  CHECK(g.chat(r) == "Stop.");
  CHECK(g.chat(r) == "Stop.");
  ChatRequest other = r;
  other.messages[1] = ImagePart{bytes_of("other")};
  CHECK(code_of([&] { g.chat(other); }) == ErrorCode::BadResponse);
  CHECK(g.chat_log().size() == 4);
}

TEST_CASE("echo probe reports image sizes in order") {
  ChatRequest r = two_image_request();
  r.echo = true;
  MockGateway g;
  CHECK(g.chat(r) == "image_bytes=5,4");
}

TEST_CASE("input shape checks") {
  MockGateway g;
  ChatRequest r;
  CHECK(code_of([&] { g.chat(r); }) == ErrorCode::InvalidArgument);
  r.messages = {TextPart{"x"}};
  r.max_tokens = 0;
  CHECK(code_of([&] { g.chat(r); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([&] { g.embed_image({}, ImageKind::Bev); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("wire format round-trips") {
  const ChatRequest r = two_image_request();
  CHECK(parse_chat_request(chat_request_json(r)) == r);
  CHECK(parse_chat_response(chat_response_json("hi \"there\"")) == "hi \"there\"");
  const std::vector<float> v{0.25f, -1.5f, 3.0f};
  CHECK(parse_embed_response(embed_response_json(v)) == v);
  const auto e = parse_embed_request(embed_request_json(bytes_of("abc"), ImageKind::Bev));
  CHECK(e.image == bytes_of("abc"));
  CHECK(e.kind == ImageKind::Bev);
  CHECK(code_of([] { parse_embed_response(R"({"vector":[1,2],"dim":3})"); }) == ErrorCode::BadResponse);
  CHECK(code_of([] { parse_chat_response("not json"); }) == ErrorCode::BadResponse);
}

TEST_CASE("persistent transport failure surfaces after three retries") {
  MockGatewayConfig cfg;
  cfg.failure_rate = 1.0;
  auto inner = std::make_shared<MockGateway>(cfg);
  GuardedGateway g(inner, fast_policy());
  CHECK(code_of([&] { g.embed_image(bytes_of("x"), ImageKind::FrontView); }) == ErrorCode::Transport);
  CHECK(inner->embed_calls() == 4);
  CHECK(g.retries() == 3);
}

TEST_CASE("transient failures are absorbed") {
  MockGatewayConfig cfg = with_fallback();
  cfg.failure_rate = 0.3;
  cfg.seed = 17;
  auto inner = std::make_shared<MockGateway>(cfg);
  GuardedGateway g(inner, fast_policy());
  std::size_t ok = 0;
  for (int i = 0; i < 50; ++i) {
    try {
      g.chat(two_image_request());
      ++ok;
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::Transport);
    }
  }
  CHECK(ok >= 48);
  CHECK(g.retries() > 0);
}

namespace {

class DriftingGateway final : public ModelGateway {
 public:
  std::vector<float> embed_image(std::span<const std::uint8_t>, ImageKind) override {
    return std::vector<float>(++calls_ > 2 ? 9 : 8, 0.5f);
  }
  std::string chat(const ChatRequest&) override { return "ok"; }

 private:
  int calls_ = 0;
};

class CountingGateway final : public ModelGateway {
 public:
  std::vector<float> embed_image(std::span<const std::uint8_t>, ImageKind) override {
    const int now = ++active_;
    int seen = peak_.load();
    while (now > seen && !peak_.compare_exchange_weak(seen, now)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
    --active_;
    return {1.0f};
  }
  std::string chat(const ChatRequest&) override { return "ok"; }
  int peak() const { return peak_; }

 private:
  std::atomic<int> active_{0};
  std::atomic<int> peak_{0};
};

}  // namespace

TEST_CASE("dimension drift is detected per kind") {
  GuardedGateway g(std::make_shared<DriftingGateway>(), fast_policy());
  CHECK(g.embed_image(bytes_of("a"), ImageKind::FrontView).size() == 8);
  CHECK(g.embed_image(bytes_of("b"), ImageKind::FrontView).size() == 8);
  CHECK(code_of([&] { g.embed_image(bytes_of("c"), ImageKind::FrontView); }) == ErrorCode::DimDrift);
  // First BEV call fixes its own dimension.
  CHECK(g.embed_image(bytes_of("d"), ImageKind::Bev).size() == 9);
}

TEST_CASE("in-flight calls are bounded") {
  auto inner = std::make_shared<CountingGateway>();
  GatewayPolicy p = fast_policy();
  p.max_in_flight = 3;
  GuardedGateway g(inner, p);
  {
    std::vector<std::jthread> threads;
    for (int t = 0; t < 12; ++t) {
      threads.emplace_back([&] {
        for (int i = 0; i < 4; ++i) g.embed_image(bytes_of("x"), ImageKind::FrontView);
      });
    }
  }
  CHECK(inner->peak() <= 3);
  CHECK(inner->peak() >= 2);
}

TEST_CASE("HTTP client against the mock service") {
  testing::MockModelServer server(with_fallback({.dim_fv = 16, .dim_bev = 8}));
  auto log = std::make_shared<ExchangeLog>();
  auto http = std::make_shared<HttpGateway>(
      HttpGatewayConfig{server.base_url(), server.base_url(), std::chrono::seconds(5), "k"}, log);
  CHECK(http->healthy(server.base_url()));

  SUBCASE("embed and chat") {
    const auto v = http->embed_image(bytes_of("img"), ImageKind::FrontView);
    CHECK(v == mock_embedding(bytes_of("img"), ImageKind::FrontView, 16));
    CHECK(http->embed_image(bytes_of("img"), ImageKind::Bev).size() == 8);
    CHECK(http->chat(two_image_request()) == "Stop.");
    const auto entries = log->entries();
    REQUIRE(entries.size() == 3);
    CHECK(entries[0].path == "/v1/embed");
    CHECK(entries[0].request_body == embed_request_json(bytes_of("img"), ImageKind::FrontView));
    CHECK(entries[0].response_body == embed_response_json(v));
    CHECK(entries[2].path == "/v1/chat");
    CHECK(entries[2].request_body == chat_request_json(two_image_request()));
    CHECK(entries[2].response_body == chat_response_json("Stop."));
    CHECK(entries[2].status == 200);
  }
  SUBCASE("5xx is retried by the guard") {
    GuardedGateway g(http, fast_policy());
    server.fail_next(2, 503);
    CHECK(g.chat(two_image_request()) == "Stop.");
    CHECK(g.retries() == 2);
    server.fail_next(10, 500);
    CHECK(code_of([&] { g.chat(two_image_request()); }) == ErrorCode::Transport);
  }
  SUBCASE("413 maps to ContextTooLarge and is not retried") {
    GuardedGateway g(http, fast_policy());
    server.set_body_limit(10);
    const auto before = server.requests();
    CHECK(code_of([&] { g.chat(two_image_request()); }) == ErrorCode::ContextTooLarge);
    CHECK(server.requests() == before + 1);
  }
  SUBCASE("other client errors are bad responses") {
    server.fail_next(1, 400);
    CHECK(code_of([&] { http->chat(two_image_request()); }) == ErrorCode::BadResponse);
    server.fail_next(1, 200, "{\"nope\":1}");
    CHECK(code_of([&] { http->chat(two_image_request()); }) == ErrorCode::BadResponse);
  }
  SUBCASE("drift over HTTP") {
    GuardedGateway g(http, fast_policy());
    server.drift_after(1);
    g.embed_image(bytes_of("a"), ImageKind::FrontView);
    CHECK(code_of([&] { g.embed_image(bytes_of("b"), ImageKind::FrontView); }) == ErrorCode::DimDrift);
  }
  SUBCASE("contract checks pass against a conforming service") {
    const auto checks = run_contract_checks(*http, 20);
    REQUIRE(checks.size() >= 4);
    for (const auto& c : checks) {
      CAPTURE(c.name);
      CAPTURE(c.detail);
      CHECK(c.passed);
    }
  }
  SUBCASE("contract checks catch drift") {
    server.drift_after(5);
    bool caught = false;
    for (const auto& c : run_contract_checks(*http, 20)) caught |= !c.passed;
    CHECK(caught);
  }
}

TEST_CASE("unreachable service is a transport error") {
  HttpGateway http({"http://127.0.0.1:1", "http://127.0.0.1:1", std::chrono::seconds(1), ""});
  CHECK(code_of([&] { http.embed_image(bytes_of("x"), ImageKind::Bev); }) == ErrorCode::Transport);
  CHECK_FALSE(http.healthy("http://127.0.0.1:1"));
}
