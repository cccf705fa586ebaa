#include <doctest.h>

#include <map>

#include "rad/decision.hpp"
#include "rad/error.hpp"
#include "synthetic.hpp"

using namespace rad;

namespace {

Bytes bytes_of(std::string_view s) { return Bytes(s.begin(), s.end()); }

// Small in-memory world: images by reference, scenes, and a store built
// with mock embeddings of those images.
struct World {
  std::map<std::string, Bytes> files;
  std::vector<SceneRecord> scenes;
  EmbeddingStore store;
  SceneIndex index;

  ImageLoader loader() const {
    return [this](std::string_view ref) {
      const auto it = files.find(std::string(ref));
      if (it == files.end()) throw Error(ErrorCode::MissingImage, "no image " + std::string(ref));
      return it->second;
    };
  }

  SceneRecord& add(const std::string& id, const std::string& look, std::optional<MetaAction> gt) {
    SceneRecord s;
    s.scene_id = id;
    s.front_image = look + ".png";
    s.bev_image = look + "_bev.png";
    files[s.front_image] = bytes_of("front pixels of " + look);
    files[*s.bev_image] = bytes_of("bev pixels of " + look);
    s.gt_action = gt;
    scenes.push_back(std::move(s));
    return scenes.back();
  }

  void build_store(const std::vector<std::string>& ids) {
    store = EmbeddingStore(16, 16);
    for (const auto& s : scenes) {
      if (std::find(ids.begin(), ids.end(), s.scene_id) == ids.end()) continue;
      store.put(s.scene_id, mock_embedding(files.at(s.front_image), ImageKind::FrontView, 16),
                mock_embedding(files.at(*s.bev_image), ImageKind::Bev, 16));
    }
    store.seal();
    index = index_scenes(scenes);
  }
};

MockGatewayConfig replying(std::string text) {
  MockGatewayConfig cfg;
  cfg.dim_fv = cfg.dim_bev = 16;
  cfg.fallback = [text](const ChatRequest&) { return text; };
  return cfg;
}

DecisionConfig quiet() {
  DecisionConfig c;
  c.measure_latency = false;
  return c;
}

World basic_world() {
  World w;
  w.scenes.reserve(8);
  w.add("db-stop", "crossing", MetaAction::Stop);
  w.add("db-left", "junction", MetaAction::TurnLeft);
  w.add("q1", "crossing", std::nullopt).nav_hint = "turn left ahead";
  w.build_store({"db-stop", "db-left"});
  return w;
}

const SceneRecord& by_id(const World& w, const std::string& id) { return *w.index.at(id); }

}  // namespace

TEST_CASE("a clean reply is parsed on the first attempt") {
  World w = basic_world();
  MockGateway g(replying("Turn left."));
  const auto t = decide(by_id(w, "q1"), w.store, w.index, g, w.loader(), quiet());
  CHECK_FALSE(t.error.has_value());
  CHECK(t.parsed_action == MetaAction::TurnLeft);
  CHECK(t.raw_model_text == "Turn left.");
  CHECK(t.attempts == 1);
  CHECK(t.latency_ms == 0.0);
}

TEST_CASE("identical images retrieve themselves with similarity one") {
  World w = basic_world();
  MockGateway g(replying("Stop."));
  const auto t = decide(by_id(w, "q1"), w.store, w.index, g, w.loader(), quiet());
  CHECK(t.retrieved_id == "db-stop");
  CHECK(std::abs(t.sim_overall - 1.0) <= 1e-9);
  CHECK(std::abs(t.sim_fv - 1.0) <= 1e-9);
  CHECK(std::abs(t.sim_bev - 1.0) <= 1e-9);
}

TEST_CASE("an unparseable reply gets one clarified retry") {
  World w = basic_world();
  MockGateway g(replying("I would fly"));
  const auto t = decide(by_id(w, "q1"), w.store, w.index, g, w.loader(), quiet());
  CHECK_FALSE(t.error.has_value());
  CHECK_FALSE(t.parsed_action.has_value());
  CHECK(t.attempts == 2);
  const auto log = g.chat_log();
  REQUIRE(log.size() == 2);
  CHECK(log[1].messages.size() == log[0].messages.size() + 1);
  const auto& last = std::get<TextPart>(log[1].messages.back()).text;
  CHECK(last.find("did not name exactly one action") != std::string::npos);
}

TEST_CASE("the retry can recover") {
  World w = basic_world();
  MockGatewayConfig cfg = replying("");
  cfg.fallback = [n = 0](const ChatRequest&) mutable {
    return std::string(n++ == 0 ? "Turn left, or maybe stop." : "Stop.");
  };
  MockGateway g(cfg);
  const auto t = decide(by_id(w, "q1"), w.store, w.index, g, w.loader(), quiet());
  CHECK(t.parsed_action == MetaAction::Stop);
  CHECK(t.attempts == 2);
}

TEST_CASE("the exemplar action reaches the model verbatim") {
  World w = basic_world();
  MockGateway g(replying("Stop."));
  decide(by_id(w, "q1"), w.store, w.index, g, w.loader(), quiet());
  const auto log = g.chat_log();
  REQUIRE(log.size() == 1);
  const ChatRequest& r = log[0];
  CHECK(r.system == PromptTemplates::builtin().system);
  // text, 2 query images, rag text, 2 retrieved images, instruction
  REQUIRE(r.messages.size() == 7);
  const int kinds[] = {0, 1, 1, 0, 1, 1, 0};
  for (std::size_t i = 0; i < 7; ++i) CHECK(static_cast<int>(r.messages[i].index()) == kinds[i]);
  const auto& query = std::get<TextPart>(r.messages[0]).text;
  CHECK(query.find("Navigation: turn left ahead") != std::string::npos);
  const auto& rag = std::get<TextPart>(r.messages[3]).text;
  CHECK(rag.find(std::string(kExemplarActionTag) + "stop") != std::string::npos);
  CHECK(rag.find("similarity 1.0000") != std::string::npos);
  CHECK(std::get<ImagePart>(r.messages[1]).data == w.files.at("crossing.png"));
  CHECK(std::get<ImagePart>(r.messages[2]).data == w.files.at("crossing_bev.png"));
  CHECK(std::get<ImagePart>(r.messages[4]).data == w.files.at("crossing.png"));
  const auto& instruction = std::get<TextPart>(r.messages[6]).text;
  for (MetaAction a : kAllMetaActions) {
    CHECK(instruction.find(std::string(canonical_phrase(a))) != std::string::npos);
  }
  CHECK(exemplar_echo_reply(r) == "Stop.");
}

TEST_CASE("prompt bundles are byte-identical across builds") {
  World w = basic_world();
  const RetrievalHit hit{"db-left", 0.25, 0.75, 0.5, 1};
  const auto a = build_prompts(by_id(w, "q1"), hit, by_id(w, "db-left"), w.loader());
  const auto b = build_prompts(by_id(w, "q1"), hit, by_id(w, "db-left"), w.loader());
  CHECK(a == b);
  CHECK(a.template_version == "1");
  CHECK(a.rag_context.find("Exemplar meta-action: turn left") != std::string::npos);
  CHECK(a.rag_context.find("similarity 0.5000") != std::string::npos);
  CHECK(a.rag_context.find("{{") == std::string::npos);
  CHECK(a.query_text.find("{{") == std::string::npos);
  CHECK(a.instruction.find("{{") == std::string::npos);
  CHECK(a.query_images.size() == 2);
  CHECK(a.retrieved_images.size() == 2);
  const ChatRequest r1 = to_chat_request(a, PromptTemplates::builtin(), false, 0.0, 32);
  const ChatRequest r2 = to_chat_request(b, PromptTemplates::builtin(), false, 0.0, 32);
  CHECK(chat_request_json(r1) == chat_request_json(r2));
  CHECK(r1.max_tokens == 32);
}

TEST_CASE("surround views are included on request") {
  World w = basic_world();
  SceneRecord q = by_id(w, "q1");
  for (int i = 0; i < 6; ++i) {
    q.surround_images.push_back("cam" + std::to_string(i) + ".png");
    w.files[q.surround_images.back()] = bytes_of("cam " + std::to_string(i));
  }
  const RetrievalHit hit{"db-left", 0, 0, 0, 1};
  const auto plain = build_prompts(q, hit, by_id(w, "db-left"), w.loader());
  const auto with = build_prompts(q, hit, by_id(w, "db-left"), w.loader(),
                                  PromptTemplates::builtin(), {.include_surround = true});
  CHECK(plain.query_images.size() == 2);
  REQUIRE(with.query_images.size() == 8);
  CHECK(with.query_images[7] == bytes_of("cam 5"));
}

TEST_CASE("unlabeled exemplars and missing renders are reported") {
  World w;
  w.scenes.reserve(4);
  w.add("db-x", "street", std::nullopt);
  w.add("q", "street", std::nullopt);
  w.build_store({"db-x"});
  const RetrievalHit hit{"db-x", 1, 1, 1, 1};
  CHECK_THROWS_WITH_AS(build_prompts(by_id(w, "q"), hit, by_id(w, "db-x"), w.loader()),
                       doctest::Contains("ground-truth action"), Error);
  MockGateway g(replying("Stop."));
  const auto t = decide(by_id(w, "q"), w.store, w.index, g, w.loader(), quiet());
  REQUIRE(t.error.has_value());
  CHECK(t.error->rfind("MissingGtAction: ", 0) == 0);
  CHECK(g.chat_calls() == 0);

  SceneRecord unrendered = by_id(w, "q");
  unrendered.bev_image.reset();
  const auto u = decide(unrendered, w.store, w.index, g, w.loader(), quiet());
  REQUIRE(u.error.has_value());
  CHECK(u.error->rfind("MissingImage: ", 0) == 0);
}

TEST_CASE("gateway failures land on the trace") {
  World w = basic_world();
  MockGatewayConfig cfg = replying("Stop.");
  cfg.failure_rate = 1.0;
  GatewayPolicy p;
  p.initial_backoff = std::chrono::milliseconds(1);
  GuardedGateway g(std::make_shared<MockGateway>(cfg), p);
  const auto t = decide(by_id(w, "q1"), w.store, w.index, g, w.loader(), quiet());
  REQUIRE(t.error.has_value());
  CHECK(t.error->rfind("Transport: ", 0) == 0);
  CHECK_FALSE(t.parsed_action.has_value());
}

TEST_CASE("batch decisions keep query order and match sequential runs") {
  World w;
  w.scenes.reserve(64);
  std::vector<std::string> db;
  for (int i = 0; i < 16; ++i) {
    const std::string id = "db-" + std::to_string(i);
    w.add(id, "look-" + std::to_string(i), kAllMetaActions[i]);
    db.push_back(id);
  }
  for (int i = 0; i < 40; ++i) w.add("q-" + std::to_string(i), "look-" + std::to_string((i * 7) % 16), std::nullopt);
  w.build_store(db);
  std::vector<const SceneRecord*> queries;
  for (const auto& s : w.scenes) {
    if (s.scene_id.rfind("q-", 0) == 0) queries.push_back(&s);
  }
  MockGatewayConfig cfg;
  cfg.dim_fv = cfg.dim_bev = 16;
  cfg.fallback = exemplar_echo_reply;
  MockGateway g(cfg);
  DecisionConfig dc = quiet();
  dc.parallelism = 6;
  const auto batch = decide_batch(queries, w.store, w.index, g, w.loader(), dc);
  REQUIRE(batch.size() == queries.size());
  for (std::size_t i = 0; i < queries.size(); ++i) {
    CHECK(batch[i].scene_id == queries[i]->scene_id);
    const auto single = decide(*queries[i], w.store, w.index, g, w.loader(), dc);
    CHECK(single == batch[i]);
    // Each query shares its images with exactly one labeled scene.
    CHECK(batch[i].parsed_action == kAllMetaActions[(i * 7) % 16]);
  }
}

TEST_CASE("traces round-trip through JSON Lines") {
  DecisionTrace a;
  a.scene_id = "s1";
  a.retrieved_id = "d1";
  a.sim_fv = 0.123456789;
  a.sim_bev = -0.5;
  a.sim_overall = 0.3;
  a.raw_model_text = "Slow down \"now\".\n";
  a.parsed_action = MetaAction::SlowDown;
  a.attempts = 1;
  a.latency_ms = 12.5;
  DecisionTrace b;
  b.scene_id = "s2";
  b.attempts = 2;
  b.error = "Transport: timed out";
  const std::string text = trace_to_json_line(a) + "\n" + trace_to_json_line(b) + "\n";
  const auto back = parse_traces(text);
  REQUIRE(back.size() == 2);
  CHECK(back[0] == a);
  CHECK(back[1] == b);
  CHECK(trace_to_json_line(b).find("\"parse_failure\":true") != std::string::npos);
  CHECK_THROWS_AS(trace_from_json_line("{\"scene_id\":\"x\",\"parsed_action\":\"fly\"}"), Error);
}

TEST_CASE("exemplar echo without a tag") {
  ChatRequest r;
  r.messages = {TextPart{"nothing here"}};
  CHECK(exemplar_echo_reply(r) == "I am not sure.");
}

TEST_CASE("templates on disk match the built-in set") {
  const auto disk = PromptTemplates::load(RAD_DATA_DIR "/templates");
  const auto& mem = PromptTemplates::builtin();
  CHECK(disk.version == mem.version);
  CHECK(disk.system == mem.system);
  CHECK(disk.query == mem.query);
  CHECK(disk.rag_context == mem.rag_context);
  CHECK(disk.instruction == mem.instruction);
  CHECK(disk.clarification == mem.clarification);
}
