#include <doctest.h>

#include <cstdlib>

#include <json.hpp>

#include "oracles.hpp"
#include "pipeline.hpp"
#include "rad/config.hpp"
#include "rad/decision.hpp"
#include "rad/embed_store.hpp"
#include "rad/error.hpp"
#include "rad/scene.hpp"
#include "rad/util.hpp"
#include "synthetic.hpp"

using namespace rad;
using rad::testing::run_cli;

namespace {

std::optional<std::string> no_env(const char*) { return std::nullopt; }

}  // namespace

TEST_CASE("config file parsing") {
  const auto kv = parse_config_text("# comment\nomega = 0.3\n\nk=4\nlabeling.window=2.5\n");
  CHECK(kv.size() == 3);
  CHECK(kv.at("omega") == "0.3");
  CHECK_THROWS_AS(parse_config_text("just words\n"), Error);
}

TEST_CASE("config precedence: defaults, file, environment, flags") {
  const auto dir = testing::fresh_temp_dir("cfg");
  write_text_file(dir / "rad.conf",
                  "omega=0.25\nchat_endpoint=http://file:1\nembed_endpoint=http://file:2\n"
                  "bev.ahead=40\nweights=0.25,0.25,0.25,0.25\n");
  const EngineConfig defaults = load_engine_config(std::nullopt, no_env);
  CHECK(defaults.omega == 0.5);
  CHECK(defaults.k == 1);
  CHECK(defaults.max_tokens == 32);

  const EngineConfig from_file = load_engine_config(dir / "rad.conf", no_env);
  CHECK(from_file.omega == 0.25);
  CHECK(from_file.bev.ahead == 40.0);
  CHECK(from_file.chat_endpoint == "http://file:1");
  CHECK(from_file.weights.alpha == 0.25);

  const EngineConfig with_env = load_engine_config(dir / "rad.conf", [](const char* name) {
    return std::string(name) == "RAD_CHAT_ENDPOINT" ? std::optional<std::string>("http://env:3")
                                                    : std::nullopt;
  });
  CHECK(with_env.chat_endpoint == "http://env:3");
  CHECK(with_env.embed_endpoint == "http://file:2");

  EngineConfig c = with_env;
  CHECK_THROWS_AS(c.set("nonsense", "1"), Error);
  CHECK_THROWS_AS(c.set("omega", "abc"), Error);
  c.set("omega", "1.5");
  CHECK_THROWS_AS(c.validate(), Error);
  std::filesystem::remove_all(dir);
}

TEST_CASE("CLI exit codes") {
  std::string out, err;
  CHECK(run_cli({"frobnicate"}, out, err) == 2);
  CHECK(err.find("UsageError") != std::string::npos);
  CHECK(run_cli({}, out, err) == 2);
  CHECK(run_cli({"--help"}, out, err) == 0);
  CHECK(out.find("evaluate") != std::string::npos);
  CHECK(run_cli({"evaluate", "--traces", "/nonexistent", "--manifest", "/nonexistent"}, out, err) == 1);
  CHECK(err.rfind("error: IoError: ", 0) == 0);
  CHECK(run_cli({"--omega", "3", "loss-check", "--samples", "/nonexistent"}, out, err) == 1);
}

TEST_CASE("evaluate on a perfect fixture prints overall 1.0") {
  const auto dir = testing::fresh_temp_dir("cli-eval");
  std::vector<SceneRecord> scenes;
  std::string traces;
  for (MetaAction a : kAllMetaActions) {
    SceneRecord s;
    s.scene_id = std::string(label_name(a));
    s.front_image = "x.png";
    s.gt_action = a;
    scenes.push_back(s);
    DecisionTrace t;
    t.scene_id = s.scene_id;
    t.parsed_action = a;
    t.attempts = 1;
    traces += trace_to_json_line(t) + "\n";
  }
  write_file(dir / "x.png", Bytes{1});
  write_manifest(dir / "m.jsonl", scenes);
  write_text_file(dir / "t.jsonl", traces);
  std::string out, err;
  REQUIRE(run_cli({"evaluate", "--traces", (dir / "t.jsonl").string(), "--manifest",
                   (dir / "m.jsonl").string(), "--csv", (dir / "r.csv").string(), "--name", "perfect"},
                  out, err) == 0);
  const auto j = nlohmann::json::parse(out);
  CHECK(j["overall_score"] == 1.0);
  CHECK(j["macro_f1"] == 1.0);
  CHECK(read_text_file(dir / "r.csv").find("\nperfect,16,16,0,16,1.000000,") != std::string::npos);
  std::filesystem::remove_all(dir);
}

TEST_CASE("loss-check prints J to six decimals") {
  const auto dir = testing::fresh_temp_dir("cli-loss");
  write_text_file(dir / "s.jsonl",
                  R"({"lambda1":1,"lambda2":0,"lambda3":0,"y":[1,0],"p":[0.5,0.5],"z":[0,0,0],"z_star":[0,0,0],"x":0,"x_star":0})"
                  "\n");
  std::string out, err;
  REQUIRE(run_cli({"loss-check", "--samples", (dir / "s.jsonl").string()}, out, err) == 0);
  CHECK(out == "0.693147\n");
  std::filesystem::remove_all(dir);
}

TEST_CASE("end-to-end mock pipeline reproduces the golden report") {
  const auto dir = testing::fresh_temp_dir("e2e");
  const auto run = testing::run_mock_pipeline(dir);
  INFO(run.log);
  REQUIRE(run.ok);

  const auto manifest = load_manifest(run.manifest);
  std::size_t labeled = 0, rendered = 0, tests = 0, db = 0;
  for (const auto& s : manifest) {
    labeled += s.gt_action.has_value();
    rendered += s.bev_image.has_value() && std::filesystem::exists(resolve_image(dir, *s.bev_image));
    tests += s.split == Split::Test;
    db += s.split == Split::Database;
  }
  CHECK(labeled == 50);
  CHECK(rendered == 50);
  CHECK(tests == 12);
  CHECK(EmbeddingStore::open(dir / "db.radstore").size() == db);

  // The report agrees with the oracle recomputed from the traces.
  const auto traces = parse_traces(read_text_file(run.traces));
  CHECK(traces.size() == 12);
  const auto pairs = join_traces(traces, manifest);
  const auto m = oracle::metrics(pairs);
  const auto j = nlohmann::json::parse(run.report_json);
  auto r6 = [](double v) { return std::round(v * 1e6) / 1e6; };
  CHECK(j["n_total"] == m.n_total);
  CHECK(j["n_match"] == m.n_match);
  CHECK(j["exact_match_accuracy"].get<double>() == r6(m.ema));
  CHECK(j["macro_f1"].get<double>() == r6(m.macro));
  CHECK(j["weighted_f1"].get<double>() == r6(m.weighted));
  CHECK(j["partial_match_score"].get<double>() == r6(m.pms));
  CHECK(j["overall_score"].get<double>() == r6(m.overall));
  // Not a degenerate run: some right, some wrong.
  CHECK(m.n_match > 0);
  CHECK(m.n_match < m.n_total);

  const std::filesystem::path golden = RAD_GOLDEN_DIR "/e2e_report.json";
  if (std::getenv("RAD_UPDATE_GOLDEN")) write_text_file(golden, run.report_json);
  REQUIRE(std::filesystem::exists(golden));
  CHECK(run.report_json == read_text_file(golden));

  // Same inputs, same bytes.
  const auto dir2 = testing::fresh_temp_dir("e2e");
  const auto again = testing::run_mock_pipeline(dir2);
  REQUIRE(again.ok);
  CHECK(again.report_json == run.report_json);
  CHECK(read_text_file(again.traces) == read_text_file(run.traces));
  std::filesystem::remove_all(dir);
  std::filesystem::remove_all(dir2);
}

TEST_CASE("retrieve prints ranked hits") {
  const auto dir = testing::fresh_temp_dir("cli-retrieve");
  const auto run = testing::run_mock_pipeline(dir);
  REQUIRE(run.ok);
  const auto manifest = load_manifest(run.manifest);
  std::string db_id;
  for (const auto& s : manifest) {
    if (s.split == Split::Database) {
      db_id = s.scene_id;
      break;
    }
  }
  std::string out, err;
  REQUIRE(run_cli({"retrieve", "--mock", "--k", "3", "--manifest", run.manifest.string(), "--store",
                   (dir / "db.radstore").string(), "--scene", db_id},
                  out, err) == 0);
  const auto hits = nlohmann::json::parse(out);
  REQUIRE(hits.size() == 3);
  CHECK(hits[0]["scene_id"] == db_id);
  CHECK(std::abs(hits[0]["sim_overall"].get<double>() - 1.0) < 1e-9);

  REQUIRE(run_cli({"gen-vqa", "--manifest", run.manifest.string(), "--out",
                   (dir / "vqa.jsonl").string()},
                  out, err) == 0);
  const auto vqa = read_text_file(dir / "vqa.jsonl");
  CHECK(std::count(vqa.begin(), vqa.end(), '\n') > 50);

  REQUIRE(run_cli({"report", (dir / "report.json").string()}, out, err) == 0);
  CHECK(out.rfind("run,", 0) == 0);
  std::filesystem::remove_all(dir);
}

TEST_CASE("contract-test against the offline gateway") {
  std::string out, err;
  CHECK(run_cli({"contract-test", "--mock", "--calls", "10"}, out, err) == 0);
  CHECK(out.find("FAIL") == std::string::npos);
}
