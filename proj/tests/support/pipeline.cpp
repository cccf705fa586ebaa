#include "pipeline.hpp"

#include <sstream>

#include "rad/cli.hpp"
#include "rad/util.hpp"
#include "synthetic.hpp"

namespace rad::testing {

int run_cli(const std::vector<std::string>& args, std::string& out, std::string& err) {
  std::ostringstream o, e;
  const int status = rad::run(args, o, e);
  out = o.str();
  err = e.str();
  return status;
}

PipelineRun run_mock_pipeline(const std::filesystem::path& dir, std::uint64_t seed) {
  PipelineRun r;
  r.dir = dir;
  r.manifest = write_synthetic_corpus(dir, 50, seed);
  r.traces = dir / "traces.jsonl";
  const std::string m = r.manifest.string();
  const std::string seed_arg = std::to_string(seed);
  const std::vector<std::vector<std::string>> steps = {
      {"ingest", "--manifest", m, "--split", "10,28,12", "--seed", seed_arg},
      {"label", "--manifest", m},
      {"render-bev", "--manifest", m},
      {"embed", "--mock", "--manifest", m, "--out", (dir / "db.radstore").string()},
      {"decide", "--mock", "--manifest", m, "--store", (dir / "db.radstore").string(), "--out",
       r.traces.string()},
      {"evaluate", "--manifest", m, "--traces", r.traces.string(), "--out",
       (dir / "report.json").string()},
  };
  for (const auto& step : steps) {
    std::string out, err;
    const int status = run_cli(step, out, err);
    r.log += "$ rad " + step.front() + "\n" + out + err;
    if (status != 0) return r;
  }
  r.report_json = read_text_file(dir / "report.json");
  r.ok = true;
  return r;
}

}  // namespace rad::testing
