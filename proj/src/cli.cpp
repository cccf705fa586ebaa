#include "rad/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>

#include <CLI11.hpp>
#include <json.hpp>

#include "rad/bev_raster.hpp"
#include "rad/config.hpp"
#include "rad/decision.hpp"
#include "rad/embed_store.hpp"
#include "rad/error.hpp"
#include "rad/evaluation.hpp"
#include "rad/gateway.hpp"
#include "rad/http_gateway.hpp"
#include "rad/image.hpp"
#include "rad/labeling.hpp"
#include "rad/retrieval.hpp"
#include "rad/scene.hpp"
#include "rad/spatial_loss.hpp"
#include "rad/util.hpp"
#include "rad/vqa.hpp"

namespace fs = std::filesystem;

namespace rad {

namespace {

struct GlobalFlags {
  std::optional<std::string> config_file;
  bool mock = false;
  std::optional<double> omega;
  std::optional<std::size_t> k;
  std::optional<std::string> weights;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> parallelism;
  std::vector<std::string> overrides;  // key=value
};

EngineConfig resolve_config(const GlobalFlags& flags) {
  EngineConfig cfg = load_engine_config(
      flags.config_file ? std::optional<fs::path>(*flags.config_file) : std::nullopt);
  for (const auto& kv : flags.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::InvalidArgument, "--set expects key=value, got '" + kv + "'");
    }
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (flags.omega) cfg.omega = *flags.omega;
  if (flags.k) cfg.k = *flags.k;
  if (flags.weights) cfg.weights = ScoreWeights::parse(*flags.weights);
  if (flags.seed) cfg.seed = *flags.seed;
  if (flags.parallelism) cfg.parallelism = *flags.parallelism;
  cfg.validate();
  return cfg;
}

std::shared_ptr<ModelGateway> make_gateway(const EngineConfig& cfg, bool mock) {
  std::shared_ptr<ModelGateway> inner;
  if (mock) {
    MockGatewayConfig m;
    m.dim_fv = cfg.mock_dim;
    m.dim_bev = cfg.mock_dim;
    m.seed = cfg.seed;
    m.fallback = exemplar_echo_reply;
    inner = std::make_shared<MockGateway>(std::move(m));
  } else {
    HttpGatewayConfig h;
    h.embed_endpoint = cfg.embed_endpoint;
    h.chat_endpoint = cfg.chat_endpoint;
    h.timeout = std::chrono::seconds(cfg.timeout_seconds);
    h.api_key = cfg.api_key;
    inner = std::make_shared<HttpGateway>(std::move(h));
  }
  GatewayPolicy policy;
  policy.max_retries = cfg.max_retries;
  policy.initial_backoff = std::chrono::milliseconds(cfg.backoff_ms);
  policy.max_in_flight = cfg.parallelism;
  return std::make_shared<GuardedGateway>(std::move(inner), policy);
}

fs::path manifest_dir(const fs::path& manifest) {
  return fs::absolute(manifest).parent_path();
}

std::string rebase_ref(const std::string& ref, const fs::path& from, const fs::path& to) {
  const fs::path p(ref);
  if (p.is_absolute() || from == to) return ref;
  return (from / p).lexically_normal().lexically_relative(to).generic_string();
}

void rebase_scene(SceneRecord& s, const fs::path& from, const fs::path& to) {
  s.front_image = rebase_ref(s.front_image, from, to);
  for (auto& img : s.surround_images) img = rebase_ref(img, from, to);
  if (s.bev_image) s.bev_image = rebase_ref(*s.bev_image, from, to);
}

void write_manifest_rebased(const fs::path& in, const fs::path& out,
                            std::vector<SceneRecord> scenes) {
  const fs::path from = manifest_dir(in);
  const fs::path to = manifest_dir(out);
  for (auto& s : scenes) rebase_scene(s, from, to);
  write_manifest(out, scenes);
}

std::string file_safe(std::string_view id) {
  std::string out;
  for (char c : id) {
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
    out += ok ? c : '_';
  }
  return out;
}

std::optional<Split> parse_split_filter(const std::string& name) {
  if (name == "all") return std::nullopt;
  if (auto s = split_from_name(name)) return s;
  throw Error(ErrorCode::InvalidArgument,
              "split must be finetune, database, test or all, got '" + name + "'");
}

std::vector<const SceneRecord*> select_split(const std::vector<SceneRecord>& scenes,
                                             std::optional<Split> split) {
  std::vector<const SceneRecord*> out;
  for (const auto& s : scenes) {
    if (!split || s.split == split) out.push_back(&s);
  }
  return out;
}

SplitCounts parse_split_counts(const std::string& text) {
  std::vector<std::size_t> v;
  std::size_t start = 0;
  while (true) {
    const auto comma = text.find(',', start);
    const std::string item = text.substr(start, comma == std::string::npos ? comma : comma - start);
    if (item.empty() || item.find_first_not_of("0123456789") != std::string::npos) {
      throw Error(ErrorCode::InvalidArgument, "split counts must be n_finetune,n_database,n_test");
    }
    v.push_back(static_cast<std::size_t>(std::stoull(item)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (v.size() != 3) {
    throw Error(ErrorCode::InvalidArgument, "split counts must be n_finetune,n_database,n_test");
  }
  return {v[0], v[1], v[2]};
}

// ---- subcommands ----

struct IngestArgs {
  std::string manifest, out, split;
};

int cmd_ingest(const IngestArgs& a, const EngineConfig& cfg, std::ostream& out) {
  auto scenes = load_manifest(a.manifest);
  if (!a.split.empty()) assign_split(scenes, cfg.seed, parse_split_counts(a.split));
  const std::string dest = a.out.empty() ? a.manifest : a.out;
  const std::size_t n = scenes.size();
  write_manifest_rebased(a.manifest, dest, std::move(scenes));
  out << "ingested " << n << " scenes -> " << dest << "\n";
  return 0;
}

struct LabelArgs {
  std::string manifest, out;
};

int cmd_label(const LabelArgs& a, const EngineConfig& cfg, std::ostream& out) {
  auto scenes = load_manifest(a.manifest);
  std::map<MetaAction, std::size_t> tally;
  for (auto& s : scenes) {
    try {
      s.gt_action = extract_meta_action(s.ego_history, cfg.labeling);
    } catch (const Error& e) {
      throw Error(e.code(), "scene '" + s.scene_id + "': " + e.what());
    }
    ++tally[*s.gt_action];
  }
  const std::string dest = a.out.empty() ? a.manifest : a.out;
  write_manifest_rebased(a.manifest, dest, scenes);
  out << "labeled " << scenes.size() << " scenes\n";
  for (const auto& [action, n] : tally) out << "  " << label_name(action) << " " << n << "\n";
  return 0;
}

struct RenderArgs {
  std::string manifest, out, out_dir;
};

int cmd_render_bev(const RenderArgs& a, const EngineConfig& cfg, std::ostream& out) {
  auto scenes = load_manifest(a.manifest);
  const fs::path dest = a.out.empty() ? fs::path(a.manifest) : fs::path(a.out);
  const fs::path dir = a.out_dir.empty() ? manifest_dir(dest) / "bev" : fs::absolute(a.out_dir);
  fs::create_directories(dir);
  const fs::path from = manifest_dir(a.manifest);
  const fs::path to = manifest_dir(dest);
  std::set<std::string> names;
  std::size_t omitted = 0;
  for (auto& s : scenes) {
    rebase_scene(s, from, to);
    const std::string name = file_safe(s.scene_id) + "_bev.png";
    if (!names.insert(name).second) {
      throw Error(ErrorCode::DuplicateId, "scene ids collide on file name '" + name + "'");
    }
    const BevRender r = render_bev(s, cfg.bev);
    omitted += r.omitted;
    write_file(dir / name, encode_png(r.image));
    s.bev_image = (dir / name).lexically_relative(to).generic_string();
  }
  write_manifest(dest, scenes);
  out << "rendered " << scenes.size() << " BEV images (" << omitted
      << " objects outside the extent)\n";
  return 0;
}

struct VqaArgs {
  std::string manifest, out;
};

int cmd_gen_vqa(const VqaArgs& a, const EngineConfig& cfg, std::ostream& out) {
  const auto scenes = load_manifest(a.manifest);
  const std::string system = vqa_system_prompt(cfg.bev);
  VqaConfig vc;
  vc.max_pairs_per_scene = cfg.vqa_max_pairs;
  vc.seed = cfg.seed;
  std::string body;
  std::map<VqaTask, std::size_t> tally;
  for (const auto& s : scenes) {
    for (const auto& pair : gen_vqa_pairs(s, vc)) {
      body += vqa_export_line(pair, s, system) + "\n";
      ++tally[pair.task];
    }
  }
  write_text_file(a.out, body);
  std::size_t total = 0;
  for (const auto& [task, n] : tally) total += n;
  out << "wrote " << total << " VQA pairs\n";
  for (const auto& [task, n] : tally) out << "  " << vqa_task_name(task) << " " << n << "\n";
  return 0;
}

struct EmbedArgs {
  std::string manifest, out, split = "database";
};

int cmd_embed(const EmbedArgs& a, const EngineConfig& cfg, bool mock, std::ostream& out) {
  const auto scenes = load_manifest(a.manifest);
  const auto chosen = select_split(scenes, parse_split_filter(a.split));
  if (chosen.empty()) throw Error(ErrorCode::EmptyInput, "no scenes in split '" + a.split + "'");
  auto gateway = make_gateway(cfg, mock);
  const ImageLoader images = file_image_loader(manifest_dir(a.manifest));
  std::optional<EmbeddingStore> store;
  for (const SceneRecord* s : chosen) {
    if (!s->bev_image) {
      throw Error(ErrorCode::MissingImage, "scene '" + s->scene_id + "' has no BEV image");
    }
    const auto v_fv = gateway->embed_image(images(s->front_image), ImageKind::FrontView);
    const auto v_bev = gateway->embed_image(images(*s->bev_image), ImageKind::Bev);
    if (!store) store.emplace(v_fv.size(), v_bev.size());
    store->put(s->scene_id, v_fv, v_bev);
  }
  store->persist(a.out);
  out << "embedded " << store->size() << " scenes (d_fv=" << store->d_fv()
      << ", d_bev=" << store->d_bev() << ") -> " << a.out << "\n";
  return 0;
}

struct RetrieveArgs {
  std::string manifest, store, scene;
};

int cmd_retrieve(const RetrieveArgs& a, const EngineConfig& cfg, bool mock, std::ostream& out) {
  const auto scenes = load_manifest(a.manifest);
  const auto it = std::find_if(scenes.begin(), scenes.end(),
                               [&](const SceneRecord& s) { return s.scene_id == a.scene; });
  if (it == scenes.end()) throw Error(ErrorCode::NotFound, "scene '" + a.scene + "' not in manifest");
  if (!it->bev_image) {
    throw Error(ErrorCode::MissingImage, "scene '" + a.scene + "' has no BEV image");
  }
  const EmbeddingStore store = EmbeddingStore::open(a.store);
  auto gateway = make_gateway(cfg, mock);
  const ImageLoader images = file_image_loader(manifest_dir(a.manifest));
  const auto v_fv = gateway->embed_image(images(it->front_image), ImageKind::FrontView);
  const auto v_bev = gateway->embed_image(images(*it->bev_image), ImageKind::Bev);
  RetrievalConfig rc{cfg.omega, cfg.k, cfg.retrieval_threads};
  nlohmann::ordered_json hits = nlohmann::ordered_json::array();
  for (const auto& h : top_k({v_fv, v_bev}, store, rc)) {
    hits.push_back({{"rank", h.rank},
                    {"scene_id", h.scene_id},
                    {"sim_fv", h.sim_fv},
                    {"sim_bev", h.sim_bev},
                    {"sim_overall", h.sim_overall}});
  }
  out << hits.dump(2) << "\n";
  return 0;
}

struct DecideArgs {
  std::string manifest, store, out, split = "test", templates;
};

int cmd_decide(const DecideArgs& a, const EngineConfig& cfg, bool mock, std::ostream& out) {
  const auto scenes = load_manifest(a.manifest);
  const auto queries = select_split(scenes, parse_split_filter(a.split));
  if (queries.empty()) throw Error(ErrorCode::EmptyInput, "no scenes in split '" + a.split + "'");
  const EmbeddingStore store = EmbeddingStore::open(a.store);
  auto gateway = make_gateway(cfg, mock);
  const PromptTemplates templates =
      a.templates.empty() ? PromptTemplates::builtin() : PromptTemplates::load(a.templates);

  DecisionConfig dc;
  dc.retrieval = {cfg.omega, 1, cfg.retrieval_threads};
  dc.prompts.include_surround = cfg.include_surround;
  dc.temperature = cfg.temperature;
  dc.max_tokens = cfg.max_tokens;
  dc.measure_latency = !mock;
  dc.parallelism = cfg.parallelism;
  const auto traces = decide_batch(queries, store, index_scenes(scenes), *gateway,
                                   file_image_loader(manifest_dir(a.manifest)), dc, templates);
  std::string body;
  std::size_t failures = 0;
  std::size_t errors = 0;
  for (const auto& t : traces) {
    body += trace_to_json_line(t) + "\n";
    failures += t.parsed_action ? 0 : 1;
    errors += t.error ? 1 : 0;
  }
  write_text_file(a.out, body);
  out << "decided " << traces.size() << " scenes (" << failures << " parse failures, " << errors
      << " errors) -> " << a.out << "\n";
  return 0;
}

struct EvaluateArgs {
  std::string traces, manifest, out, csv, name = "run";
};

int cmd_evaluate(const EvaluateArgs& a, const EngineConfig& cfg, std::ostream& out) {
  const auto traces = parse_traces(read_text_file(a.traces));
  const auto scenes = load_manifest(a.manifest, {.check_images = false});
  const EvalReport report = evaluate(join_traces(traces, scenes), cfg.weights, cfg.metric_classes);
  const std::string json = report.to_json();
  if (!a.out.empty()) write_text_file(a.out, json);
  if (!a.csv.empty()) {
    write_text_file(a.csv, EvalReport::csv_header() + "\n" + report.csv_row(a.name) + "\n");
  }
  out << json;
  return 0;
}

struct LossArgs {
  std::string samples;
};

int cmd_loss_check(const LossArgs& a, std::ostream& out) {
  const auto samples = parse_spatial_samples(read_text_file(a.samples));
  out << format_fixed(batch_loss(samples), 6) << "\n";
  return 0;
}

struct ReportArgs {
  std::vector<std::string> reports;
};

int cmd_report(const ReportArgs& a, std::ostream& out) {
  out << EvalReport::csv_header() << "\n";
  for (const auto& path : a.reports) {
    const auto j = nlohmann::json::parse(read_text_file(path), nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      throw Error(ErrorCode::ParseError, "report '" + path + "' is not a JSON object");
    }
    try {
      EvalReport r;
      r.n_total = j.at("n_total").get<std::size_t>();
      r.n_match = j.at("n_match").get<std::size_t>();
      r.n_parse_failures = j.at("n_parse_failures").get<std::size_t>();
      r.k = j.at("K").get<std::size_t>();
      r.exact_match_accuracy = j.at("exact_match_accuracy").get<double>();
      r.macro_f1 = j.at("macro_f1").get<double>();
      r.weighted_f1 = j.at("weighted_f1").get<double>();
      r.partial_match_score = j.at("partial_match_score").get<double>();
      r.overall_score = j.at("overall_score").get<double>();
      out << r.csv_row(fs::path(path).stem().string()) << "\n";
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::ParseError, "report '" + path + "': " + e.what());
    }
  }
  return 0;
}

struct ContractArgs {
  std::size_t calls = 100;
};

int cmd_contract_test(const ContractArgs& a, const EngineConfig& cfg, bool mock,
                      std::ostream& out) {
  auto gateway = make_gateway(cfg, mock);
  bool ok = true;
  for (const auto& c : run_contract_checks(*gateway, a.calls)) {
    out << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << "\n";
    ok = ok && c.passed;
  }
  if (!ok) throw Error(ErrorCode::BadResponse, "model service failed the contract checks");
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Retrieval-augmented meta-action decision engine", "rad"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalFlags g;
  app.add_option("--config", g.config_file, "key=value config file");
  app.add_flag("--mock", g.mock, "use the deterministic offline gateway");
  app.add_option("--omega", g.omega, "weight on BEV similarity, in [0, 1]");
  app.add_option("--k", g.k, "number of hits to retrieve");
  app.add_option("--weights", g.weights, "score weights a,b,g,d");
  app.add_option("--seed", g.seed, "seed for every random choice");
  app.add_option("--parallelism", g.parallelism, "maximum in-flight model calls");
  app.add_option("--set", g.overrides, "override any config key (key=value)");

  IngestArgs ingest;
  auto* c_ingest = app.add_subcommand("ingest", "validate a manifest and optionally assign splits");
  c_ingest->add_option("--manifest", ingest.manifest)->required();
  c_ingest->add_option("--out", ingest.out, "output manifest (default: in place)");
  c_ingest->add_option("--split", ingest.split, "n_finetune,n_database,n_test");

  LabelArgs label;
  auto* c_label = app.add_subcommand("label", "derive gt_action from ego trajectories");
  c_label->add_option("--manifest", label.manifest)->required();
  c_label->add_option("--out", label.out, "output manifest (default: in place)");

  RenderArgs render;
  auto* c_render = app.add_subcommand("render-bev", "rasterize annotations into BEV images");
  c_render->add_option("--manifest", render.manifest)->required();
  c_render->add_option("--out", render.out, "output manifest (default: in place)");
  c_render->add_option("--out-dir", render.out_dir, "image directory (default: bev/ next to it)");

  VqaArgs vqa;
  auto* c_vqa = app.add_subcommand("gen-vqa", "generate spatial VQA pairs for fine-tuning");
  c_vqa->add_option("--manifest", vqa.manifest)->required();
  c_vqa->add_option("--out", vqa.out)->required();

  EmbedArgs embed;
  auto* c_embed = app.add_subcommand("embed", "build an embedding store from a manifest");
  c_embed->add_option("--manifest", embed.manifest)->required();
  c_embed->add_option("--out", embed.out)->required();
  c_embed->add_option("--split", embed.split, "finetune | database | test | all");

  RetrieveArgs retrieve;
  auto* c_retrieve = app.add_subcommand("retrieve", "print the top-k stored scenes for a scene");
  c_retrieve->add_option("--manifest", retrieve.manifest)->required();
  c_retrieve->add_option("--store", retrieve.store)->required();
  c_retrieve->add_option("--scene", retrieve.scene)->required();

  DecideArgs decide;
  auto* c_decide = app.add_subcommand("decide", "choose a meta-action for each query scene");
  c_decide->add_option("--manifest", decide.manifest)->required();
  c_decide->add_option("--store", decide.store)->required();
  c_decide->add_option("--out", decide.out)->required();
  c_decide->add_option("--split", decide.split, "finetune | database | test | all");
  c_decide->add_option("--templates", decide.templates, "prompt template directory");

  EvaluateArgs evaluate_args;
  auto* c_eval = app.add_subcommand("evaluate", "score decision traces against labels");
  c_eval->add_option("--traces", evaluate_args.traces)->required();
  c_eval->add_option("--manifest", evaluate_args.manifest)->required();
  c_eval->add_option("--out", evaluate_args.out, "write the JSON report here too");
  c_eval->add_option("--csv", evaluate_args.csv, "write a CSV header and row");
  c_eval->add_option("--name", evaluate_args.name, "run name for the CSV row");

  LossArgs loss;
  auto* c_loss = app.add_subcommand("loss-check", "print the spatial-aware loss of samples");
  c_loss->add_option("--samples", loss.samples)->required();

  ReportArgs report;
  auto* c_report = app.add_subcommand("report", "tabulate evaluation reports as CSV");
  c_report->add_option("reports", report.reports)->required();

  ContractArgs contract;
  auto* c_contract = app.add_subcommand("contract-test", "probe a model service's wire contract");
  c_contract->add_option("--calls", contract.calls, "embed calls per image kind");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: UsageError: " << e.what() << "\n" << app.help();
    return 2;
  }

  try {
    const EngineConfig cfg = resolve_config(g);
    if (c_ingest->parsed()) return cmd_ingest(ingest, cfg, out);
    if (c_label->parsed()) return cmd_label(label, cfg, out);
    if (c_render->parsed()) return cmd_render_bev(render, cfg, out);
    if (c_vqa->parsed()) return cmd_gen_vqa(vqa, cfg, out);
    if (c_embed->parsed()) return cmd_embed(embed, cfg, g.mock, out);
    if (c_retrieve->parsed()) return cmd_retrieve(retrieve, cfg, g.mock, out);
    if (c_decide->parsed()) return cmd_decide(decide, cfg, g.mock, out);
    if (c_eval->parsed()) return cmd_evaluate(evaluate_args, cfg, out);
    if (c_loss->parsed()) return cmd_loss_check(loss, out);
    if (c_report->parsed()) return cmd_report(report, out);
    if (c_contract->parsed()) return cmd_contract_test(contract, cfg, g.mock, out);
  } catch (const Error& e) {
    err << "error: " << error_code_name(e.code()) << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: Internal: " << e.what() << "\n";
    return 1;
  }
  err << "error: UsageError: no subcommand\n" << app.help();
  return 2;
}

}  // namespace rad
