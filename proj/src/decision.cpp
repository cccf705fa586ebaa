#include "rad/decision.hpp"

#include <atomic>
#include <chrono>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "rad/error.hpp"
#include "rad/util.hpp"
#include "rad_builtin_data.hpp"

namespace rad {

namespace {

std::string trim_trailing_newlines(std::string s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
  return s;
}

std::string substitute(std::string text,
                       const std::vector<std::pair<std::string_view, std::string>>& values) {
  for (const auto& [key, value] : values) {
    const std::string token = "{{" + std::string(key) + "}}";
    for (auto pos = text.find(token); pos != std::string::npos;
         pos = text.find(token, pos + value.size())) {
      text.replace(pos, token.size(), value);
    }
  }
  return text;
}

std::string action_list() {
  std::string out;
  for (MetaAction a : kAllMetaActions) {
    if (!out.empty()) out += "; ";
    out += canonical_phrase(a);
  }
  return out;
}

}  // namespace

const PromptTemplates& PromptTemplates::builtin() {
  static const PromptTemplates t{
      trim_trailing_newlines(std::string(builtin_data::kVersion)),
      trim_trailing_newlines(std::string(builtin_data::kSystemTxt)),
      trim_trailing_newlines(std::string(builtin_data::kQueryTxt)),
      trim_trailing_newlines(std::string(builtin_data::kRagContextTxt)),
      trim_trailing_newlines(std::string(builtin_data::kInstructionTxt)),
      trim_trailing_newlines(std::string(builtin_data::kClarificationTxt)),
  };
  return t;
}

PromptTemplates PromptTemplates::load(const std::filesystem::path& dir) {
  auto read = [&](const char* name) { return trim_trailing_newlines(read_text_file(dir / name)); };
  return {read("VERSION"),         read("system.txt"),      read("query.txt"),
          read("rag_context.txt"), read("instruction.txt"), read("clarification.txt")};
}

ImageLoader file_image_loader(std::filesystem::path base_dir) {
  return [base = std::move(base_dir)](std::string_view reference) {
    const auto path = resolve_image(base, reference);
    if (!std::filesystem::exists(path)) {
      throw Error(ErrorCode::MissingImage, "image not found: " + std::string(reference));
    }
    return read_file(path);
  };
}

PromptBundle build_prompts(const SceneRecord& query, const RetrievalHit& hit,
                           const SceneRecord& retrieved, const ImageLoader& images,
                           const PromptTemplates& templates, const PromptOptions& options) {
  if (!retrieved.gt_action) {
    throw Error(ErrorCode::MissingGtAction,
                "retrieved scene '" + retrieved.scene_id + "' has no ground-truth action");
  }
  for (const SceneRecord* s : {&query, &retrieved}) {
    if (!s->bev_image) {
      throw Error(ErrorCode::MissingImage, "scene '" + s->scene_id + "' has no BEV image");
    }
  }

  PromptBundle b;
  b.template_version = templates.version;
  b.system = templates.system;
  const std::string nav_line = query.nav_hint.empty() ? "" : " Navigation: " + query.nav_hint;
  b.query_text = substitute(templates.query, {{"nav_line", nav_line}});
  b.rag_context = substitute(
      templates.rag_context,
      {{"sim_overall", format_fixed(hit.sim_overall, 4)},
       {"retrieved_action", std::string(canonical_phrase(*retrieved.gt_action))}});
  b.instruction = substitute(templates.instruction, {{"action_list", action_list()}});

  b.query_images.push_back(images(query.front_image));
  b.query_images.push_back(images(*query.bev_image));
  if (options.include_surround) {
    for (const auto& ref : query.surround_images) b.query_images.push_back(images(ref));
  }
  b.retrieved_images.push_back(images(retrieved.front_image));
  b.retrieved_images.push_back(images(*retrieved.bev_image));
  return b;
}

ChatRequest to_chat_request(const PromptBundle& bundle, const PromptTemplates& templates,
                            bool clarify, double temperature, int max_tokens) {
  ChatRequest r;
  r.system = bundle.system;
  r.temperature = temperature;
  r.max_tokens = max_tokens;
  r.messages.emplace_back(TextPart{bundle.query_text});
  for (const auto& img : bundle.query_images) r.messages.emplace_back(ImagePart{img});
  r.messages.emplace_back(TextPart{bundle.rag_context});
  for (const auto& img : bundle.retrieved_images) r.messages.emplace_back(ImagePart{img});
  r.messages.emplace_back(TextPart{bundle.instruction});
  if (clarify) {
    r.messages.emplace_back(
        TextPart{substitute(templates.clarification, {{"action_list", action_list()}})});
  }
  return r;
}

std::string trace_to_json_line(const DecisionTrace& t) {
  nlohmann::ordered_json j;
  j["scene_id"] = t.scene_id;
  j["retrieved_id"] = t.retrieved_id;
  j["sim_fv"] = t.sim_fv;
  j["sim_bev"] = t.sim_bev;
  j["sim_overall"] = t.sim_overall;
  j["raw_model_text"] = t.raw_model_text;
  j["parsed_action"] = t.parsed_action ? nlohmann::ordered_json(label_name(*t.parsed_action))
                                       : nlohmann::ordered_json(nullptr);
  j["parse_failure"] = !t.parsed_action.has_value();
  j["attempts"] = t.attempts;
  j["latency_ms"] = t.latency_ms;
  j["error"] = t.error ? nlohmann::ordered_json(*t.error) : nlohmann::ordered_json(nullptr);
  return j.dump();
}

DecisionTrace trace_from_json_line(std::string_view line) {
  try {
    const auto j = nlohmann::json::parse(line);
    DecisionTrace t;
    t.scene_id = j.at("scene_id").get<std::string>();
    t.retrieved_id = j.value("retrieved_id", "");
    t.sim_fv = j.value("sim_fv", 0.0);
    t.sim_bev = j.value("sim_bev", 0.0);
    t.sim_overall = j.value("sim_overall", 0.0);
    t.raw_model_text = j.value("raw_model_text", "");
    if (j.contains("parsed_action") && !j["parsed_action"].is_null()) {
      const auto label = j["parsed_action"].get<std::string>();
      t.parsed_action = action_from_label(label);
      if (!t.parsed_action) throw Error(ErrorCode::ParseError, "unknown action '" + label + "'");
    }
    t.attempts = j.value("attempts", 0);
    t.latency_ms = j.value("latency_ms", 0.0);
    if (j.contains("error") && !j["error"].is_null()) t.error = j["error"].get<std::string>();
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("malformed trace: ") + e.what());
  }
}

std::vector<DecisionTrace> parse_traces(std::string_view jsonl) {
  std::vector<DecisionTrace> out;
  std::istringstream in{std::string(jsonl)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(trace_from_json_line(line));
  }
  return out;
}

SceneIndex index_scenes(const std::vector<SceneRecord>& scenes) {
  SceneIndex index;
  for (const auto& s : scenes) index.emplace(s.scene_id, &s);
  return index;
}

DecisionTrace decide(const SceneRecord& query, const EmbeddingStore& store,
                     const SceneIndex& scenes, ModelGateway& gateway, const ImageLoader& images,
                     const DecisionConfig& cfg, const PromptTemplates& templates) {
  const auto started = std::chrono::steady_clock::now();
  DecisionTrace trace;
  trace.scene_id = query.scene_id;
  try {
    if (!query.bev_image) {
      throw Error(ErrorCode::MissingImage, "scene '" + query.scene_id + "' has no BEV image");
    }
    const Bytes front = images(query.front_image);
    const Bytes bev = images(*query.bev_image);
    const std::vector<float> q_fv = gateway.embed_image(front, ImageKind::FrontView);
    const std::vector<float> q_bev = gateway.embed_image(bev, ImageKind::Bev);

    RetrievalConfig rc = cfg.retrieval;
    rc.k = 1;
    const RetrievalHit hit = top_k({q_fv, q_bev}, store, rc).front();
    trace.retrieved_id = hit.scene_id;
    trace.sim_fv = hit.sim_fv;
    trace.sim_bev = hit.sim_bev;
    trace.sim_overall = hit.sim_overall;

    const auto it = scenes.find(hit.scene_id);
    if (it == scenes.end()) {
      throw Error(ErrorCode::NotFound, "retrieved scene '" + hit.scene_id + "' not in manifest");
    }
    const PromptBundle bundle =
        build_prompts(query, hit, *it->second, images, templates, cfg.prompts);

    for (int attempt = 0; attempt < 2 && !trace.parsed_action; ++attempt) {
      trace.attempts = attempt + 1;
      trace.raw_model_text = gateway.chat(
          to_chat_request(bundle, templates, attempt > 0, cfg.temperature, cfg.max_tokens));
      try {
        trace.parsed_action = parse_meta_action(trace.raw_model_text);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NoMatch && e.code() != ErrorCode::Ambiguous &&
            e.code() != ErrorCode::InvalidArgument) {
          throw;
        }
      }
    }
  } catch (const Error& e) {
    trace.error = std::string(error_code_name(e.code())) + ": " + e.what();
  }
  if (cfg.measure_latency) {
    trace.latency_ms = std::chrono::duration<double, std::milli>(
                           std::chrono::steady_clock::now() - started)
                           .count();
  }
  return trace;
}

std::vector<DecisionTrace> decide_batch(const std::vector<const SceneRecord*>& queries,
                                        const EmbeddingStore& store, const SceneIndex& scenes,
                                        ModelGateway& gateway, const ImageLoader& images,
                                        const DecisionConfig& cfg,
                                        const PromptTemplates& templates) {
  std::vector<DecisionTrace> traces(queries.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < queries.size(); i = next++) {
      traces[i] = decide(*queries[i], store, scenes, gateway, images, cfg, templates);
    }
  };
  const std::size_t workers = std::clamp<std::size_t>(cfg.parallelism, 1, std::max<std::size_t>(1, queries.size()));
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
  }
  return traces;
}

std::string exemplar_echo_reply(const ChatRequest& request) {
  for (const auto& part : request.messages) {
    const auto* text = std::get_if<TextPart>(&part);
    if (!text) continue;
    const auto at = text->text.find(kExemplarActionTag);
    if (at == std::string::npos) continue;
    const auto begin = at + kExemplarActionTag.size();
    const auto end = text->text.find('\n', begin);
    std::string phrase = text->text.substr(begin, end == std::string::npos ? end : end - begin);
    if (!phrase.empty()) phrase[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(phrase[0])));
    return phrase + ".";
  }
  return "I am not sure.";
}

}  // namespace rad
