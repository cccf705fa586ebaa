#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "rad/embed_store.hpp"
#include "rad/gateway.hpp"
#include "rad/retrieval.hpp"
#include "rad/scene.hpp"
#include "rad/taxonomy.hpp"

namespace rad {

/// Prompt text with `{{name}}` placeholders, versioned as a set.
struct PromptTemplates {
  std::string version;
  std::string system;
  std::string query;
  std::string rag_context;
  std::string instruction;
  std::string clarification;

  /// Templates compiled from data/templates.
  static const PromptTemplates& builtin();
  /// Reads VERSION, system.txt, query.txt, rag_context.txt, instruction.txt
  /// and clarification.txt from a directory.
  static PromptTemplates load(const std::filesystem::path& dir);
};

/// Line prefix in the RAG context that carries the exemplar's action.
inline constexpr std::string_view kExemplarActionTag = "Exemplar meta-action: ";

struct PromptBundle {
  std::string template_version;
  std::string system;
  std::string query_text;
  std::string rag_context;
  std::string instruction;
  /// Query front, query BEV, [query surround x6], retrieved front, retrieved BEV.
  std::vector<Bytes> query_images;
  std::vector<Bytes> retrieved_images;

  friend bool operator==(const PromptBundle&, const PromptBundle&) = default;
};

using ImageLoader = std::function<Bytes(std::string_view reference)>;

/// Loader resolving references against a manifest directory.
ImageLoader file_image_loader(std::filesystem::path base_dir);

struct PromptOptions {
  bool include_surround = false;
};

/// Throws MissingGtAction when the retrieved scene is unlabeled, and
/// MissingImage when a BEV image has not been rendered.
PromptBundle build_prompts(const SceneRecord& query, const RetrievalHit& hit,
                           const SceneRecord& retrieved, const ImageLoader& images,
                           const PromptTemplates& templates = PromptTemplates::builtin(),
                           const PromptOptions& options = {});

/// Chat payload in fixed order: query text, query images, RAG context,
/// retrieved images, instruction, then the clarification when retrying.
ChatRequest to_chat_request(const PromptBundle& bundle, const PromptTemplates& templates,
                            bool clarify, double temperature, int max_tokens);

struct DecisionTrace {
  std::string scene_id;
  std::string retrieved_id;
  double sim_fv = 0.0;
  double sim_bev = 0.0;
  double sim_overall = 0.0;
  std::string raw_model_text;
  std::optional<MetaAction> parsed_action;  // nullopt marks a parse failure
  int attempts = 0;
  double latency_ms = 0.0;
  std::optional<std::string> error;

  friend bool operator==(const DecisionTrace&, const DecisionTrace&) = default;
};

std::string trace_to_json_line(const DecisionTrace& trace);
DecisionTrace trace_from_json_line(std::string_view line);
std::vector<DecisionTrace> parse_traces(std::string_view jsonl);

struct DecisionConfig {
  RetrievalConfig retrieval;
  PromptOptions prompts;
  double temperature = 0.0;
  int max_tokens = 32;
  /// When false, latency is reported as 0 so traces are reproducible.
  bool measure_latency = true;
  std::size_t parallelism = 8;
};

using SceneIndex = std::unordered_map<std::string, const SceneRecord*>;
SceneIndex index_scenes(const std::vector<SceneRecord>& scenes);

/// Embed both query views, retrieve the closest stored scene, prompt the
/// model with it and parse one action. An unparseable reply gets one retry
/// with a clarification; a second failure is recorded as a parse failure.
/// Gateway and retrieval errors are recorded on the trace, not thrown.
DecisionTrace decide(const SceneRecord& query, const EmbeddingStore& store,
                     const SceneIndex& scenes, ModelGateway& gateway, const ImageLoader& images,
                     const DecisionConfig& cfg = {},
                     const PromptTemplates& templates = PromptTemplates::builtin());

/// Runs decide over many queries with at most cfg.parallelism in flight.
/// Traces come back in query order.
std::vector<DecisionTrace> decide_batch(const std::vector<const SceneRecord*>& queries,
                                        const EmbeddingStore& store, const SceneIndex& scenes,
                                        ModelGateway& gateway, const ImageLoader& images,
                                        const DecisionConfig& cfg = {},
                                        const PromptTemplates& templates = PromptTemplates::builtin());

/// Mock chat policy that answers with the exemplar's action from the RAG
/// context.
std::string exemplar_echo_reply(const ChatRequest& request);

}  // namespace rad
