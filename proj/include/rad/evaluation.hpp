#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rad/decision.hpp"
#include "rad/scene.hpp"
#include "rad/taxonomy.hpp"

namespace rad {

struct PredictionPair {
  std::string scene_id;
  MetaAction gt;
  std::optional<MetaAction> pred;  // nullopt is a parse failure
};

struct ConfusionCounts {
  std::array<std::size_t, kNumMetaActions> tp{};
  std::array<std::size_t, kNumMetaActions> fp{};
  std::array<std::size_t, kNumMetaActions> fn{};

  std::size_t support(MetaAction a) const { return tp[index_of(a)] + fn[index_of(a)]; }
  std::size_t total() const;
  std::size_t matches() const;

  ConfusionCounts& operator+=(const ConfusionCounts& other);
};

/// A parse failure adds a false negative for the ground truth and no false
/// positive anywhere.
ConfusionCounts count_confusion(std::span<const PredictionPair> pairs);

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct ScoreWeights {
  double alpha = 0.4;
  double beta = 0.2;
  double gamma = 0.2;
  double delta = 0.2;

  void validate() const;
  /// Parses "a,b,g,d".
  static ScoreWeights parse(std::string_view text);
};

double exact_match_accuracy(std::span<const PredictionPair> pairs);
/// Zero denominators give 0 for that statistic.
Prf prf(std::size_t tp, std::size_t fp, std::size_t fn);
std::array<Prf, kNumMetaActions> per_action_prf(const ConfusionCounts& counts);
/// Mean over K classes; classes absent from `f1` count as zero.
double macro_f1(std::span<const double> f1, std::size_t k);
double weighted_f1(std::span<const double> f1, std::span<const std::size_t> support,
                   std::size_t n_total);
double partial_match_score(std::span<const PredictionPair> pairs);
double overall_score(double ema, double macro, double weighted, double pms,
                     const ScoreWeights& w = {});

struct EvalReport {
  std::size_t n_total = 0;
  std::size_t n_match = 0;
  std::size_t n_parse_failures = 0;
  std::size_t k = kNumMetaActions;
  std::array<Prf, kNumMetaActions> per_action{};
  std::array<std::size_t, kNumMetaActions> support{};
  double exact_match_accuracy = 0.0;
  double macro_f1 = 0.0;
  double weighted_f1 = 0.0;
  double partial_match_score = 0.0;
  double overall_score = 0.0;
  ScoreWeights weights;

  /// Stable key order and fixed 6-decimal numbers, so reports diff cleanly.
  std::string to_json() const;
  static std::string csv_header();
  std::string csv_row(std::string_view run_name) const;
};

/// K must cover the taxonomy; larger K adds absent classes to the macro mean.
EvalReport evaluate(std::span<const PredictionPair> pairs, const ScoreWeights& w = {},
                    std::size_t k = kNumMetaActions);

/// Pairs each trace with its labeled scene. Traces for unknown scenes raise
/// NotFound, unlabeled scenes raise MissingGtAction. Errored traces count as
/// parse failures.
std::vector<PredictionPair> join_traces(std::span<const DecisionTrace> traces,
                                        const std::vector<SceneRecord>& manifest);

}  // namespace rad
