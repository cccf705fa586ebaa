#include "rad/evaluation.hpp"

#include <cmath>
#include <numeric>
#include <unordered_map>

#include <json.hpp>

#include "rad/error.hpp"
#include "rad/util.hpp"

namespace rad {

std::size_t ConfusionCounts::total() const {
  return std::accumulate(tp.begin(), tp.end(), std::size_t{0}) +
         std::accumulate(fn.begin(), fn.end(), std::size_t{0});
}

std::size_t ConfusionCounts::matches() const {
  return std::accumulate(tp.begin(), tp.end(), std::size_t{0});
}

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& other) {
  for (std::size_t i = 0; i < kNumMetaActions; ++i) {
    tp[i] += other.tp[i];
    fp[i] += other.fp[i];
    fn[i] += other.fn[i];
  }
  return *this;
}

ConfusionCounts count_confusion(std::span<const PredictionPair> pairs) {
  ConfusionCounts c;
  for (const auto& p : pairs) {
    const std::size_t g = index_of(p.gt);
    if (p.pred && *p.pred == p.gt) {
      ++c.tp[g];
    } else {
      ++c.fn[g];
      if (p.pred) ++c.fp[index_of(*p.pred)];
    }
  }
  return c;
}

void ScoreWeights::validate() const {
  for (double w : {alpha, beta, gamma, delta}) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw Error(ErrorCode::InvalidArgument, "score weights must be finite and non-negative");
    }
  }
}

ScoreWeights ScoreWeights::parse(std::string_view text) {
  std::vector<double> values;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const std::string item(text.substr(start, comma == std::string_view::npos ? comma : comma - start));
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) {
      throw Error(ErrorCode::InvalidArgument, "bad weight '" + item + "' in '" + std::string(text) + "'");
    }
    values.push_back(v);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (values.size() != 4) {
    throw Error(ErrorCode::InvalidArgument, "weights need four comma-separated values a,b,g,d");
  }
  ScoreWeights w{values[0], values[1], values[2], values[3]};
  w.validate();
  return w;
}

double exact_match_accuracy(std::span<const PredictionPair> pairs) {
  if (pairs.empty()) throw Error(ErrorCode::EmptyInput, "no prediction pairs");
  std::size_t hits = 0;
  for (const auto& p : pairs) hits += (p.pred && *p.pred == p.gt) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(pairs.size());
}

Prf prf(std::size_t tp, std::size_t fp, std::size_t fn) {
  Prf r;
  if (tp + fp > 0) r.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  if (tp + fn > 0) r.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  // 2PR/(P+R) reduced to counts: one rounding instead of several.
  if (tp > 0) r.f1 = static_cast<double>(2 * tp) / static_cast<double>(2 * tp + fp + fn);
  return r;
}

std::array<Prf, kNumMetaActions> per_action_prf(const ConfusionCounts& counts) {
  std::array<Prf, kNumMetaActions> out{};
  for (std::size_t i = 0; i < kNumMetaActions; ++i) {
    out[i] = prf(counts.tp[i], counts.fp[i], counts.fn[i]);
  }
  return out;
}

double macro_f1(std::span<const double> f1, std::size_t k) {
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "K must be at least 1");
  if (f1.size() > k) {
    throw Error(ErrorCode::InvalidArgument, "K is smaller than the number of classes scored");
  }
  return std::accumulate(f1.begin(), f1.end(), 0.0) / static_cast<double>(k);
}

double weighted_f1(std::span<const double> f1, std::span<const std::size_t> support,
                   std::size_t n_total) {
  if (f1.size() != support.size()) {
    throw Error(ErrorCode::InvalidArgument, "f1 and support lengths differ");
  }
  if (std::accumulate(support.begin(), support.end(), std::size_t{0}) != n_total) {
    throw Error(ErrorCode::InvalidArgument, "supports do not sum to N_total");
  }
  if (n_total == 0) throw Error(ErrorCode::EmptyInput, "N_total is zero");
  double sum = 0.0;
  for (std::size_t i = 0; i < f1.size(); ++i) sum += static_cast<double>(support[i]) * f1[i];
  return sum / static_cast<double>(n_total);
}

double partial_match_score(std::span<const PredictionPair> pairs) {
  if (pairs.empty()) throw Error(ErrorCode::EmptyInput, "no prediction pairs");
  // Similarities are multiples of 1/2, so count halves to keep the sum exact.
  std::size_t halves = 0;
  for (const auto& p : pairs) {
    if (p.pred) halves += static_cast<std::size_t>(2.0 * semantic_similarity(p.gt, *p.pred));
  }
  return static_cast<double>(halves) / (2.0 * static_cast<double>(pairs.size()));
}

double overall_score(double ema, double macro, double weighted, double pms, const ScoreWeights& w) {
  return w.alpha * ema + w.beta * macro + w.gamma * weighted + w.delta * pms;
}

EvalReport evaluate(std::span<const PredictionPair> pairs, const ScoreWeights& w, std::size_t k) {
  if (pairs.empty()) throw Error(ErrorCode::EmptyInput, "no prediction pairs");
  if (k < kNumMetaActions) {
    throw Error(ErrorCode::InvalidArgument,
                "K must be at least the taxonomy size " + std::to_string(kNumMetaActions));
  }
  w.validate();
  const ConfusionCounts counts = count_confusion(pairs);

  EvalReport r;
  r.n_total = pairs.size();
  r.n_match = counts.matches();
  for (const auto& p : pairs) r.n_parse_failures += p.pred ? 0 : 1;
  r.k = k;
  r.weights = w;
  r.per_action = per_action_prf(counts);
  std::array<double, kNumMetaActions> f1{};
  for (std::size_t i = 0; i < kNumMetaActions; ++i) {
    f1[i] = r.per_action[i].f1;
    r.support[i] = counts.tp[i] + counts.fn[i];
  }
  r.exact_match_accuracy = static_cast<double>(r.n_match) / static_cast<double>(r.n_total);
  r.macro_f1 = macro_f1(f1, k);
  r.weighted_f1 = weighted_f1(f1, r.support, r.n_total);
  r.partial_match_score = partial_match_score(pairs);
  r.overall_score =
      overall_score(r.exact_match_accuracy, r.macro_f1, r.weighted_f1, r.partial_match_score, w);
  return r;
}

namespace {

// Rounded to 6 decimals; nlohmann prints the shortest round-trip form.
double r6(double v) {
  const double out = std::round(v * 1e6) / 1e6;
  return out == 0.0 ? 0.0 : out;
}

}  // namespace

std::string EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["n_total"] = n_total;
  j["n_match"] = n_match;
  j["n_parse_failures"] = n_parse_failures;
  j["K"] = k;
  j["macro_f1_averaging"] = "all_classes";
  j["weights"] = {{"alpha", r6(weights.alpha)},
                  {"beta", r6(weights.beta)},
                  {"gamma", r6(weights.gamma)},
                  {"delta", r6(weights.delta)}};
  j["exact_match_accuracy"] = r6(exact_match_accuracy);
  j["macro_f1"] = r6(macro_f1);
  j["weighted_f1"] = r6(weighted_f1);
  j["partial_match_score"] = r6(partial_match_score);
  j["overall_score"] = r6(overall_score);
  nlohmann::ordered_json per = nlohmann::ordered_json::object();
  for (MetaAction a : kAllMetaActions) {
    const auto i = index_of(a);
    per[std::string(label_name(a))] = {{"support", support[i]},
                                      {"precision", r6(per_action[i].precision)},
                                      {"recall", r6(per_action[i].recall)},
                                      {"f1", r6(per_action[i].f1)}};
  }
  j["per_action"] = std::move(per);
  return j.dump(2) + "\n";
}

std::string EvalReport::csv_header() {
  return "run,n_total,n_match,n_parse_failures,K,exact_match_accuracy,macro_f1,weighted_f1,"
         "partial_match_score,overall_score";
}

std::string EvalReport::csv_row(std::string_view run_name) const {
  std::string row(run_name);
  for (std::size_t v : {n_total, n_match, n_parse_failures, k}) row += "," + std::to_string(v);
  for (double v : {exact_match_accuracy, macro_f1, weighted_f1, partial_match_score, overall_score}) {
    row += "," + format_fixed(v, 6);
  }
  return row;
}

std::vector<PredictionPair> join_traces(std::span<const DecisionTrace> traces,
                                        const std::vector<SceneRecord>& manifest) {
  std::unordered_map<std::string_view, const SceneRecord*> by_id;
  for (const auto& s : manifest) by_id.emplace(s.scene_id, &s);
  std::vector<PredictionPair> pairs;
  pairs.reserve(traces.size());
  for (const auto& t : traces) {
    const auto it = by_id.find(t.scene_id);
    if (it == by_id.end()) {
      throw Error(ErrorCode::NotFound, "trace scene '" + t.scene_id + "' is not in the manifest");
    }
    if (!it->second->gt_action) {
      throw Error(ErrorCode::MissingGtAction, "scene '" + t.scene_id + "' has no gt_action");
    }
    pairs.push_back({t.scene_id, *it->second->gt_action, t.error ? std::nullopt : t.parsed_action});
  }
  return pairs;
}

}  // namespace rad
