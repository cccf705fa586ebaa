#include "rad/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "rad/error.hpp"

namespace rad {

namespace {

double dot(std::span<const float> a, std::span<const float> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    s += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  }
  return s;
}

double norm(std::span<const float> v) { return std::sqrt(dot(v, v)); }

double clamp_unit(double v) { return std::clamp(v, -1.0, 1.0); }

struct Scored {
  std::size_t row;
  double sim_fv;
  double sim_bev;
  double sim;
};

}  // namespace

void RetrievalConfig::validate() const {
  if (!(omega >= 0.0 && omega <= 1.0)) {
    throw Error(ErrorCode::OmegaOutOfRange, "omega must lie in [0, 1]");
  }
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
}

double cosine(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::DimensionMismatch, "cosine of vectors with different lengths");
  }
  const double na = norm(a);
  const double nb = norm(b);
  if (na == 0.0 || nb == 0.0) throw Error(ErrorCode::ZeroVector, "cosine of a zero vector");
  return clamp_unit(dot(a, b) / (na * nb));
}

double blended_similarity(double sim_fv, double sim_bev, double omega) {
  if (!(omega >= 0.0 && omega <= 1.0)) {
    throw Error(ErrorCode::OmegaOutOfRange, "omega must lie in [0, 1]");
  }
  return (1.0 - omega) * sim_fv + omega * sim_bev;
}

std::vector<RetrievalHit> top_k(const Query& query, const EmbeddingStore& store,
                                const RetrievalConfig& cfg) {
  cfg.validate();
  if (store.empty()) throw Error(ErrorCode::EmptyStore, "retrieval over an empty store");
  if (query.v_fv.size() != store.d_fv() || query.v_bev.size() != store.d_bev()) {
    throw Error(ErrorCode::DimensionMismatch, "query dims do not match the store");
  }
  const double qn_fv = norm(query.v_fv);
  const double qn_bev = norm(query.v_bev);
  if (qn_fv == 0.0 || qn_bev == 0.0) throw Error(ErrorCode::ZeroVector, "zero query vector");

  std::vector<Scored> scored(store.size());
  auto score_range = [&](std::size_t begin, std::size_t end) {
    for (std::size_t row = begin; row < end; ++row) {
      const RecordView r = store.record(row);
      const double fv = clamp_unit(dot(query.v_fv, r.v_fv) / (qn_fv * r.norm_fv));
      const double bev = clamp_unit(dot(query.v_bev, r.v_bev) / (qn_bev * r.norm_bev));
      scored[row] = {row, fv, bev, blended_similarity(fv, bev, cfg.omega)};
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(cfg.threads, 1, store.size());
  if (threads == 1) {
    score_range(0, store.size());
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (store.size() + threads - 1) / threads;
    for (std::size_t t = 0; t < threads; ++t) {
      const std::size_t begin = t * chunk;
      const std::size_t end = std::min(store.size(), begin + chunk);
      if (begin < end) pool.emplace_back(score_range, begin, end);
    }
  }

  const auto better = [&](const Scored& a, const Scored& b) {
    if (a.sim != b.sim) return a.sim > b.sim;
    return store.record(a.row).scene_id < store.record(b.row).scene_id;
  };
  const std::size_t k = std::min(cfg.k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(k), scored.end(),
                    better);

  std::vector<RetrievalHit> hits;
  hits.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    const Scored& s = scored[i];
    hits.push_back({std::string(store.record(s.row).scene_id), s.sim_fv, s.sim_bev, s.sim, i + 1});
  }
  return hits;
}

}  // namespace rad
