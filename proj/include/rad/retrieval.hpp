#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "rad/embed_store.hpp"

namespace rad {

struct RetrievalConfig {
  double omega = 0.5;  // weight on the BEV similarity
  std::size_t k = 1;
  /// Worker threads for the scan; results match the sequential scan.
  std::size_t threads = 1;

  void validate() const;
};

struct RetrievalHit {
  std::string scene_id;
  double sim_fv = 0.0;
  double sim_bev = 0.0;
  double sim_overall = 0.0;
  std::size_t rank = 0;  // 1-based
};

/// Cosine similarity clamped to [-1, 1]. Throws DimensionMismatch or
/// ZeroVector.
double cosine(std::span<const float> a, std::span<const float> b);

/// (1 - omega) * sim_fv + omega * sim_bev. Throws OmegaOutOfRange.
double blended_similarity(double sim_fv, double sim_bev, double omega);

struct Query {
  std::span<const float> v_fv;
  std::span<const float> v_bev;
};

/// Exact scan over the whole store. Hits are ordered by sim_overall
/// descending, ties broken by ascending scene_id.
std::vector<RetrievalHit> top_k(const Query& query, const EmbeddingStore& store,
                                const RetrievalConfig& cfg = {});

}  // namespace rad
