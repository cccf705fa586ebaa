#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace rad {

struct EmbeddingRecord {
  std::string scene_id;
  std::vector<float> v_fv;
  std::vector<float> v_bev;
  std::vector<float> v_cat;
};

inline constexpr std::uint32_t kStoreFormatVersion = 1;
inline constexpr std::uint32_t kStoreEndianMarker = 0x01020304;

struct StoreHeader {
  std::uint32_t format_version = kStoreFormatVersion;
  std::uint32_t d_fv = 0;
  std::uint32_t d_bev = 0;
  std::uint64_t count = 0;
  std::uint32_t endian_marker = kStoreEndianMarker;
};

/// Front-view vector followed by the BEV vector.
std::vector<float> concat(std::span<const float> v_fv, std::span<const float> v_bev);

/// Splits a concatenated vector at d_fv. Throws DimensionMismatch when the
/// length is not d_fv + d_bev.
std::pair<std::vector<float>, std::vector<float>> decompose(std::span<const float> v_cat,
                                                            std::size_t d_fv, std::size_t d_bev);
inline std::pair<std::vector<float>, std::vector<float>> decompose(std::span<const float> v_cat,
                                                                   const StoreHeader& header) {
  return decompose(v_cat, header.d_fv, header.d_bev);
}

/// Borrowed view of one stored record; valid while the store is alive and
/// unmodified.
struct RecordView {
  std::string_view scene_id;
  std::span<const float> v_cat;
  std::span<const float> v_fv;
  std::span<const float> v_bev;
  double norm_fv = 0.0;
  double norm_bev = 0.0;
};

/// In-memory table of concatenated embeddings, persisted as a `.radstore`
/// file.
///
/// File layout, all integers and floats little-endian:
///   "RADSTORE" | u32 version | u32 endian marker | u32 d_fv | u32 d_bev |
///   u64 count | count x (u32 id_len | id bytes | (d_fv + d_bev) x f32) |
///   u32 CRC-32 of every preceding byte
///
/// Writes happen from a single thread; once sealed the store is read-only
/// and safe for concurrent readers.
class EmbeddingStore {
 public:
  EmbeddingStore() = default;
  EmbeddingStore(std::size_t d_fv, std::size_t d_bev);

  /// First insert fixes the dimensions when they were not given up front.
  /// Throws DimensionMismatch, DuplicateId, ZeroVector (all-zero sub-vector),
  /// InvalidArgument (non-finite component or sealed store).
  void put(std::string scene_id, std::span<const float> v_fv, std::span<const float> v_bev);
  EmbeddingRecord get(std::string_view scene_id) const;  // NotFound
  bool contains(std::string_view scene_id) const;

  std::size_t size() const noexcept { return ids_.size(); }
  bool empty() const noexcept { return ids_.empty(); }
  std::size_t d_fv() const noexcept { return d_fv_; }
  std::size_t d_bev() const noexcept { return d_bev_; }
  std::size_t d_cat() const noexcept { return d_fv_ + d_bev_; }
  StoreHeader header() const;

  RecordView record(std::size_t row) const;
  /// Records in insertion order.
  std::vector<RecordView> scan() const;

  void seal() noexcept { sealed_ = true; }
  bool sealed() const noexcept { return sealed_; }

  std::vector<std::uint8_t> serialize() const;
  /// Throws CorruptStore (bad magic, truncation, checksum, marker) or
  /// VersionMismatch. The returned store is sealed.
  static EmbeddingStore deserialize(std::span<const std::uint8_t> bytes);

  void persist(const std::filesystem::path& path) const;
  static EmbeddingStore open(const std::filesystem::path& path);

 private:
  void append(std::string scene_id, std::span<const float> v_fv, std::span<const float> v_bev);

  std::size_t d_fv_ = 0;
  std::size_t d_bev_ = 0;
  std::vector<float> data_;  // row-major, d_cat floats per record
  std::vector<std::string> ids_;
  std::vector<double> norm_fv_;
  std::vector<double> norm_bev_;
  std::unordered_map<std::string, std::size_t> index_;
  bool sealed_ = false;
};

}  // namespace rad
