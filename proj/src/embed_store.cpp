#include "rad/embed_store.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>

#include <zlib.h>

#include "rad/error.hpp"
#include "rad/util.hpp"

namespace rad {

namespace {

constexpr char kMagic[8] = {'R', 'A', 'D', 'S', 'T', 'O', 'R', 'E'};
constexpr std::size_t kHeaderBytes = 8 + 4 + 4 + 4 + 4 + 8;

double l2_norm(std::span<const float> v) {
  double s = 0.0;
  for (float x : v) s += static_cast<double>(x) * static_cast<double>(x);
  return std::sqrt(s);
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }
  std::span<const std::uint8_t> take(std::size_t n) {
    need(n);
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw Error(ErrorCode::CorruptStore, "store file is truncated");
  }
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<float> concat(std::span<const float> v_fv, std::span<const float> v_bev) {
  std::vector<float> out;
  out.reserve(v_fv.size() + v_bev.size());
  out.insert(out.end(), v_fv.begin(), v_fv.end());
  out.insert(out.end(), v_bev.begin(), v_bev.end());
  return out;
}

std::pair<std::vector<float>, std::vector<float>> decompose(std::span<const float> v_cat,
                                                            std::size_t d_fv, std::size_t d_bev) {
  if (v_cat.size() != d_fv + d_bev) {
    throw Error(ErrorCode::DimensionMismatch,
                "concatenated vector has length " + std::to_string(v_cat.size()) + ", expected " +
                    std::to_string(d_fv + d_bev));
  }
  return {std::vector<float>(v_cat.begin(), v_cat.begin() + static_cast<std::ptrdiff_t>(d_fv)),
          std::vector<float>(v_cat.begin() + static_cast<std::ptrdiff_t>(d_fv), v_cat.end())};
}

EmbeddingStore::EmbeddingStore(std::size_t d_fv, std::size_t d_bev) : d_fv_(d_fv), d_bev_(d_bev) {
  if (d_fv == 0 || d_bev == 0) {
    throw Error(ErrorCode::DimensionMismatch, "store dimensions must be > 0");
  }
}

void EmbeddingStore::put(std::string scene_id, std::span<const float> v_fv,
                         std::span<const float> v_bev) {
  if (sealed_) throw Error(ErrorCode::InvalidArgument, "store is sealed");
  if (d_fv_ == 0 && d_bev_ == 0) {
    if (v_fv.empty() || v_bev.empty()) {
      throw Error(ErrorCode::DimensionMismatch, "embedding vectors must be non-empty");
    }
  } else if (v_fv.size() != d_fv_ || v_bev.size() != d_bev_) {
    throw Error(ErrorCode::DimensionMismatch,
                "scene '" + scene_id + "': dims (" + std::to_string(v_fv.size()) + ", " +
                    std::to_string(v_bev.size()) + ") do not match store (" +
                    std::to_string(d_fv_) + ", " + std::to_string(d_bev_) + ")");
  }
  if (index_.contains(scene_id)) {
    throw Error(ErrorCode::DuplicateId, "scene '" + scene_id + "' already stored");
  }
  auto all_finite = [](std::span<const float> v) {
    return std::all_of(v.begin(), v.end(), [](float x) { return std::isfinite(x); });
  };
  if (!all_finite(v_fv) || !all_finite(v_bev)) {
    throw Error(ErrorCode::InvalidArgument, "scene '" + scene_id + "': non-finite component");
  }
  auto all_zero = [](std::span<const float> v) {
    return std::all_of(v.begin(), v.end(), [](float x) { return x == 0.0f; });
  };
  if (all_zero(v_fv) || all_zero(v_bev)) {
    throw Error(ErrorCode::ZeroVector, "scene '" + scene_id + "': all-zero embedding");
  }
  if (d_fv_ == 0) {
    d_fv_ = v_fv.size();
    d_bev_ = v_bev.size();
  }
  append(std::move(scene_id), v_fv, v_bev);
}

void EmbeddingStore::append(std::string scene_id, std::span<const float> v_fv,
                            std::span<const float> v_bev) {
  data_.insert(data_.end(), v_fv.begin(), v_fv.end());
  data_.insert(data_.end(), v_bev.begin(), v_bev.end());
  norm_fv_.push_back(l2_norm(v_fv));
  norm_bev_.push_back(l2_norm(v_bev));
  index_.emplace(scene_id, ids_.size());
  ids_.push_back(std::move(scene_id));
}

bool EmbeddingStore::contains(std::string_view scene_id) const {
  return index_.contains(std::string(scene_id));
}

EmbeddingRecord EmbeddingStore::get(std::string_view scene_id) const {
  auto it = index_.find(std::string(scene_id));
  if (it == index_.end()) {
    throw Error(ErrorCode::NotFound, "scene '" + std::string(scene_id) + "' not in store");
  }
  const RecordView v = record(it->second);
  return {std::string(v.scene_id), {v.v_fv.begin(), v.v_fv.end()},
          {v.v_bev.begin(), v.v_bev.end()}, {v.v_cat.begin(), v.v_cat.end()}};
}

StoreHeader EmbeddingStore::header() const {
  StoreHeader h;
  h.d_fv = static_cast<std::uint32_t>(d_fv_);
  h.d_bev = static_cast<std::uint32_t>(d_bev_);
  h.count = ids_.size();
  return h;
}

RecordView EmbeddingStore::record(std::size_t row) const {
  const std::span<const float> cat(data_.data() + row * d_cat(), d_cat());
  return {ids_[row], cat, cat.first(d_fv_), cat.subspan(d_fv_), norm_fv_[row], norm_bev_[row]};
}

std::vector<RecordView> EmbeddingStore::scan() const {
  std::vector<RecordView> out;
  out.reserve(size());
  for (std::size_t i = 0; i < size(); ++i) out.push_back(record(i));
  return out;
}

std::vector<std::uint8_t> EmbeddingStore::serialize() const {
  std::vector<std::uint8_t> out;
  out.reserve(kHeaderBytes + data_.size() * 4 + ids_.size() * 24 + 4);
  out.resize(sizeof(kMagic));
  std::memcpy(out.data(), kMagic, sizeof(kMagic));
  put_u32(out, kStoreFormatVersion);
  put_u32(out, kStoreEndianMarker);
  put_u32(out, static_cast<std::uint32_t>(d_fv_));
  put_u32(out, static_cast<std::uint32_t>(d_bev_));
  put_u64(out, ids_.size());
  for (std::size_t row = 0; row < ids_.size(); ++row) {
    put_u32(out, static_cast<std::uint32_t>(ids_[row].size()));
    out.insert(out.end(), ids_[row].begin(), ids_[row].end());
    for (float f : record(row).v_cat) put_u32(out, std::bit_cast<std::uint32_t>(f));
  }
  put_u32(out, static_cast<std::uint32_t>(crc32(0L, out.data(), static_cast<uInt>(out.size()))));
  return out;
}

EmbeddingStore EmbeddingStore::deserialize(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderBytes + 4 || std::memcmp(bytes.data(), kMagic, 8) != 0) {
    throw Error(ErrorCode::CorruptStore, "not a store file");
  }
  Reader r(bytes.subspan(8));
  const std::uint32_t version = r.u32();
  if (version != kStoreFormatVersion) {
    throw Error(ErrorCode::VersionMismatch, "store format version " + std::to_string(version) +
                                                ", expected " +
                                                std::to_string(kStoreFormatVersion));
  }
  const std::uint32_t expected_crc = [&] {
    const auto tail = bytes.subspan(bytes.size() - 4);
    return static_cast<std::uint32_t>(tail[0]) | (static_cast<std::uint32_t>(tail[1]) << 8) |
           (static_cast<std::uint32_t>(tail[2]) << 16) | (static_cast<std::uint32_t>(tail[3]) << 24);
  }();
  const auto actual_crc = static_cast<std::uint32_t>(
      crc32(0L, bytes.data(), static_cast<uInt>(bytes.size() - 4)));
  if (actual_crc != expected_crc) throw Error(ErrorCode::CorruptStore, "store checksum mismatch");

  if (r.u32() != kStoreEndianMarker) throw Error(ErrorCode::CorruptStore, "bad endianness marker");
  const std::uint32_t d_fv = r.u32();
  const std::uint32_t d_bev = r.u32();
  const std::uint64_t count = r.u64();
  if (d_fv == 0 || d_bev == 0) {
    if (count != 0) throw Error(ErrorCode::CorruptStore, "records present without dimensions");
  }

  EmbeddingStore store;
  store.d_fv_ = d_fv;
  store.d_bev_ = d_bev;
  const std::size_t d_cat = static_cast<std::size_t>(d_fv) + d_bev;
  if (count > 0 && (r.remaining() - 4) / (4 + 4 * d_cat) < count) {
    throw Error(ErrorCode::CorruptStore, "store file is truncated");
  }
  store.data_.reserve(count * d_cat);
  std::vector<float> row(d_cat);
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::uint32_t id_len = r.u32();
    const auto id = r.take(id_len);
    for (std::size_t k = 0; k < d_cat; ++k) row[k] = std::bit_cast<float>(r.u32());
    std::string scene_id(id.begin(), id.end());
    if (store.index_.contains(scene_id)) {
      throw Error(ErrorCode::CorruptStore, "duplicate scene id in store file");
    }
    store.append(std::move(scene_id), std::span(row).first(d_fv), std::span(row).subspan(d_fv));
  }
  if (r.remaining() != 4) throw Error(ErrorCode::CorruptStore, "trailing bytes in store file");
  store.sealed_ = true;
  return store;
}

void EmbeddingStore::persist(const std::filesystem::path& path) const {
  write_file(path, serialize());
}

EmbeddingStore EmbeddingStore::open(const std::filesystem::path& path) {
  return deserialize(read_file(path));
}

}  // namespace rad
