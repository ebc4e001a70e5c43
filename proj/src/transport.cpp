#include "feds3a/transport.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <string>

#include "feds3a/error.hpp"

namespace feds3a {

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
  std::uint64_t bits;
  if constexpr (sizeof(T) == 8) {
    bits = std::bit_cast<std::uint64_t>(value);
  } else {
    bits = static_cast<std::uint64_t>(value);
  }
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint64_t raw(std::size_t width) {
    if (pos_ + width > bytes_.size()) throw CorruptionError("frame truncated");
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < width; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += width;
    return v;
  }
  std::uint32_t u32() { return static_cast<std::uint32_t>(raw(4)); }
  std::uint64_t u64() { return raw(8); }
  double f64() { return std::bit_cast<double>(raw(8)); }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

// fl(target - base) does not always satisfy fl(base + d) == target; nudge d
// by a few ulps until it does so that reconstruction is bit-exact.
double exact_step(double base, double target, double diff) {
  if (base + diff == target) return diff;
  double lo = diff, hi = diff;
  for (int i = 0; i < 4; ++i) {
    lo = std::nextafter(lo, -INFINITY);
    hi = std::nextafter(hi, INFINITY);
    if (base + lo == target) return lo;
    if (base + hi == target) return hi;
  }
  return diff;
}

}  // namespace

std::uint64_t fnv1a(std::span<const double> values) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (double v : values) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) {
      h ^= (bits >> (8 * i)) & 0xFF;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

SparseDelta encode(std::span<const double> updated, std::span<const double> base,
                   std::uint32_t base_version, double zero_threshold) {
  if (updated.size() != base.size()) {
    throw VersionError("delta base has " + std::to_string(base.size()) + " values, model has " +
                       std::to_string(updated.size()));
  }
  if (updated.size() > UINT32_MAX) throw ConfigError("model too large for the sparse frame");
  SparseDelta d;
  d.base_version = base_version;
  d.length = static_cast<std::uint32_t>(updated.size());
  std::vector<double> rebuilt(base.begin(), base.end());
  for (std::size_t k = 0; k < updated.size(); ++k) {
    const double diff = updated[k] - base[k];
    if (!std::isfinite(diff)) throw NumericError("non-finite delta at index " + std::to_string(k));
    if (std::abs(diff) > zero_threshold) {
      d.indices.push_back(static_cast<std::uint32_t>(k));
      d.values.push_back(exact_step(base[k], updated[k], diff));
      rebuilt[k] = base[k] + d.values.back();
    }
  }
  d.checksum = fnv1a(rebuilt);
  return d;
}

std::vector<double> decode(const SparseDelta& delta, std::span<const double> base) {
  if (base.size() != delta.length) {
    throw VersionError("delta length " + std::to_string(delta.length) + " does not match base length " +
                       std::to_string(base.size()));
  }
  if (delta.indices.size() != delta.values.size()) throw CorruptionError("index/value count mismatch");
  std::vector<double> out(base.begin(), base.end());
  for (std::size_t j = 0; j < delta.indices.size(); ++j) {
    if (delta.indices[j] >= delta.length || (j > 0 && delta.indices[j] <= delta.indices[j - 1])) {
      throw CorruptionError("delta indices out of range or not increasing");
    }
    out[delta.indices[j]] += delta.values[j];
  }
  if (fnv1a(out) != delta.checksum) throw CorruptionError("reconstructed model fails checksum");
  return out;
}

std::vector<std::uint8_t> serialize(const SparseDelta& delta) {
  std::vector<std::uint8_t> out;
  out.reserve(sparse_byte_cost(delta.nnz()));
  put_le<std::uint32_t>(out, kSparseMagic);
  put_le<std::uint32_t>(out, delta.base_version);
  put_le<std::uint32_t>(out, delta.length);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(delta.nnz()));
  for (auto i : delta.indices) put_le<std::uint32_t>(out, i);
  for (auto v : delta.values) put_le<double>(out, v);
  put_le<std::uint64_t>(out, delta.checksum);
  return out;
}

SparseDelta deserialize_sparse(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  if (r.u32() != kSparseMagic) throw CorruptionError("bad sparse frame magic");
  SparseDelta d;
  d.base_version = r.u32();
  d.length = r.u32();
  const std::uint32_t nnz = r.u32();
  if (nnz > d.length || bytes.size() != sparse_byte_cost(nnz)) throw CorruptionError("sparse frame size mismatch");
  d.indices.resize(nnz);
  d.values.resize(nnz);
  for (auto& i : d.indices) i = r.u32();
  for (auto& v : d.values) v = r.f64();
  d.checksum = r.u64();
  for (std::size_t j = 0; j < nnz; ++j) {
    if (d.indices[j] >= d.length || (j > 0 && d.indices[j] <= d.indices[j - 1])) {
      throw CorruptionError("delta indices out of range or not increasing");
    }
  }
  return d;
}

std::vector<std::uint8_t> serialize_dense(std::span<const double> values, std::uint32_t version) {
  std::vector<std::uint8_t> out;
  out.reserve(dense_byte_cost(values.size()));
  put_le<std::uint32_t>(out, kDenseMagic);
  put_le<std::uint32_t>(out, version);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(values.size()));
  put_le<std::uint32_t>(out, 0);
  for (auto v : values) put_le<double>(out, v);
  return out;
}

std::pair<std::uint32_t, std::vector<double>> deserialize_dense(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  if (r.u32() != kDenseMagic) throw CorruptionError("bad dense frame magic");
  const std::uint32_t version = r.u32();
  const std::uint32_t length = r.u32();
  r.u32();
  if (bytes.size() != dense_byte_cost(length)) throw CorruptionError("dense frame size mismatch");
  std::vector<double> values(length);
  for (auto& v : values) v = r.f64();
  return {version, std::move(values)};
}

std::size_t dense_byte_cost(std::size_t length) { return kDenseHeaderBytes + 8 * length; }

std::size_t sparse_byte_cost(std::size_t nnz) { return kSparseHeaderBytes + 12 * nnz; }

TransferCost transfer_cost(const SparseDelta& delta) {
  TransferCost c;
  c.dense = dense_byte_cost(delta.length);
  const std::size_t sparse = sparse_byte_cost(delta.nnz());
  c.fell_back_to_dense = sparse > c.dense;
  c.sent = c.fell_back_to_dense ? c.dense : sparse;
  return c;
}

TransferCost dense_transfer_cost(std::size_t length) {
  const std::size_t d = dense_byte_cost(length);
  return {d, d, true};
}

void BaseCache::put(std::uint32_t version, std::vector<double> values) {
  for (auto& e : entries_) {
    if (e.first == version) {
      e.second = std::move(values);
      return;
    }
  }
  entries_.emplace_back(version, std::move(values));
  while (entries_.size() > depth_) entries_.pop_front();
}

bool BaseCache::contains(std::uint32_t version) const {
  for (const auto& e : entries_) {
    if (e.first == version) return true;
  }
  return false;
}

const std::vector<double>& BaseCache::get(std::uint32_t version) const {
  for (const auto& e : entries_) {
    if (e.first == version) return e.second;
  }
  throw VersionError("base version " + std::to_string(version) + " is not in the staleness cache");
}

std::vector<double> BaseCache::decode(const SparseDelta& delta) const {
  return feds3a::decode(delta, get(delta.base_version));
}

}  // namespace feds3a
