#pragma once

// Difference-based model exchange.
//
// Sparse frame (little-endian):
//   u32 magic "FS3A" | u32 base version | u32 length | u32 nnz |
//   nnz x u32 index | nnz x f64 value | u64 checksum
// The checksum is FNV-1a over the little-endian bytes of the vector the
// receiver reconstructs (base + delta).
//
// Dense frame: u32 magic "FS3D" | u32 version | u32 length | u32 reserved |
//   length x f64 value

#include <cstddef>
#include <cstdint>
#include <deque>
#include <span>
#include <utility>
#include <vector>

namespace feds3a {

inline constexpr std::uint32_t kSparseMagic = 0x41335346;  // "FS3A"
inline constexpr std::uint32_t kDenseMagic = 0x44335346;   // "FS3D"
inline constexpr std::size_t kSparseHeaderBytes = 24;       // 16 header + 8 checksum
inline constexpr std::size_t kDenseHeaderBytes = 16;
inline constexpr double kDefaultZeroThreshold = 1e-8;

struct SparseDelta {
  std::uint32_t base_version = 0;
  std::uint32_t length = 0;
  std::vector<std::uint32_t> indices;
  std::vector<double> values;
  std::uint64_t checksum = 0;

  std::size_t nnz() const { return indices.size(); }
  bool operator==(const SparseDelta&) const = default;
};

std::uint64_t fnv1a(std::span<const double> values);

// Keeps entries of (updated - base) whose magnitude exceeds zero_threshold.
SparseDelta encode(std::span<const double> updated, std::span<const double> base,
                   std::uint32_t base_version, double zero_threshold = kDefaultZeroThreshold);

// base + delta; verifies the checksum.
std::vector<double> decode(const SparseDelta& delta, std::span<const double> base);

std::vector<std::uint8_t> serialize(const SparseDelta& delta);
SparseDelta deserialize_sparse(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> serialize_dense(std::span<const double> values, std::uint32_t version);
std::pair<std::uint32_t, std::vector<double>> deserialize_dense(std::span<const std::uint8_t> bytes);

std::size_t dense_byte_cost(std::size_t length);
std::size_t sparse_byte_cost(std::size_t nnz);

// Bytes actually sent for one transfer (the codec picks the cheaper framing)
// next to the dense equivalent.
struct TransferCost {
  std::size_t sent = 0;
  std::size_t dense = 0;
  bool fell_back_to_dense = false;
};
TransferCost transfer_cost(const SparseDelta& delta);
TransferCost dense_transfer_cost(std::size_t length);

// Receiver-side store of distributed global models, keeping the newest
// `depth` versions.
class BaseCache {
 public:
  explicit BaseCache(std::size_t depth) : depth_(depth) {}

  void put(std::uint32_t version, std::vector<double> values);
  bool contains(std::uint32_t version) const;
  // Throws VersionError when the version was never cached or has been evicted.
  const std::vector<double>& get(std::uint32_t version) const;
  std::vector<double> decode(const SparseDelta& delta) const;
  std::size_t size() const { return entries_.size(); }

 private:
  std::size_t depth_;
  std::deque<std::pair<std::uint32_t, std::vector<double>>> entries_;
};

}  // namespace feds3a
