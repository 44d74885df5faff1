#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace hashednets {

/// Identifies the hash functions of one layer.
///
/// The bucket hash is XXH64 over the 12-byte little-endian key
/// (layer_index, i, j) with seed base_seed + 2 * layer_index; the sign hash
/// uses the same key with seed base_seed + 2 * layer_index + 1. Saved models
/// depend on this encoding, so it must never change.
struct HashSpec {
  std::uint64_t base_seed = 0;
  std::uint32_t layer_index = 0;
  std::uint32_t bucket_count = 1;

  friend bool operator==(const HashSpec&, const HashSpec&) = default;
};

/// Raw XXH64 of the canonical (layer_index, i, j) key.
std::uint64_t hash_key(std::uint64_t seed, std::uint32_t layer_index, std::uint64_t i,
                       std::uint64_t j);

/// Bucket h(i, j) in [0, bucket_count). Throws InvalidBucketCount for K = 0 and
/// DimensionError if i or j does not fit in 32 bits.
std::uint32_t hash_index(const HashSpec& spec, std::uint64_t i, std::uint64_t j);

/// Sign factor xi(i, j) in {-1, +1}: +1 when the low bit of the sign hash is 0.
int hash_sign(const HashSpec& spec, std::uint64_t i, std::uint64_t j);

/// Assignment of the connections (i, j) of an n_out x n_cols matrix to buckets
/// and signs. Either computed from a HashSpec or read from an explicit table
/// (used for hand-built oracles and the collision-free reduction).
class BucketAssignment {
 public:
  static BucketAssignment seeded(HashSpec spec, bool sign_enabled = true);

  /// Row-major tables of size n_out * n_cols. signs may be empty (all +1).
  static BucketAssignment table(std::uint32_t bucket_count, std::size_t n_cols,
                                std::vector<std::uint32_t> buckets,
                                std::vector<std::int8_t> signs = {});

  /// bucket(i, j) = i * n_cols + j with sign +1; K = n_out * n_cols.
  static BucketAssignment injective(std::size_t n_out, std::size_t n_cols);

  bool is_seeded() const noexcept { return seeded_; }
  bool sign_enabled() const noexcept { return sign_enabled_; }
  std::uint32_t bucket_count() const noexcept { return spec_.bucket_count; }
  const HashSpec& spec() const noexcept { return spec_; }
  std::size_t table_cols() const noexcept { return n_cols_; }
  const std::vector<std::uint32_t>& table_buckets() const noexcept { return buckets_; }
  const std::vector<std::int8_t>& table_signs() const noexcept { return signs_; }

  std::uint32_t bucket(std::size_t i, std::size_t j) const;
  int sign(std::size_t i, std::size_t j) const;

 private:
  BucketAssignment() = default;

  HashSpec spec_;
  bool seeded_ = true;
  bool sign_enabled_ = true;
  std::size_t n_cols_ = 0;
  std::vector<std::uint32_t> buckets_;
  std::vector<std::int8_t> signs_;
};

}  // namespace hashednets
