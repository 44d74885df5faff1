#include "hashednets/hashing.hpp"

#include <array>
#include <limits>
#include <string>

#define XXH_INLINE_ALL
#include "xxhash.h"

#include "hashednets/error.hpp"
#include "hashednets/random.hpp"

namespace hashednets {
namespace {

constexpr std::uint64_t kMaxKey = std::numeric_limits<std::uint32_t>::max();

void put_le32(std::uint8_t* out, std::uint32_t v) {
  out[0] = static_cast<std::uint8_t>(v);
  out[1] = static_cast<std::uint8_t>(v >> 8);
  out[2] = static_cast<std::uint8_t>(v >> 16);
  out[3] = static_cast<std::uint8_t>(v >> 24);
}

void check_key(std::uint64_t i, std::uint64_t j) {
  if (i > kMaxKey || j > kMaxKey) {
    throw DimensionError("hash key (" + std::to_string(i) + ", " + std::to_string(j) +
                         ") does not fit in 32 bits");
  }
}

}  // namespace

std::uint64_t hash_key(std::uint64_t seed, std::uint32_t layer_index, std::uint64_t i,
                       std::uint64_t j) {
  check_key(i, j);
  std::array<std::uint8_t, 12> key{};
  put_le32(key.data(), layer_index);
  put_le32(key.data() + 4, static_cast<std::uint32_t>(i));
  put_le32(key.data() + 8, static_cast<std::uint32_t>(j));
  return XXH64(key.data(), key.size(), seed);
}

std::uint32_t hash_index(const HashSpec& spec, std::uint64_t i, std::uint64_t j) {
  if (spec.bucket_count == 0) throw InvalidBucketCount("bucket count must be at least 1");
  const std::uint64_t seed = spec.base_seed + 2ULL * spec.layer_index;
  return static_cast<std::uint32_t>(hash_key(seed, spec.layer_index, i, j) % spec.bucket_count);
}

int hash_sign(const HashSpec& spec, std::uint64_t i, std::uint64_t j) {
  const std::uint64_t seed = spec.base_seed + 2ULL * spec.layer_index + 1ULL;
  return (hash_key(seed, spec.layer_index, i, j) & 1ULL) == 0 ? 1 : -1;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  std::array<std::uint64_t, 2> words{master, stream};
  return XXH64(words.data(), sizeof(words), 0x5DEECE66DULL);
}

BucketAssignment BucketAssignment::seeded(HashSpec spec, bool sign_enabled) {
  if (spec.bucket_count == 0) throw InvalidBucketCount("bucket count must be at least 1");
  BucketAssignment a;
  a.spec_ = spec;
  a.seeded_ = true;
  a.sign_enabled_ = sign_enabled;
  return a;
}

BucketAssignment BucketAssignment::table(std::uint32_t bucket_count, std::size_t n_cols,
                                         std::vector<std::uint32_t> buckets,
                                         std::vector<std::int8_t> signs) {
  if (bucket_count == 0) throw InvalidBucketCount("bucket count must be at least 1");
  if (n_cols == 0 || buckets.size() % n_cols != 0) {
    throw DimensionError("bucket table size is not a multiple of the column count");
  }
  if (!signs.empty() && signs.size() != buckets.size()) {
    throw DimensionError("sign table and bucket table differ in size");
  }
  for (auto b : buckets) {
    if (b >= bucket_count) throw DimensionError("bucket table entry out of range");
  }
  for (auto s : signs) {
    if (s != 1 && s != -1) throw DimensionError("sign table entries must be +1 or -1");
  }
  BucketAssignment a;
  a.spec_ = HashSpec{0, 0, bucket_count};
  a.seeded_ = false;
  a.sign_enabled_ = !signs.empty();
  a.n_cols_ = n_cols;
  a.buckets_ = std::move(buckets);
  a.signs_ = std::move(signs);
  return a;
}

BucketAssignment BucketAssignment::injective(std::size_t n_out, std::size_t n_cols) {
  const std::size_t total = n_out * n_cols;
  if (total == 0 || total > kMaxKey) throw DimensionError("injective assignment size out of range");
  std::vector<std::uint32_t> buckets(total);
  for (std::size_t k = 0; k < total; ++k) buckets[k] = static_cast<std::uint32_t>(k);
  return table(static_cast<std::uint32_t>(total), n_cols, std::move(buckets));
}

std::uint32_t BucketAssignment::bucket(std::size_t i, std::size_t j) const {
  if (seeded_) return hash_index(spec_, i, j);
  const std::size_t k = i * n_cols_ + j;
  if (j >= n_cols_ || k >= buckets_.size()) throw DimensionError("connection outside bucket table");
  return buckets_[k];
}

int BucketAssignment::sign(std::size_t i, std::size_t j) const {
  if (!sign_enabled_) return 1;
  if (seeded_) return hash_sign(spec_, i, j);
  const std::size_t k = i * n_cols_ + j;
  if (j >= n_cols_ || k >= signs_.size()) throw DimensionError("connection outside sign table");
  return signs_[k];
}

}  // namespace hashednets
