#pragma once

#include "sda/core.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace sda {

/// Bloom filter over the keys of one array (not key/version pairs).
/// Probe positions come from double hashing a salted 64-bit key hash.
class BloomFilter {
 public:
  BloomFilter() = default;
  BloomFilter(std::uint64_t distinct_keys, std::uint32_t bits_per_key, std::uint32_t hashes, std::uint64_t salt);

  void add(std::string_view key) noexcept;
  bool may_contain(std::string_view key) const noexcept;

  std::uint64_t bit_count() const noexcept { return bits_; }
  std::uint32_t hash_count() const noexcept { return hashes_; }
  std::uint64_t salt() const noexcept { return salt_; }

  /// hashes u32 | salt u64 | bits u64 | bitmap bytes
  void serialize(std::string& out) const;
  static BloomFilter deserialize(ByteReader& in);

 private:
  std::uint64_t hash(std::string_view key) const noexcept;

  std::uint64_t bits_ = 0;
  std::uint32_t hashes_ = 0;
  std::uint64_t salt_ = 0;
  std::vector<std::uint8_t> bitmap_;
};

}  // namespace sda
