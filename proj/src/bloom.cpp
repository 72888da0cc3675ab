#include "sda/bloom.hpp"

#include <algorithm>

namespace sda {

namespace {

std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

BloomFilter::BloomFilter(std::uint64_t distinct_keys, std::uint32_t bits_per_key, std::uint32_t hashes,
                         std::uint64_t salt)
    : bits_(std::max<std::uint64_t>(64, distinct_keys * bits_per_key)),
      hashes_(std::max<std::uint32_t>(1, hashes)),
      salt_(salt),
      bitmap_((bits_ + 7) / 8, 0) {}

std::uint64_t BloomFilter::hash(std::string_view key) const noexcept {
  // FNV-1a over the bytes, then a splitmix finalizer keyed by the salt.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : key) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return mix64(h ^ salt_);
}

void BloomFilter::add(std::string_view key) noexcept {
  const auto h1 = hash(key);
  const auto h2 = mix64(h1) | 1;
  for (std::uint32_t i = 0; i < hashes_; ++i) {
    const auto bit = (h1 + i * h2) % bits_;
    bitmap_[bit / 8] |= static_cast<std::uint8_t>(1u << (bit % 8));
  }
}

bool BloomFilter::may_contain(std::string_view key) const noexcept {
  if (bits_ == 0) return true;
  const auto h1 = hash(key);
  const auto h2 = mix64(h1) | 1;
  for (std::uint32_t i = 0; i < hashes_; ++i) {
    const auto bit = (h1 + i * h2) % bits_;
    if (!(bitmap_[bit / 8] & (1u << (bit % 8)))) return false;
  }
  return true;
}

void BloomFilter::serialize(std::string& out) const {
  put_u32(out, hashes_);
  put_u64(out, salt_);
  put_u64(out, bits_);
  out.append(reinterpret_cast<const char*>(bitmap_.data()), bitmap_.size());
}

BloomFilter BloomFilter::deserialize(ByteReader& in) {
  BloomFilter f;
  f.hashes_ = in.u32();
  f.salt_ = in.u64();
  f.bits_ = in.u64();
  if (f.hashes_ == 0 || f.hashes_ > 64 || f.bits_ == 0) throw Error(ErrorCode::corruption, "bad bloom header");
  const auto bytes = in.bytes((f.bits_ + 7) / 8);
  f.bitmap_.assign(bytes.begin(), bytes.end());
  return f;
}

}  // namespace sda
