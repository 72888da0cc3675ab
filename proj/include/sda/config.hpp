#pragma once

#include "sda/core.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace sda {

/// `key = value` lines; `#` starts a comment. Duplicate keys are an error.
std::map<std::string, std::string> parse_key_values(std::string_view text);
std::map<std::string, std::string> load_key_values(const std::filesystem::path& path);

/// Store parameters. Everything here is also recorded in the manifest, so a
/// store directory can be reopened without the original config file.
struct StoreConfig {
  std::uint32_t block_size = 32768;
  std::uint64_t chunk_bytes = 10ull << 20;
  std::uint32_t bloom_bits_per_key = 10;
  std::uint32_t bloom_hashes = 7;
  std::uint64_t flush_entries = 4096;  // F
  Fraction delta_min{1, 3};
  std::uint64_t device_blocks = 1ull << 20;
  // Run maintain_level after every flush. Tests switch it off to stage
  // merges by hand.
  bool auto_maintain = true;

  std::uint64_t chunk_blocks() const noexcept {
    const auto n = chunk_bytes / block_size;
    return n == 0 ? 1 : n;
  }

  void validate() const;

  /// Consumes the keys it knows from `kv` (erasing them) and leaves the rest.
  static StoreConfig from_map(std::map<std::string, std::string>& kv);
  std::string to_text() const;
};

std::uint64_t parse_u64(std::string_view key, std::string_view text);
bool parse_bool(std::string_view key, std::string_view text);

}  // namespace sda
