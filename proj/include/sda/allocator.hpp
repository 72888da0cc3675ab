#pragma once

#include "sda/core.hpp"

#include <cstdint>
#include <map>
#include <span>
#include <vector>

namespace sda {

struct Extent {
  std::uint64_t start = 0;
  std::uint64_t length = 0;

  std::uint64_t end() const noexcept { return start + length; }
  bool operator==(const Extent&) const = default;
};

std::uint64_t total_blocks(std::span<const Extent> extents) noexcept;

/// First-fit extent allocator with a chunking fallback.
///
/// Every block is in exactly one of three states: free, referenced (named
/// by the committed manifest), or allocated-unreferenced (freshly written
/// arrays awaiting commit, and retired arrays awaiting release).
class Allocator {
 public:
  Allocator(std::uint64_t capacity, std::uint64_t chunk_blocks);

  /// Free space is the complement of `referenced`; used by recovery.
  static Allocator rebuild(std::uint64_t capacity, std::uint64_t chunk_blocks,
                           std::span<const Extent> referenced);

  /// A single extent from the first free region that fits; otherwise
  /// chunk-sized pieces gathered across regions in address order.
  std::vector<Extent> allocate(std::uint64_t blocks);

  /// Returns blocks to the free list. Throws on double free or on blocks
  /// still referenced by the committed manifest.
  void release(std::span<const Extent> extents);

  void mark_referenced(std::span<const Extent> extents);
  void unreference(std::span<const Extent> extents);

  std::uint64_t capacity() const noexcept { return capacity_; }
  std::uint64_t chunk_blocks() const noexcept { return chunk_blocks_; }
  std::uint64_t free_blocks() const noexcept { return free_blocks_; }
  std::uint64_t referenced_blocks() const noexcept { return referenced_blocks_; }
  std::uint64_t unreferenced_blocks() const noexcept {
    return capacity_ - free_blocks_ - referenced_blocks_;
  }
  std::uint64_t peak_unreferenced() const noexcept { return peak_unreferenced_; }
  void reset_peak() noexcept { peak_unreferenced_ = unreferenced_blocks(); }

  std::vector<Extent> free_regions() const;
  std::vector<Extent> referenced_regions() const;

  /// Empty when free ∩ referenced = ∅ and both maps are well formed.
  std::vector<std::string> check() const;

 private:
  using RegionMap = std::map<std::uint64_t, std::uint64_t>;  // start -> length

  static bool overlaps(const RegionMap& map, const Extent& e);
  static void insert_coalesced(RegionMap& map, Extent e);
  static void erase_range(RegionMap& map, const Extent& e);
  void note_peak() noexcept;

  std::uint64_t capacity_;
  std::uint64_t chunk_blocks_;
  RegionMap free_;
  RegionMap referenced_;
  std::uint64_t free_blocks_ = 0;
  std::uint64_t referenced_blocks_ = 0;
  std::uint64_t peak_unreferenced_ = 0;
};

}  // namespace sda
