#pragma once

#include "sda/allocator.hpp"
#include "sda/bloom.hpp"
#include "sda/core.hpp"
#include "sda/device.hpp"
#include "sda/version_tree.hpp"

#include <memory>
#include <span>
#include <string>
#include <vector>

namespace sda {

/// What the manifest records about one committed array.
struct ArrayDescriptor {
  std::uint64_t seq = 0;
  std::uint32_t level = 0;
  VersionSet tag;
  std::uint64_t entry_count = 0;
  std::vector<Extent> extents;

  bool operator==(const ArrayDescriptor&) const = default;
};

struct ArrayBuildOptions {
  std::uint32_t bloom_bits_per_key = 10;
  std::uint32_t bloom_hashes = 7;
};

/// Fence for an entry block in which at least one record starts. Records
/// never straddle blocks unless a single record is larger than a block, in
/// which case it starts on a boundary and owns the following blocks.
struct BlockFence {
  std::uint64_t block = 0;          // logical block within the entry region
  std::uint64_t first_ordinal = 0;  // index of the first record in the block
  std::uint32_t count = 0;          // records starting in the block
  Key first_key;
  Key last_key;
};

/// Open handle on an immutable array. Header, fence index and Bloom filter
/// are held in memory; entry blocks are read on demand.
///
/// Logical layout: header | entry region | index region | bloom region,
/// each region starting on a block boundary, mapped onto `extents` in order.
class ArrayReader {
 public:
  static std::shared_ptr<const ArrayReader> write(std::shared_ptr<BlockDevice> device, Allocator& allocator,
                                                  std::span<const Entry> sorted, const VersionSet& tag,
                                                  std::uint32_t level, std::uint64_t seq,
                                                  const ArrayBuildOptions& options);

  static std::shared_ptr<const ArrayReader> open(std::shared_ptr<BlockDevice> device, ArrayDescriptor desc);

  const ArrayDescriptor& descriptor() const noexcept { return desc_; }
  std::uint64_t seq() const noexcept { return desc_.seq; }
  std::uint32_t level() const noexcept { return desc_.level; }
  const VersionSet& tag() const noexcept { return desc_.tag; }
  std::uint64_t entry_count() const noexcept { return desc_.entry_count; }
  std::uint64_t entry_blocks() const noexcept { return entry_blocks_; }
  std::uint64_t total_blocks() const noexcept { return sda::total_blocks(desc_.extents); }

  bool may_contain(std::string_view key) const noexcept { return bloom_.may_contain(key); }

  /// Records with this key whose version is in `versions` (sorted).
  std::vector<Entry> search(const Key& key, std::span<const VersionId> versions, IoStream* stream = nullptr) const;

  /// Every record, in order. With `verify_region` the entry-region checksum
  /// recorded in the header is recomputed as well.
  std::vector<Entry> read_all(IoStream& stream, bool verify_region = false) const;

  std::span<const BlockFence> fences() const noexcept { return fences_; }
  /// First fence whose last key is >= key.
  std::size_t lower_fence(std::string_view key) const noexcept;
  std::vector<Entry> read_fence(std::size_t fence, IoStream* stream) const;

  /// Header fields as stored on the device, re-read and validated.
  std::vector<std::string> verify_header() const;

 private:
  ArrayReader() = default;

  std::uint64_t physical(std::uint64_t logical) const;
  void read_block(std::uint64_t logical, std::span<std::uint8_t> out, IoStream* stream) const;
  void read_entry_block(std::uint64_t block, std::span<std::uint8_t> out, IoStream* stream) const;

  std::shared_ptr<BlockDevice> device_;
  ArrayDescriptor desc_;
  std::uint64_t header_blocks_ = 0;
  std::uint64_t entry_blocks_ = 0;
  std::uint32_t entry_crc_ = 0;
  std::vector<BlockFence> fences_;
  std::vector<std::uint32_t> block_crcs_;
  BloomFilter bloom_;
};

/// Forward iterator over [start, end] of one array that defers block reads:
/// until `load()` it only knows a lower bound on its next key, taken from
/// the fence index, so merge-scans read a block only when they reach it.
class ArrayCursor {
 public:
  ArrayCursor(std::shared_ptr<const ArrayReader> array, Key start, Key end);

  bool exhausted() const noexcept { return exhausted_; }
  bool loaded() const noexcept { return loaded_; }
  /// Current key when loaded, otherwise a lower bound on it.
  const Key& probe() const noexcept { return loaded_ ? entries_[pos_].key : bound_; }
  const Entry& current() const noexcept { return entries_[pos_]; }

  void load();
  void advance();

  const ArrayReader& array() const noexcept { return *array_; }

 private:
  void settle();
  void enter_fence(std::size_t fence);

  std::shared_ptr<const ArrayReader> array_;
  Key start_;
  Key end_;
  IoStream stream_;
  std::size_t fence_ = 0;
  std::vector<Entry> entries_;
  std::size_t pos_ = 0;
  Key bound_;
  bool loaded_ = false;
  bool exhausted_ = false;
};

}  // namespace sda
