#pragma once

#include "sda/core.hpp"

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <shared_mutex>
#include <span>
#include <unordered_map>
#include <vector>

namespace sda {

struct IoStats {
  std::uint64_t reads = 0;
  std::uint64_t writes = 0;
  std::uint64_t sequential_reads = 0;
  std::uint64_t sequential_writes = 0;

  IoStats operator-(const IoStats& o) const noexcept {
    return {reads - o.reads, writes - o.writes, sequential_reads - o.sequential_reads,
            sequential_writes - o.sequential_writes};
  }
  IoStats& operator+=(const IoStats& o) noexcept {
    reads += o.reads;
    writes += o.writes;
    sequential_reads += o.sequential_reads;
    sequential_writes += o.sequential_writes;
    return *this;
  }
};

/// Per-consumer IO context. A block access is sequential when its address
/// is one past the previous access of the same stream.
struct IoStream {
  std::uint64_t last = UINT64_MAX;
  bool accounted = true;
};

/// Fixed-size block device with IO accounting. Every structure in the
/// library (stratified store and CoW baseline) does its IO through here.
class BlockDevice {
 public:
  BlockDevice(std::uint32_t block_size, std::uint64_t capacity);
  virtual ~BlockDevice() = default;

  BlockDevice(const BlockDevice&) = delete;
  BlockDevice& operator=(const BlockDevice&) = delete;

  std::uint32_t block_size() const noexcept { return block_size_; }
  std::uint64_t capacity() const noexcept { return capacity_; }

  /// `out.size()` must equal block_size. Unwritten blocks read as zeros.
  void read(std::uint64_t addr, std::span<std::uint8_t> out, IoStream* stream = nullptr) const;
  /// Writes `data` (at most block_size bytes; the rest of the block is zero).
  void write(std::uint64_t addr, std::span<const std::uint8_t> data, IoStream* stream = nullptr);
  virtual void sync() {}

  IoStats stats() const noexcept;

 protected:
  virtual void do_read(std::uint64_t addr, std::span<std::uint8_t> out) const = 0;
  virtual void do_write(std::uint64_t addr, std::span<const std::uint8_t> data) = 0;

 private:
  void check(std::uint64_t addr, std::size_t len) const;
  static bool advance(IoStream* stream, std::uint64_t addr) noexcept;

  std::uint32_t block_size_;
  std::uint64_t capacity_;
  mutable std::atomic<std::uint64_t> reads_{0};
  mutable std::atomic<std::uint64_t> sequential_reads_{0};
  std::atomic<std::uint64_t> writes_{0};
  std::atomic<std::uint64_t> sequential_writes_{0};
};

/// In-memory device; only written prefixes of blocks are stored.
class RamDevice final : public BlockDevice {
 public:
  RamDevice(std::uint32_t block_size, std::uint64_t capacity) : BlockDevice(block_size, capacity) {}

  std::size_t resident_blocks() const;

 protected:
  void do_read(std::uint64_t addr, std::span<std::uint8_t> out) const override;
  void do_write(std::uint64_t addr, std::span<const std::uint8_t> data) override;

 private:
  mutable std::shared_mutex mu_;
  std::unordered_map<std::uint64_t, std::vector<std::uint8_t>> blocks_;
};

/// Device backed by a sparse file (`device.blk`).
class FileDevice final : public BlockDevice {
 public:
  FileDevice(const std::filesystem::path& path, std::uint32_t block_size, std::uint64_t capacity);
  ~FileDevice() override;

  void sync() override;

 protected:
  void do_read(std::uint64_t addr, std::span<std::uint8_t> out) const override;
  void do_write(std::uint64_t addr, std::span<const std::uint8_t> data) override;

 private:
  int fd_ = -1;
};

}  // namespace sda
