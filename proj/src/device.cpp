#include "sda/device.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <mutex>

namespace sda {

BlockDevice::BlockDevice(std::uint32_t block_size, std::uint64_t capacity)
    : block_size_(block_size), capacity_(capacity) {
  if (block_size < 64) throw Error(ErrorCode::invalid_argument, "block size must be >= 64 bytes");
  if (capacity == 0) throw Error(ErrorCode::invalid_argument, "device capacity must be >= 1 block");
}

void BlockDevice::check(std::uint64_t addr, std::size_t len) const {
  if (addr >= capacity_) {
    throw Error(ErrorCode::io_error, "block address " + std::to_string(addr) + " beyond capacity");
  }
  if (len > block_size_) throw Error(ErrorCode::io_error, "transfer larger than a block");
}

bool BlockDevice::advance(IoStream* stream, std::uint64_t addr) noexcept {
  if (!stream) return false;
  const bool seq = stream->last != UINT64_MAX && stream->last + 1 == addr;
  stream->last = addr;
  return seq;
}

void BlockDevice::read(std::uint64_t addr, std::span<std::uint8_t> out, IoStream* stream) const {
  check(addr, out.size());
  if (out.size() != block_size_) throw Error(ErrorCode::io_error, "read buffer must be one block");
  do_read(addr, out);
  const bool seq = advance(stream, addr);
  if (stream && !stream->accounted) return;
  reads_.fetch_add(1, std::memory_order_relaxed);
  if (seq) sequential_reads_.fetch_add(1, std::memory_order_relaxed);
}

void BlockDevice::write(std::uint64_t addr, std::span<const std::uint8_t> data, IoStream* stream) {
  check(addr, data.size());
  do_write(addr, data);
  const bool seq = advance(stream, addr);
  if (stream && !stream->accounted) return;
  writes_.fetch_add(1, std::memory_order_relaxed);
  if (seq) sequential_writes_.fetch_add(1, std::memory_order_relaxed);
}

IoStats BlockDevice::stats() const noexcept {
  return {reads_.load(), writes_.load(), sequential_reads_.load(), sequential_writes_.load()};
}

std::size_t RamDevice::resident_blocks() const {
  std::shared_lock lock(mu_);
  return blocks_.size();
}

void RamDevice::do_read(std::uint64_t addr, std::span<std::uint8_t> out) const {
  std::shared_lock lock(mu_);
  auto it = blocks_.find(addr);
  std::size_t n = 0;
  if (it != blocks_.end()) {
    n = it->second.size();
    std::memcpy(out.data(), it->second.data(), n);
  }
  std::fill(out.begin() + static_cast<std::ptrdiff_t>(n), out.end(), 0);
}

void RamDevice::do_write(std::uint64_t addr, std::span<const std::uint8_t> data) {
  std::unique_lock lock(mu_);
  auto& b = blocks_[addr];
  b.assign(data.begin(), data.end());
  // Trailing zeros are implicit.
  while (!b.empty() && b.back() == 0) b.pop_back();
  b.shrink_to_fit();
}

FileDevice::FileDevice(const std::filesystem::path& path, std::uint32_t block_size, std::uint64_t capacity)
    : BlockDevice(block_size, capacity) {
  fd_ = ::open(path.c_str(), O_RDWR | O_CREAT, 0644);
  if (fd_ < 0) throw Error(ErrorCode::io_error, "open " + path.string() + ": " + std::strerror(errno));
  const auto bytes = static_cast<off_t>(capacity * block_size);
  struct stat st {};
  if (::fstat(fd_, &st) == 0 && st.st_size < bytes) {
    if (::ftruncate(fd_, bytes) != 0) {
      ::close(fd_);
      throw Error(ErrorCode::io_error, "ftruncate " + path.string() + ": " + std::strerror(errno));
    }
  }
}

FileDevice::~FileDevice() {
  if (fd_ >= 0) ::close(fd_);
}

void FileDevice::sync() {
  if (::fdatasync(fd_) != 0) throw Error(ErrorCode::io_error, std::string("fdatasync: ") + std::strerror(errno));
}

void FileDevice::do_read(std::uint64_t addr, std::span<std::uint8_t> out) const {
  const auto off = static_cast<off_t>(addr * block_size());
  std::size_t done = 0;
  while (done < out.size()) {
    const auto n = ::pread(fd_, out.data() + done, out.size() - done, off + static_cast<off_t>(done));
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorCode::io_error, std::string("pread: ") + std::strerror(errno));
    }
    if (n == 0) {
      std::fill(out.begin() + static_cast<std::ptrdiff_t>(done), out.end(), 0);
      return;
    }
    done += static_cast<std::size_t>(n);
  }
}

void FileDevice::do_write(std::uint64_t addr, std::span<const std::uint8_t> data) {
  std::vector<std::uint8_t> block(block_size(), 0);
  std::memcpy(block.data(), data.data(), data.size());
  const auto off = static_cast<off_t>(addr * block_size());
  std::size_t done = 0;
  while (done < block.size()) {
    const auto n = ::pwrite(fd_, block.data() + done, block.size() - done, off + static_cast<off_t>(done));
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorCode::io_error, std::string("pwrite: ") + std::strerror(errno));
    }
    done += static_cast<std::size_t>(n);
  }
}

}  // namespace sda
