#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sda {

enum class ErrorCode {
  invalid_argument,
  unknown_version,
  deleted_version,
  precondition,
  out_of_space,
  corruption,
  io_error,
  unrecoverable,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Identifier of a node in the version tree. Assigned densely in creation
/// order, so a child always has a larger id than its parent.
struct VersionId {
  std::uint64_t value = 0;

  constexpr auto operator<=>(const VersionId&) const = default;
};

inline constexpr VersionId kRootVersion{0};

inline constexpr std::size_t kMaxKeyBytes = 1024;
inline constexpr std::size_t kMaxValueBytes = 65535;

using Key = std::string;

/// Either a value or a tombstone. A tombstone never carries bytes.
class Payload {
 public:
  static Payload value(std::string bytes) { return Payload(false, std::move(bytes)); }
  static Payload tombstone() { return Payload(true, {}); }

  Payload() = default;

  bool is_tombstone() const noexcept { return tombstone_; }
  const std::string& bytes() const noexcept { return bytes_; }

  bool operator==(const Payload&) const = default;

 private:
  Payload(bool tomb, std::string bytes) : tombstone_(tomb), bytes_(std::move(bytes)) {}

  bool tombstone_ = false;
  std::string bytes_;
};

/// The unit of storage. `stamp` is the global write sequence of the user
/// operation that produced the payload; copies made by merges keep it, so
/// the newest payload for a (key, version) pair is always identifiable.
struct Entry {
  Key key;
  VersionId version;
  Payload payload;
  std::uint64_t stamp = 0;
};

/// Canonical order: key bytewise ascending, then version id ascending.
/// Payload and stamp are ignored.
std::strong_ordering entry_order(const Entry& a, const Entry& b) noexcept;

inline bool entry_less(const Entry& a, const Entry& b) noexcept {
  return entry_order(a, b) < 0;
}

void validate_key(std::string_view key);
void validate_value(std::string_view value);

// Record layout (all little-endian):
//   key_len u16 | version u64 | flags u8 (bit0 = tombstone) | value_len u32 |
//   stamp u64 | key bytes | value bytes
inline constexpr std::size_t kEntryHeaderBytes = 2 + 8 + 1 + 4 + 8;

std::size_t encoded_size(const Entry& e) noexcept;
inline std::size_t encoded_size(std::size_t key_len, std::size_t value_len) noexcept {
  return kEntryHeaderBytes + key_len + value_len;
}

void encode_entry(const Entry& e, std::string& out);

/// Decodes one record at the front of `in`; returns bytes consumed.
std::size_t decode_entry(std::span<const std::uint8_t> in, Entry& out);

// Little-endian helpers shared by every on-disk format.
void put_u8(std::string& out, std::uint8_t v);
void put_u16(std::string& out, std::uint16_t v);
void put_u32(std::string& out, std::uint32_t v);
void put_u64(std::string& out, std::uint64_t v);
void put_bytes(std::string& out, std::string_view bytes);

/// Bounds-checked little-endian reader; throws corruption on overrun.
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}
  explicit ByteReader(std::string_view data)
      : data_(reinterpret_cast<const std::uint8_t*>(data.data()), data.size()) {}

  std::uint8_t u8();
  std::uint16_t u16();
  std::uint32_t u32();
  std::uint64_t u64();
  std::string bytes(std::size_t n);
  void skip(std::size_t n);

  std::size_t position() const noexcept { return pos_; }
  std::size_t remaining() const noexcept { return data_.size() - pos_; }

 private:
  void need(std::size_t n) const;

  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

std::uint32_t crc32(std::span<const std::uint8_t> data) noexcept;
std::uint32_t crc32(std::string_view data) noexcept;

/// Exact rational used for density thresholds, so 1/3 compares exactly.
struct Fraction {
  std::uint64_t num = 1;
  std::uint64_t den = 3;

  /// live / total >= num / den, evaluated without rounding.
  bool satisfied_by(std::uint64_t live, std::uint64_t total) const noexcept {
    return static_cast<unsigned __int128>(live) * den >= static_cast<unsigned __int128>(num) * total;
  }
  double to_double() const noexcept { return static_cast<double>(num) / static_cast<double>(den); }

  static Fraction parse(std::string_view text);
};

}  // namespace sda

template <>
struct std::hash<sda::VersionId> {
  std::size_t operator()(const sda::VersionId& v) const noexcept {
    return std::hash<std::uint64_t>{}(v.value);
  }
};
