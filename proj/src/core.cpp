#include "sda/core.hpp"

#include <zlib.h>

#include <charconv>
#include <cstring>
#include <numeric>

namespace sda {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid argument";
    case ErrorCode::unknown_version: return "unknown version";
    case ErrorCode::deleted_version: return "deleted version";
    case ErrorCode::precondition: return "precondition violated";
    case ErrorCode::out_of_space: return "out of space";
    case ErrorCode::corruption: return "corruption";
    case ErrorCode::io_error: return "io error";
    case ErrorCode::unrecoverable: return "unrecoverable";
  }
  return "unknown error";
}

std::strong_ordering entry_order(const Entry& a, const Entry& b) noexcept {
  // std::string compares char_traits<char>, which is unsigned-bytewise (memcmp).
  if (auto c = a.key.compare(b.key); c != 0) {
    return c < 0 ? std::strong_ordering::less : std::strong_ordering::greater;
  }
  return a.version <=> b.version;
}

void validate_key(std::string_view key) {
  if (key.empty() || key.size() > kMaxKeyBytes) {
    throw Error(ErrorCode::invalid_argument, "key length must be 1.." + std::to_string(kMaxKeyBytes));
  }
}

void validate_value(std::string_view value) {
  if (value.size() > kMaxValueBytes) {
    throw Error(ErrorCode::invalid_argument, "value length must be <= " + std::to_string(kMaxValueBytes));
  }
}

std::size_t encoded_size(const Entry& e) noexcept {
  return encoded_size(e.key.size(), e.payload.bytes().size());
}

void encode_entry(const Entry& e, std::string& out) {
  put_u16(out, static_cast<std::uint16_t>(e.key.size()));
  put_u64(out, e.version.value);
  put_u8(out, e.payload.is_tombstone() ? 1 : 0);
  put_u32(out, static_cast<std::uint32_t>(e.payload.bytes().size()));
  put_u64(out, e.stamp);
  put_bytes(out, e.key);
  put_bytes(out, e.payload.bytes());
}

std::size_t decode_entry(std::span<const std::uint8_t> in, Entry& out) {
  ByteReader r(in);
  const auto key_len = r.u16();
  out.version = VersionId{r.u64()};
  const auto flags = r.u8();
  const auto value_len = r.u32();
  out.stamp = r.u64();
  if (key_len == 0 || key_len > kMaxKeyBytes || value_len > kMaxValueBytes) {
    throw Error(ErrorCode::corruption, "entry record has invalid lengths");
  }
  out.key = r.bytes(key_len);
  if (flags & 1) {
    if (value_len != 0) throw Error(ErrorCode::corruption, "tombstone with value bytes");
    out.payload = Payload::tombstone();
  } else {
    out.payload = Payload::value(r.bytes(value_len));
  }
  return r.position();
}

void put_u8(std::string& out, std::uint8_t v) { out.push_back(static_cast<char>(v)); }

void put_u16(std::string& out, std::uint16_t v) {
  for (int i = 0; i < 2; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_bytes(std::string& out, std::string_view bytes) { out.append(bytes); }

void ByteReader::need(std::size_t n) const {
  if (remaining() < n) throw Error(ErrorCode::corruption, "record truncated");
}

std::uint8_t ByteReader::u8() {
  need(1);
  return data_[pos_++];
}

std::uint16_t ByteReader::u16() {
  need(2);
  std::uint16_t v = static_cast<std::uint16_t>(data_[pos_] | (data_[pos_ + 1] << 8));
  pos_ += 2;
  return v;
}

std::uint32_t ByteReader::u32() {
  need(4);
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | data_[pos_ + i];
  pos_ += 4;
  return v;
}

std::uint64_t ByteReader::u64() {
  need(8);
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | data_[pos_ + i];
  pos_ += 8;
  return v;
}

std::string ByteReader::bytes(std::size_t n) {
  need(n);
  std::string s(reinterpret_cast<const char*>(data_.data() + pos_), n);
  pos_ += n;
  return s;
}

void ByteReader::skip(std::size_t n) {
  need(n);
  pos_ += n;
}

std::uint32_t crc32(std::span<const std::uint8_t> data) noexcept {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in bounded pieces.
  std::size_t off = 0;
  while (off < data.size()) {
    const std::size_t n = std::min<std::size_t>(data.size() - off, 1u << 30);
    crc = ::crc32(crc, data.data() + off, static_cast<uInt>(n));
    off += n;
  }
  return static_cast<std::uint32_t>(crc);
}

std::uint32_t crc32(std::string_view data) noexcept {
  return crc32(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(data.data()), data.size()));
}

Fraction Fraction::parse(std::string_view text) {
  auto parse_u64 = [&](std::string_view s) {
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) {
      throw Error(ErrorCode::invalid_argument, "bad fraction: " + std::string(text));
    }
    return v;
  };
  Fraction f;
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    f.num = parse_u64(text.substr(0, slash));
    f.den = parse_u64(text.substr(slash + 1));
  } else if (auto dot = text.find('.'); dot != std::string_view::npos) {
    const auto whole = text.substr(0, dot);
    auto frac = text.substr(dot + 1);
    if (frac.size() > 12) frac = frac.substr(0, 12);
    std::uint64_t den = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
    f.num = (whole.empty() ? 0 : parse_u64(whole)) * den + (frac.empty() ? 0 : parse_u64(frac));
    f.den = den;
  } else {
    f.num = parse_u64(text);
    f.den = 1;
  }
  if (f.den == 0) throw Error(ErrorCode::invalid_argument, "fraction with zero denominator");
  const auto g = std::gcd(f.num, f.den);
  if (g > 1) {
    f.num /= g;
    f.den /= g;
  }
  return f;
}

}  // namespace sda
