#include "sda/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace sda {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

std::map<std::string, std::string> parse_key_values(std::string_view text) {
  std::map<std::string, std::string> out;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    auto line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::invalid_argument, "config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (key.empty()) throw Error(ErrorCode::invalid_argument, "config line " + std::to_string(line_no) + ": empty key");
    if (!out.emplace(key, value).second) throw Error(ErrorCode::invalid_argument, "duplicate config key " + key);
  }
  return out;
}

std::map<std::string, std::string> load_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io_error, "cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_key_values(ss.str());
}

std::uint64_t parse_u64(std::string_view key, std::string_view text) {
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || p != text.data() + text.size()) {
    throw Error(ErrorCode::invalid_argument, std::string(key) + ": not an unsigned integer: " + std::string(text));
  }
  return v;
}

bool parse_bool(std::string_view key, std::string_view text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw Error(ErrorCode::invalid_argument, std::string(key) + ": not a boolean: " + std::string(text));
}

void StoreConfig::validate() const {
  if (block_size < 64) throw Error(ErrorCode::invalid_argument, "block_size must be >= 64");
  if (chunk_bytes == 0) throw Error(ErrorCode::invalid_argument, "chunk_size must be positive");
  if (bloom_bits_per_key == 0 || bloom_hashes == 0 || bloom_hashes > 64) {
    throw Error(ErrorCode::invalid_argument, "bloom parameters out of range");
  }
  if (flush_entries == 0) throw Error(ErrorCode::invalid_argument, "flush_entries must be positive");
  // delta_min in (0, 1/2]
  if (delta_min.num == 0 || delta_min.den == 0 || 2 * delta_min.num > delta_min.den) {
    throw Error(ErrorCode::invalid_argument, "delta_min must lie in (0, 1/2]");
  }
  if (device_blocks == 0) throw Error(ErrorCode::invalid_argument, "device_blocks must be positive");
}

StoreConfig StoreConfig::from_map(std::map<std::string, std::string>& kv) {
  StoreConfig c;
  auto take = [&](const char* key, auto&& apply) {
    if (auto it = kv.find(key); it != kv.end()) {
      apply(it->second);
      kv.erase(it);
    }
  };
  take("block_size", [&](const std::string& v) { c.block_size = static_cast<std::uint32_t>(parse_u64("block_size", v)); });
  take("chunk_size", [&](const std::string& v) { c.chunk_bytes = parse_u64("chunk_size", v); });
  take("bloom_bits_per_key",
       [&](const std::string& v) { c.bloom_bits_per_key = static_cast<std::uint32_t>(parse_u64("bloom_bits_per_key", v)); });
  take("bloom_hashes", [&](const std::string& v) { c.bloom_hashes = static_cast<std::uint32_t>(parse_u64("bloom_hashes", v)); });
  take("flush_entries", [&](const std::string& v) { c.flush_entries = parse_u64("flush_entries", v); });
  take("delta_min", [&](const std::string& v) { c.delta_min = Fraction::parse(v); });
  take("device_blocks", [&](const std::string& v) { c.device_blocks = parse_u64("device_blocks", v); });
  take("auto_maintain", [&](const std::string& v) { c.auto_maintain = parse_bool("auto_maintain", v); });
  c.validate();
  return c;
}

std::string StoreConfig::to_text() const {
  std::ostringstream os;
  os << "block_size = " << block_size << '\n'
     << "chunk_size = " << chunk_bytes << '\n'
     << "bloom_bits_per_key = " << bloom_bits_per_key << '\n'
     << "bloom_hashes = " << bloom_hashes << '\n'
     << "flush_entries = " << flush_entries << '\n'
     << "delta_min = " << delta_min.num << '/' << delta_min.den << '\n'
     << "device_blocks = " << device_blocks << '\n'
     << "auto_maintain = " << (auto_maintain ? "true" : "false") << '\n';
  return os.str();
}

}  // namespace sda
