#include "sda/manifest.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

namespace sda {

namespace {

constexpr std::uint64_t kManifestMagic = 0x31494e414d414453ULL;  // "SDAMANI1"
constexpr std::uint8_t kManifestFormat = 1;

void put_extents(std::string& out, const std::vector<Extent>& extents) {
  put_u64(out, extents.size());
  for (const auto& e : extents) {
    put_u64(out, e.start);
    put_u64(out, e.length);
  }
}

std::vector<Extent> get_extents(ByteReader& r) {
  const auto n = r.u64();
  if (n > r.remaining() / 16) throw Error(ErrorCode::corruption, "extent list longer than record");
  std::vector<Extent> out;
  out.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    Extent e;
    e.start = r.u64();
    e.length = r.u64();
    out.push_back(e);
  }
  return out;
}

void write_fd(const std::filesystem::path& path, std::string_view bytes) {
  const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  if (fd < 0) throw Error(ErrorCode::io_error, "open " + path.string() + ": " + std::strerror(errno));
  std::size_t done = 0;
  while (done < bytes.size()) {
    const auto n = ::write(fd, bytes.data() + done, bytes.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      ::close(fd);
      throw Error(ErrorCode::io_error, "write " + path.string() + ": " + std::strerror(errno));
    }
    done += static_cast<std::size_t>(n);
  }
  const bool synced = ::fdatasync(fd) == 0;
  ::close(fd);
  if (!synced) throw Error(ErrorCode::io_error, "fdatasync " + path.string());
}

struct Pointer {
  std::uint64_t epoch = 0;
  std::uint8_t slot = 0;
};

std::optional<Pointer> decode_pointer(const std::string& bytes) {
  if (bytes.size() != 13) return std::nullopt;
  ByteReader r(bytes);
  Pointer p;
  p.epoch = r.u64();
  p.slot = r.u8();
  const auto crc = r.u32();
  if (crc != crc32(std::string_view(bytes).substr(0, 9)) || p.slot > 1 || p.epoch % 2 != p.slot) return std::nullopt;
  return p;
}

}  // namespace

std::string Manifest::encode() const {
  std::string out;
  put_u64(out, kManifestMagic);
  put_u8(out, kManifestFormat);
  put_u64(out, epoch);

  put_u32(out, config.block_size);
  put_u64(out, config.chunk_bytes);
  put_u32(out, config.bloom_bits_per_key);
  put_u32(out, config.bloom_hashes);
  put_u64(out, config.flush_entries);
  put_u64(out, config.delta_min.num);
  put_u64(out, config.delta_min.den);
  put_u64(out, config.device_blocks);

  std::string tree_bytes;
  tree.serialize(tree_bytes);
  put_u64(out, tree_bytes.size());
  out += tree_bytes;

  put_u64(out, next_seq);
  put_u64(out, next_stamp);

  put_u64(out, arrays.size());
  for (const auto& a : arrays) {
    put_u64(out, a.seq);
    put_u32(out, a.level);
    put_u32(out, static_cast<std::uint32_t>(a.tag.size()));
    for (auto v : a.tag) put_u64(out, v.value);
    put_u64(out, a.entry_count);
    put_extents(out, a.extents);
  }
  put_extents(out, free_list);
  put_u32(out, crc32(out));
  return out;
}

Manifest Manifest::decode(std::string_view bytes) {
  if (bytes.size() < 4) throw Error(ErrorCode::corruption, "manifest truncated");
  const auto body = bytes.substr(0, bytes.size() - 4);
  if (ByteReader(bytes.substr(bytes.size() - 4)).u32() != crc32(body)) {
    throw Error(ErrorCode::corruption, "manifest checksum mismatch");
  }
  ByteReader r(body);
  if (r.u64() != kManifestMagic) throw Error(ErrorCode::corruption, "bad manifest magic");
  if (r.u8() != kManifestFormat) throw Error(ErrorCode::corruption, "unsupported manifest format");
  Manifest m;
  m.epoch = r.u64();
  m.config.block_size = r.u32();
  m.config.chunk_bytes = r.u64();
  m.config.bloom_bits_per_key = r.u32();
  m.config.bloom_hashes = r.u32();
  m.config.flush_entries = r.u64();
  m.config.delta_min.num = r.u64();
  m.config.delta_min.den = r.u64();
  m.config.device_blocks = r.u64();

  const auto tree_len = r.u64();
  const auto tree_bytes = r.bytes(tree_len);
  ByteReader tr(tree_bytes);
  m.tree = VersionTree::deserialize(tr);

  m.next_seq = r.u64();
  m.next_stamp = r.u64();

  const auto n = r.u64();
  for (std::uint64_t i = 0; i < n; ++i) {
    ArrayDescriptor a;
    a.seq = r.u64();
    a.level = r.u32();
    const auto tags = r.u32();
    std::vector<VersionId> ids;
    for (std::uint32_t t = 0; t < tags; ++t) ids.push_back(VersionId{r.u64()});
    a.tag = VersionSet(std::move(ids));
    a.entry_count = r.u64();
    a.extents = get_extents(r);
    m.arrays.push_back(std::move(a));
  }
  m.free_list = get_extents(r);
  if (r.remaining() != 0) throw Error(ErrorCode::corruption, "trailing bytes in manifest");
  return m;
}

std::vector<Extent> Manifest::referenced_extents() const {
  std::vector<Extent> out;
  for (const auto& a : arrays) out.insert(out.end(), a.extents.begin(), a.extents.end());
  return out;
}

std::optional<std::string> RamMetaStore::read(const std::string& name) const {
  std::lock_guard lock(mu_);
  auto it = records_.find(name);
  if (it == records_.end()) return std::nullopt;
  return it->second;
}

void RamMetaStore::write(const std::string& name, std::string_view bytes) {
  std::lock_guard lock(mu_);
  records_[name] = std::string(bytes);
}

DirMetaStore::DirMetaStore(std::filesystem::path dir) : dir_(std::move(dir)) {}

std::optional<std::string> DirMetaStore::read(const std::string& name) const {
  std::ifstream in(dir_ / name, std::ios::binary);
  if (!in) return std::nullopt;
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void DirMetaStore::write(const std::string& name, std::string_view bytes) {
  write_fd(dir_ / name, bytes);
}

void DirMetaStore::replace(const std::string& name, std::string_view bytes) {
  const auto tmp = dir_ / (name + ".tmp");
  write_fd(tmp, bytes);
  std::error_code ec;
  std::filesystem::rename(tmp, dir_ / name, ec);
  if (ec) throw Error(ErrorCode::io_error, "rename " + tmp.string() + ": " + ec.message());
}

void CrashInjector::hit(const char* point) {
  if (fires(point)) throw SimulatedCrash{point};
}

bool CrashInjector::fires(const char* point) {
  ++count_;
  last_ = point;
  return target_ != 0 && count_ == target_;
}

std::string ManifestLog::encode_pointer(std::uint64_t epoch, std::uint8_t slot) {
  std::string out;
  put_u64(out, epoch);
  put_u8(out, slot);
  put_u32(out, crc32(out));
  return out;
}

void ManifestLog::commit(Manifest& m, CrashInjector* injector) {
  m.epoch = epoch_ + 1;
  const auto slot = static_cast<std::uint8_t>(m.epoch % 2);
  const auto bytes = m.encode();
  if (injector) {
    injector->hit("before manifest write");
    if (injector->fires("torn manifest write")) {
      meta_->write(kSlotNames[slot], std::string_view(bytes).substr(0, bytes.size() / 2));
      throw SimulatedCrash{"torn manifest write"};
    }
  }
  meta_->write(kSlotNames[slot], bytes);
  if (injector) injector->hit("before pointer switch");
  meta_->replace(kPointerName, encode_pointer(m.epoch, slot));
  epoch_ = m.epoch;
  if (injector) injector->hit("after pointer switch");
}

ManifestLog::Recovered ManifestLog::recover(const MetaStore& meta) {
  Recovered out;
  std::optional<Manifest> slots[2];
  for (int s = 0; s < 2; ++s) {
    const auto bytes = meta.read(kSlotNames[s]);
    if (!bytes) continue;
    try {
      auto m = Manifest::decode(*bytes);
      if (m.epoch % 2 != static_cast<std::uint64_t>(s)) throw Error(ErrorCode::corruption, "epoch in wrong slot");
      slots[s] = std::move(m);
    } catch (const Error& e) {
      out.notes.push_back(std::string(kSlotNames[s]) + " invalid: " + e.what());
    }
  }
  std::optional<Pointer> pointer;
  if (const auto bytes = meta.read(kPointerName)) {
    pointer = decode_pointer(*bytes);
    if (!pointer) out.notes.push_back("epoch pointer invalid");
  } else {
    out.notes.push_back("epoch pointer missing");
  }

  if (pointer) {
    auto& named = slots[pointer->slot];
    if (named && named->epoch == pointer->epoch) {
      out.manifest = std::move(*named);
      return out;
    }
    out.notes.push_back("pointed-to manifest (epoch " + std::to_string(pointer->epoch) + ") unusable");
    auto& other = slots[1 - pointer->slot];
    if (other && other->epoch < pointer->epoch) {
      out.notes.push_back("fell back to epoch " + std::to_string(other->epoch));
      out.manifest = std::move(*other);
      return out;
    }
    throw Error(ErrorCode::unrecoverable, "no valid manifest at or before epoch " + std::to_string(pointer->epoch));
  }
  int best = -1;
  for (int s = 0; s < 2; ++s) {
    if (slots[s] && (best < 0 || slots[s]->epoch > slots[best]->epoch)) best = s;
  }
  if (best < 0) throw Error(ErrorCode::unrecoverable, "no valid manifest");
  out.notes.push_back("using highest valid slot, epoch " + std::to_string(slots[best]->epoch));
  out.manifest = std::move(*slots[best]);
  return out;
}

StorageEnv StorageEnv::ram(std::uint32_t block_size, std::uint64_t capacity) {
  return {std::make_shared<RamDevice>(block_size, capacity), std::make_shared<RamMetaStore>()};
}

StorageEnv StorageEnv::create_dir(const std::filesystem::path& dir, std::uint32_t block_size, std::uint64_t capacity) {
  std::filesystem::create_directories(dir);
  for (const char* name : {"device.blk", "MANIFEST.A", "MANIFEST.B", "EPOCH", "EPOCH.tmp"}) {
    std::filesystem::remove(dir / name);
  }
  return {std::make_shared<FileDevice>(dir / "device.blk", block_size, capacity),
          std::make_shared<DirMetaStore>(dir)};
}

StorageEnv StorageEnv::open_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::exists(dir / "device.blk")) {
    throw Error(ErrorCode::io_error, "no device.blk in " + dir.string());
  }
  auto meta = std::make_shared<DirMetaStore>(dir);
  const auto rec = ManifestLog::recover(*meta);
  const auto& c = rec.manifest.config;
  return {std::make_shared<FileDevice>(dir / "device.blk", c.block_size, c.device_blocks), meta};
}

}  // namespace sda
