#include "sda/array_file.hpp"

#include <algorithm>
#include <cstring>

#include <zlib.h>

namespace sda {

namespace {

constexpr std::uint64_t kArrayMagic = 0x3130594152524153ULL;  // "SARRAY01"
constexpr std::uint8_t kArrayFormat = 1;

std::uint64_t salt_for(std::uint64_t seq) noexcept {
  std::uint64_t z = seq + 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t blocks_for(std::uint64_t bytes, std::uint32_t block) noexcept {
  return (bytes + block - 1) / block;
}

std::span<const std::uint8_t> as_bytes(const std::string& s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

struct HeaderFields {
  std::uint32_t level = 0;
  std::uint64_t seq = 0;
  std::uint64_t entry_count = 0;
  std::uint32_t block_size = 0;
  VersionSet tag;
  std::uint64_t entry_blocks = 0;
  std::uint64_t index_bytes = 0;
  std::uint64_t bloom_bytes = 0;
  std::uint32_t entry_crc = 0;
  std::uint32_t index_crc = 0;
  std::uint32_t bloom_crc = 0;
};

std::string encode_header(const HeaderFields& h) {
  std::string body;
  put_u8(body, kArrayFormat);
  put_u8(body, static_cast<std::uint8_t>(h.level));
  put_u16(body, 0);
  put_u64(body, h.seq);
  put_u64(body, h.entry_count);
  put_u32(body, h.block_size);
  put_u32(body, static_cast<std::uint32_t>(h.tag.size()));
  for (auto v : h.tag) put_u64(body, v.value);
  put_u64(body, h.entry_blocks);
  put_u64(body, h.index_bytes);
  put_u64(body, h.bloom_bytes);
  put_u32(body, h.entry_crc);
  put_u32(body, h.index_crc);
  put_u32(body, h.bloom_crc);

  std::string out;
  put_u64(out, kArrayMagic);
  put_u32(out, static_cast<std::uint32_t>(8 + 4 + body.size() + 4));
  out += body;
  put_u32(out, crc32(out));
  return out;
}

HeaderFields decode_header(const std::string& bytes) {
  ByteReader r(bytes);
  if (r.u64() != kArrayMagic) throw Error(ErrorCode::corruption, "bad array magic");
  const auto len = r.u32();
  if (len < 16 || len > bytes.size()) throw Error(ErrorCode::corruption, "bad array header length");
  const auto stored_crc = ByteReader(std::string_view(bytes).substr(len - 4, 4)).u32();
  if (crc32(std::string_view(bytes).substr(0, len - 4)) != stored_crc) {
    throw Error(ErrorCode::corruption, "array header checksum mismatch");
  }
  HeaderFields h;
  if (r.u8() != kArrayFormat) throw Error(ErrorCode::corruption, "unsupported array format");
  h.level = r.u8();
  r.u16();
  h.seq = r.u64();
  h.entry_count = r.u64();
  h.block_size = r.u32();
  const auto tags = r.u32();
  std::vector<VersionId> ids;
  for (std::uint32_t i = 0; i < tags; ++i) ids.push_back(VersionId{r.u64()});
  h.tag = VersionSet(std::move(ids));
  h.entry_blocks = r.u64();
  h.index_bytes = r.u64();
  h.bloom_bytes = r.u64();
  h.entry_crc = r.u32();
  h.index_crc = r.u32();
  h.bloom_crc = r.u32();
  return h;
}

}  // namespace

std::uint64_t ArrayReader::physical(std::uint64_t logical) const {
  for (const auto& e : desc_.extents) {
    if (logical < e.length) return e.start + logical;
    logical -= e.length;
  }
  throw Error(ErrorCode::corruption, "logical block beyond array extents");
}

void ArrayReader::read_block(std::uint64_t logical, std::span<std::uint8_t> out, IoStream* stream) const {
  device_->read(physical(logical), out, stream);
}

void ArrayReader::read_entry_block(std::uint64_t block, std::span<std::uint8_t> out, IoStream* stream) const {
  read_block(header_blocks_ + block, out, stream);
  if (crc32(std::span<const std::uint8_t>(out.data(), out.size())) != block_crcs_.at(block)) {
    throw Error(ErrorCode::corruption, "entry block " + std::to_string(block) + " of array " +
                                           std::to_string(desc_.seq) + " fails checksum");
  }
}

std::shared_ptr<const ArrayReader> ArrayReader::write(std::shared_ptr<BlockDevice> device, Allocator& allocator,
                                                      std::span<const Entry> sorted, const VersionSet& tag,
                                                      std::uint32_t level, std::uint64_t seq,
                                                      const ArrayBuildOptions& options) {
  if (sorted.empty()) throw Error(ErrorCode::invalid_argument, "cannot write an empty array");
  const std::uint32_t bs = device->block_size();
  std::shared_ptr<ArrayReader> a(new ArrayReader());
  a->device_ = device;

  // Entry region.
  std::string region;
  region.reserve(sorted.size() * encoded_size(sorted.front()) + bs);
  std::uint64_t used = 0;  // bytes used in the current block
  bool open = false;
  auto pad_to_next_block = [&] {
    const auto blocks = blocks_for(region.size(), bs);
    region.resize(blocks * bs, '\0');
    used = 0;
    open = false;
  };
  std::uint64_t distinct_keys = 0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const auto& e = sorted[i];
    if (i == 0 || e.key != sorted[i - 1].key) ++distinct_keys;
    const auto size = encoded_size(e);
    if (size <= bs) {
      if (used + size > bs) pad_to_next_block();
      if (!open) {
        a->fences_.push_back({region.size() / bs, i, 0, e.key, e.key});
        open = true;
      }
      encode_entry(e, region);
      used += size;
      auto& f = a->fences_.back();
      ++f.count;
      f.last_key = e.key;
    } else {
      if (used > 0) pad_to_next_block();
      a->fences_.push_back({region.size() / bs, i, 1, e.key, e.key});
      encode_entry(e, region);
      pad_to_next_block();
    }
  }
  pad_to_next_block();
  a->entry_blocks_ = region.size() / bs;
  for (std::uint64_t b = 0; b < a->entry_blocks_; ++b) {
    a->block_crcs_.push_back(crc32(std::string_view(region).substr(b * bs, bs)));
  }

  // Index region.
  std::string index;
  put_u64(index, a->fences_.size());
  for (const auto& f : a->fences_) {
    put_u64(index, f.block);
    put_u64(index, f.first_ordinal);
    put_u32(index, f.count);
    put_u16(index, static_cast<std::uint16_t>(f.first_key.size()));
    put_bytes(index, f.first_key);
    put_u16(index, static_cast<std::uint16_t>(f.last_key.size()));
    put_bytes(index, f.last_key);
  }
  put_u64(index, a->block_crcs_.size());
  for (auto c : a->block_crcs_) put_u32(index, c);

  // Bloom region.
  a->bloom_ = BloomFilter(distinct_keys, options.bloom_bits_per_key, options.bloom_hashes, salt_for(seq));
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (i == 0 || sorted[i].key != sorted[i - 1].key) a->bloom_.add(sorted[i].key);
  }
  std::string bloom;
  a->bloom_.serialize(bloom);

  HeaderFields h;
  h.level = level;
  h.seq = seq;
  h.entry_count = sorted.size();
  h.block_size = bs;
  h.tag = tag;
  h.entry_blocks = a->entry_blocks_;
  h.index_bytes = index.size();
  h.bloom_bytes = bloom.size();
  h.entry_crc = crc32(region);
  h.index_crc = crc32(index);
  h.bloom_crc = crc32(bloom);
  a->entry_crc_ = h.entry_crc;
  const std::string header = encode_header(h);
  a->header_blocks_ = blocks_for(header.size(), bs);

  const std::uint64_t total =
      a->header_blocks_ + a->entry_blocks_ + blocks_for(index.size(), bs) + blocks_for(bloom.size(), bs);
  a->desc_ = {seq, level, tag, sorted.size(), allocator.allocate(total)};

  IoStream stream;
  std::uint64_t logical = 0;
  auto emit = [&](const std::string& bytes) {
    for (std::size_t off = 0; off < bytes.size(); off += bs) {
      const auto n = std::min<std::size_t>(bs, bytes.size() - off);
      device->write(a->physical(logical++), as_bytes(bytes).subspan(off, n), &stream);
    }
  };
  emit(header);
  emit(region);
  emit(index);
  emit(bloom);
  return a;
}

std::shared_ptr<const ArrayReader> ArrayReader::open(std::shared_ptr<BlockDevice> device, ArrayDescriptor desc) {
  std::shared_ptr<ArrayReader> a(new ArrayReader());
  a->device_ = std::move(device);
  a->desc_ = std::move(desc);
  const std::uint32_t bs = a->device_->block_size();
  IoStream stream;

  std::vector<std::uint8_t> block(bs);
  a->read_block(0, block, &stream);
  std::string header(reinterpret_cast<const char*>(block.data()), bs);
  const auto header_len = ByteReader(std::string_view(header).substr(8, 4)).u32();
  a->header_blocks_ = blocks_for(header_len, bs);
  for (std::uint64_t b = 1; b < a->header_blocks_; ++b) {
    a->read_block(b, block, &stream);
    header.append(reinterpret_cast<const char*>(block.data()), bs);
  }
  const auto h = decode_header(header);
  if (h.seq != a->desc_.seq || h.entry_count != a->desc_.entry_count || h.tag != a->desc_.tag ||
      h.level != a->desc_.level || h.block_size != bs) {
    throw Error(ErrorCode::corruption, "array " + std::to_string(a->desc_.seq) + " header disagrees with manifest");
  }
  a->entry_blocks_ = h.entry_blocks;
  a->entry_crc_ = h.entry_crc;

  auto read_region = [&](std::uint64_t first, std::uint64_t bytes) {
    std::string out;
    for (std::uint64_t b = 0; b < blocks_for(bytes, bs); ++b) {
      a->read_block(first + b, block, &stream);
      out.append(reinterpret_cast<const char*>(block.data()), bs);
    }
    out.resize(bytes);
    return out;
  };
  const auto index_first = a->header_blocks_ + a->entry_blocks_;
  const auto index = read_region(index_first, h.index_bytes);
  if (crc32(index) != h.index_crc) throw Error(ErrorCode::corruption, "array index checksum mismatch");
  const auto bloom = read_region(index_first + blocks_for(h.index_bytes, bs), h.bloom_bytes);
  if (crc32(bloom) != h.bloom_crc) throw Error(ErrorCode::corruption, "array bloom checksum mismatch");

  ByteReader ir(index);
  const auto nf = ir.u64();
  for (std::uint64_t i = 0; i < nf; ++i) {
    BlockFence f;
    f.block = ir.u64();
    f.first_ordinal = ir.u64();
    f.count = ir.u32();
    f.first_key = ir.bytes(ir.u16());
    f.last_key = ir.bytes(ir.u16());
    a->fences_.push_back(std::move(f));
  }
  const auto nb = ir.u64();
  if (nb != a->entry_blocks_) throw Error(ErrorCode::corruption, "block checksum table size mismatch");
  for (std::uint64_t i = 0; i < nb; ++i) a->block_crcs_.push_back(ir.u32());

  ByteReader br(bloom);
  a->bloom_ = BloomFilter::deserialize(br);
  return a;
}

std::size_t ArrayReader::lower_fence(std::string_view key) const noexcept {
  auto it = std::partition_point(fences_.begin(), fences_.end(),
                                 [&](const BlockFence& f) { return std::string_view(f.last_key) < key; });
  return static_cast<std::size_t>(it - fences_.begin());
}

std::vector<Entry> ArrayReader::read_fence(std::size_t fence, IoStream* stream) const {
  const auto& f = fences_.at(fence);
  const std::uint32_t bs = device_->block_size();
  std::vector<std::uint8_t> buf(bs);
  read_entry_block(f.block, buf, stream);
  std::vector<Entry> out;
  out.reserve(f.count);
  if (f.count == 1) {
    ByteReader peek(std::span<const std::uint8_t>(buf.data(), kEntryHeaderBytes));
    const auto key_len = peek.u16();
    peek.skip(9);
    const auto value_len = peek.u32();
    const auto size = encoded_size(key_len, value_len);
    if (size > bs) {
      const auto blocks = blocks_for(size, bs);
      buf.resize(blocks * bs);
      for (std::uint64_t b = 1; b < blocks; ++b) {
        read_entry_block(f.block + b, std::span<std::uint8_t>(buf.data() + b * bs, bs), stream);
      }
    }
  }
  std::size_t off = 0;
  for (std::uint32_t i = 0; i < f.count; ++i) {
    Entry e;
    off += decode_entry(std::span<const std::uint8_t>(buf.data() + off, buf.size() - off), e);
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<Entry> ArrayReader::search(const Key& key, std::span<const VersionId> versions,
                                       IoStream* stream) const {
  std::vector<Entry> out;
  if (!bloom_.may_contain(key)) return out;
  for (auto i = lower_fence(key); i < fences_.size() && fences_[i].first_key <= key; ++i) {
    for (auto& e : read_fence(i, stream)) {
      if (e.key == key && std::binary_search(versions.begin(), versions.end(), e.version)) {
        out.push_back(std::move(e));
      }
    }
  }
  return out;
}

std::vector<Entry> ArrayReader::read_all(IoStream& stream, bool verify_region) const {
  std::vector<Entry> out;
  out.reserve(desc_.entry_count);
  for (std::size_t i = 0; i < fences_.size(); ++i) {
    auto part = read_fence(i, &stream);
    std::move(part.begin(), part.end(), std::back_inserter(out));
  }
  if (out.size() != desc_.entry_count) throw Error(ErrorCode::corruption, "array entry count mismatch");
  if (verify_region) {
    const std::uint32_t bs = device_->block_size();
    std::vector<std::uint8_t> buf(bs);
    uLong crc = ::crc32(0L, Z_NULL, 0);
    IoStream quiet{UINT64_MAX, false};
    for (std::uint64_t b = 0; b < entry_blocks_; ++b) {
      read_block(header_blocks_ + b, buf, &quiet);
      crc = ::crc32(crc, buf.data(), bs);
    }
    if (static_cast<std::uint32_t>(crc) != entry_crc_) {
      throw Error(ErrorCode::corruption, "entry region checksum mismatch in array " + std::to_string(desc_.seq));
    }
  }
  return out;
}

std::vector<std::string> ArrayReader::verify_header() const {
  std::vector<std::string> problems;
  try {
    auto fresh = open(device_, desc_);
    if (fresh->fences_.size() != fences_.size() || fresh->block_crcs_ != block_crcs_) {
      problems.push_back("index on device differs from the open handle");
    }
  } catch (const Error& e) {
    problems.push_back(e.what());
  }
  return problems;
}

ArrayCursor::ArrayCursor(std::shared_ptr<const ArrayReader> array, Key start, Key end)
    : array_(std::move(array)), start_(std::move(start)), end_(std::move(end)) {
  if (start_ > end_) {
    exhausted_ = true;
    return;
  }
  enter_fence(array_->lower_fence(start_));
}

void ArrayCursor::enter_fence(std::size_t fence) {
  loaded_ = false;
  entries_.clear();
  pos_ = 0;
  fence_ = fence;
  const auto fences = array_->fences();
  if (fence_ >= fences.size() || fences[fence_].first_key > end_) {
    exhausted_ = true;
    return;
  }
  bound_ = std::max(start_, fences[fence_].first_key);
}

void ArrayCursor::load() {
  if (loaded_ || exhausted_) return;
  entries_ = array_->read_fence(fence_, &stream_);
  pos_ = 0;
  while (pos_ < entries_.size() && entries_[pos_].key < start_) ++pos_;
  loaded_ = true;
  settle();
}

void ArrayCursor::settle() {
  if (pos_ >= entries_.size()) {
    enter_fence(fence_ + 1);
    return;
  }
  if (entries_[pos_].key > end_) {
    exhausted_ = true;
    loaded_ = false;
  }
}

void ArrayCursor::advance() {
  if (!loaded_ || exhausted_) return;
  ++pos_;
  settle();
}

}  // namespace sda
