#include "sda/allocator.hpp"

#include <algorithm>
#include <string>

namespace sda {

std::uint64_t total_blocks(std::span<const Extent> extents) noexcept {
  std::uint64_t n = 0;
  for (const auto& e : extents) n += e.length;
  return n;
}

Allocator::Allocator(std::uint64_t capacity, std::uint64_t chunk_blocks)
    : capacity_(capacity), chunk_blocks_(std::max<std::uint64_t>(1, chunk_blocks)) {
  free_[0] = capacity;
  free_blocks_ = capacity;
}

Allocator Allocator::rebuild(std::uint64_t capacity, std::uint64_t chunk_blocks,
                             std::span<const Extent> referenced) {
  Allocator a(capacity, chunk_blocks);
  std::vector<Extent> sorted(referenced.begin(), referenced.end());
  std::sort(sorted.begin(), sorted.end(), [](const Extent& x, const Extent& y) { return x.start < y.start; });
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const auto& e = sorted[i];
    if (e.length == 0 || e.end() > capacity) throw Error(ErrorCode::corruption, "extent outside device");
    if (i > 0 && sorted[i - 1].end() > e.start) throw Error(ErrorCode::corruption, "overlapping extents");
  }
  a.free_.clear();
  a.free_blocks_ = 0;
  std::uint64_t cursor = 0;
  for (const auto& e : sorted) {
    if (e.start > cursor) insert_coalesced(a.free_, {cursor, e.start - cursor});
    cursor = e.end();
    insert_coalesced(a.referenced_, e);
    a.referenced_blocks_ += e.length;
  }
  if (cursor < capacity) insert_coalesced(a.free_, {cursor, capacity - cursor});
  a.free_blocks_ = capacity - a.referenced_blocks_;
  return a;
}

bool Allocator::overlaps(const RegionMap& map, const Extent& e) {
  auto it = map.upper_bound(e.start);
  if (it != map.begin()) {
    auto prev = std::prev(it);
    if (prev->first + prev->second > e.start) return true;
  }
  return it != map.end() && it->first < e.end();
}

void Allocator::insert_coalesced(RegionMap& map, Extent e) {
  auto next = map.lower_bound(e.start);
  if (next != map.begin()) {
    auto prev = std::prev(next);
    if (prev->first + prev->second == e.start) {
      e.start = prev->first;
      e.length += prev->second;
      map.erase(prev);
    }
  }
  next = map.lower_bound(e.start);
  if (next != map.end() && next->first == e.end()) {
    e.length += next->second;
    map.erase(next);
  }
  map[e.start] = e.length;
}

void Allocator::erase_range(RegionMap& map, const Extent& e) {
  // `e` must lie entirely inside one region.
  auto it = map.upper_bound(e.start);
  --it;
  const Extent region{it->first, it->second};
  map.erase(it);
  if (region.start < e.start) map[region.start] = e.start - region.start;
  if (e.end() < region.end()) map[e.end()] = region.end() - e.end();
}

void Allocator::note_peak() noexcept {
  peak_unreferenced_ = std::max(peak_unreferenced_, unreferenced_blocks());
}

std::vector<Extent> Allocator::allocate(std::uint64_t blocks) {
  if (blocks == 0) throw Error(ErrorCode::invalid_argument, "allocate(0)");
  if (blocks > free_blocks_) {
    throw Error(ErrorCode::out_of_space, "need " + std::to_string(blocks) + " blocks, " +
                                             std::to_string(free_blocks_) + " free");
  }
  for (const auto& [start, len] : free_) {
    if (len >= blocks) {
      Extent e{start, blocks};
      erase_range(free_, e);
      free_blocks_ -= blocks;
      note_peak();
      return {e};
    }
  }
  // Chunking: contiguous pieces of at most chunk_blocks, region by region.
  std::vector<Extent> out;
  std::uint64_t left = blocks;
  for (const auto& [start, len] : free_) {
    for (std::uint64_t off = 0; off < len && left > 0;) {
      const auto n = std::min({chunk_blocks_, len - off, left});
      out.push_back({start + off, n});
      off += n;
      left -= n;
    }
    if (left == 0) break;
  }
  for (const auto& e : out) erase_range(free_, e);
  free_blocks_ -= blocks;
  note_peak();
  return out;
}

void Allocator::release(std::span<const Extent> extents) {
  for (const auto& e : extents) {
    if (e.length == 0 || e.end() > capacity_) throw Error(ErrorCode::invalid_argument, "bad extent");
    if (overlaps(free_, e)) throw Error(ErrorCode::precondition, "double free of extent at " + std::to_string(e.start));
    if (overlaps(referenced_, e)) {
      throw Error(ErrorCode::precondition, "release of manifest-referenced extent at " + std::to_string(e.start));
    }
  }
  for (const auto& e : extents) {
    insert_coalesced(free_, e);
    free_blocks_ += e.length;
  }
}

void Allocator::mark_referenced(std::span<const Extent> extents) {
  for (const auto& e : extents) {
    if (overlaps(free_, e) || overlaps(referenced_, e)) {
      throw Error(ErrorCode::precondition, "referencing a free or already referenced extent");
    }
  }
  for (const auto& e : extents) {
    insert_coalesced(referenced_, e);
    referenced_blocks_ += e.length;
  }
}

void Allocator::unreference(std::span<const Extent> extents) {
  for (const auto& e : extents) {
    auto it = referenced_.upper_bound(e.start);
    if (it == referenced_.begin() || std::prev(it)->first + std::prev(it)->second < e.end()) {
      throw Error(ErrorCode::precondition, "unreferencing an extent that is not referenced");
    }
    erase_range(referenced_, e);
    referenced_blocks_ -= e.length;
  }
  note_peak();
}

std::vector<Extent> Allocator::free_regions() const {
  std::vector<Extent> out;
  for (const auto& [s, l] : free_) out.push_back({s, l});
  return out;
}

std::vector<Extent> Allocator::referenced_regions() const {
  std::vector<Extent> out;
  for (const auto& [s, l] : referenced_) out.push_back({s, l});
  return out;
}

std::vector<std::string> Allocator::check() const {
  std::vector<std::string> problems;
  std::uint64_t f = 0;
  for (const auto& [s, l] : free_) {
    f += l;
    if (overlaps(referenced_, {s, l})) problems.push_back("free region at " + std::to_string(s) + " is referenced");
  }
  std::uint64_t r = 0;
  for (const auto& [s, l] : referenced_) r += l;
  if (f != free_blocks_) problems.push_back("free block count mismatch");
  if (r != referenced_blocks_) problems.push_back("referenced block count mismatch");
  if (f + r > capacity_) problems.push_back("free + referenced exceeds capacity");
  return problems;
}

}  // namespace sda
