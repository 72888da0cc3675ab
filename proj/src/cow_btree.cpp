#include "sda/cow_btree.hpp"

#include <algorithm>

namespace sda {

// Node layout: version u64 | kind u8 (0 leaf, 1 internal) | count u32 |
//   leaf:     count x (key_len u16 | key | value_len u32 | value)
//   internal: count x (key_len u16 | key) | (count + 1) x child u64
// followed by crc32 u32 over everything before it.
std::size_t CowBTree::Node::encoded_size() const noexcept {
  std::size_t n = 8 + 1 + 4 + 4;
  for (const auto& k : keys) n += 2 + k.size();
  if (leaf) {
    for (const auto& v : values) n += 4 + v.size();
  } else {
    n += 8 * children.size();
  }
  return n;
}

std::string CowBTree::Node::encode() const {
  std::string out;
  out.reserve(encoded_size());
  put_u64(out, version.value);
  put_u8(out, leaf ? 0 : 1);
  put_u32(out, static_cast<std::uint32_t>(keys.size()));
  for (std::size_t i = 0; i < keys.size(); ++i) {
    put_u16(out, static_cast<std::uint16_t>(keys[i].size()));
    put_bytes(out, keys[i]);
    if (leaf) {
      put_u32(out, static_cast<std::uint32_t>(values[i].size()));
      put_bytes(out, values[i]);
    }
  }
  if (!leaf) {
    for (auto c : children) put_u64(out, c);
  }
  put_u32(out, crc32(out));
  return out;
}

CowBTree::Node CowBTree::Node::decode(std::span<const std::uint8_t> block) {
  ByteReader r(block);
  Node n;
  n.version = VersionId{r.u64()};
  const auto kind = r.u8();
  if (kind > 1) throw Error(ErrorCode::corruption, "bad node kind");
  n.leaf = kind == 0;
  const auto count = r.u32();
  if (count > block.size()) throw Error(ErrorCode::corruption, "bad node key count");
  n.keys.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    n.keys.push_back(r.bytes(r.u16()));
    if (n.leaf) n.values.push_back(r.bytes(r.u32()));
  }
  if (!n.leaf) {
    for (std::uint32_t i = 0; i <= count; ++i) n.children.push_back(r.u64());
  }
  const auto body = r.position();
  const auto crc = r.u32();
  if (crc != crc32(block.subspan(0, body))) throw Error(ErrorCode::corruption, "node checksum mismatch");
  return n;
}

CowBTree::CowBTree(std::shared_ptr<BlockDevice> device, std::uint32_t max_node_entries)
    : device_(std::move(device)), max_node_entries_(max_node_entries) {}

std::optional<std::uint64_t> CowBTree::root_for(VersionId v) const {
  for (auto u : tree_.path(v)) {
    if (u.value < roots_.size() && roots_[u.value] != kNoRoot) return roots_[u.value];
  }
  return std::nullopt;
}

bool CowBTree::has_own_root(VersionId v) const {
  return v.value < roots_.size() && roots_[v.value] != kNoRoot;
}

CowBTree::Node CowBTree::read(std::uint64_t addr) const {
  std::vector<std::uint8_t> block(device_->block_size());
  device_->read(addr, block);
  return Node::decode(block);
}

void CowBTree::write(std::uint64_t addr, const Node& n) {
  const auto bytes = n.encode();
  device_->write(addr, {reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()});
}

std::uint64_t CowBTree::allocate() {
  if (next_block_ >= device_->capacity()) throw Error(ErrorCode::out_of_space, "CoW device full");
  return next_block_++;
}

bool CowBTree::oversized(const Node& n) const noexcept {
  if (n.encoded_size() > device_->block_size()) return true;
  return max_node_entries_ != 0 && n.keys.size() > max_node_entries_;
}

void CowBTree::halve(Node node, Key separator, std::vector<std::pair<Key, Node>>& out) const {
  if (!oversized(node) || node.keys.size() < 2) {
    out.emplace_back(std::move(separator), std::move(node));
    return;
  }
  Node right;
  right.version = node.version;
  right.leaf = node.leaf;
  const auto mid = node.keys.size() / 2;
  const auto m = static_cast<std::ptrdiff_t>(mid);
  Key right_sep;
  if (node.leaf) {
    right.keys.assign(node.keys.begin() + m, node.keys.end());
    right.values.assign(node.values.begin() + m, node.values.end());
    node.keys.resize(mid);
    node.values.resize(mid);
    right_sep = right.keys.front();
  } else {
    right_sep = node.keys[mid];
    right.keys.assign(node.keys.begin() + m + 1, node.keys.end());
    right.children.assign(node.children.begin() + m + 1, node.children.end());
    node.keys.resize(mid);
    node.children.resize(mid + 1);
  }
  halve(std::move(node), std::move(separator), out);
  halve(std::move(right), std::move(right_sep), out);
}

void CowBTree::put(const Key& key, std::string value, VersionId v) {
  validate_key(key);
  validate_value(value);
  tree_.require_live(v);
  update(key, &value, v);
}

void CowBTree::delete_key(const Key& key, VersionId v) {
  validate_key(key);
  tree_.require_live(v);
  if (!get(key, v)) return;
  update(key, nullptr, v);
}

void CowBTree::update(const Key& key, const std::string* value, VersionId v) {
  std::vector<PathStep> path;
  if (auto root = root_for(v)) {
    path.push_back({read(*root), *root, false, 0});
  } else {
    Node empty;
    empty.version = v;
    path.push_back({std::move(empty), allocate(), true, 0});
  }
  // Descend, copying foreign nodes.
  for (;;) {
    auto& step = path.back();
    if (step.node.version != v) {
      step.node.version = v;
      step.addr = allocate();
      step.dirty = true;
    }
    if (path.size() > 1) {
      auto& parent = path[path.size() - 2];
      if (parent.node.children[parent.child] != step.addr) {
        parent.node.children[parent.child] = step.addr;
        parent.dirty = true;
      }
    }
    if (step.node.leaf) break;
    const auto& keys = step.node.keys;
    step.child = static_cast<std::size_t>(std::upper_bound(keys.begin(), keys.end(), key) - keys.begin());
    const auto child_addr = step.node.children[step.child];
    path.push_back({read(child_addr), child_addr, false, 0});
  }

  auto& leaf = path.back().node;
  auto it = std::lower_bound(leaf.keys.begin(), leaf.keys.end(), key);
  const auto pos = static_cast<std::size_t>(it - leaf.keys.begin());
  const bool found = it != leaf.keys.end() && *it == key;
  if (value) {
    if (found) {
      leaf.values[pos] = *value;
    } else {
      leaf.keys.insert(it, key);
      leaf.values.insert(leaf.values.begin() + static_cast<std::ptrdiff_t>(pos), *value);
    }
  } else if (found) {
    leaf.keys.erase(it);
    leaf.values.erase(leaf.values.begin() + static_cast<std::ptrdiff_t>(pos));
  }
  path.back().dirty = true;

  // Half splits, bottom-up. A node that is still too big after one split
  // keeps halving; the resulting separators all go to the parent.
  std::vector<std::pair<std::uint64_t, Node>> extra;
  for (std::size_t i = path.size(); i-- > 0;) {
    if (!oversized(path[i].node) || path[i].node.keys.size() < 2) continue;
    std::vector<std::pair<Key, Node>> pieces;
    halve(std::move(path[i].node), {}, pieces);
    path[i].node = std::move(pieces.front().second);
    path[i].dirty = true;
    std::vector<Key> seps;
    std::vector<std::uint64_t> addrs;
    for (std::size_t j = 1; j < pieces.size(); ++j) {
      seps.push_back(std::move(pieces[j].first));
      addrs.push_back(allocate());
      extra.emplace_back(addrs.back(), std::move(pieces[j].second));
    }
    if (i == 0) {
      Node root;
      root.version = v;
      root.leaf = false;
      root.keys = std::move(seps);
      root.children.push_back(path[0].addr);
      root.children.insert(root.children.end(), addrs.begin(), addrs.end());
      path.insert(path.begin(), PathStep{std::move(root), allocate(), true, 0});
      i = 1;  // the new root is examined next
      continue;
    }
    auto& parent = path[i - 1];
    const auto at = static_cast<std::ptrdiff_t>(parent.child);
    parent.node.keys.insert(parent.node.keys.begin() + at, seps.begin(), seps.end());
    parent.node.children.insert(parent.node.children.begin() + at + 1, addrs.begin(), addrs.end());
    parent.dirty = true;
  }
  for (const auto& step : path) {
    if (step.dirty) write(step.addr, step.node);
  }
  for (const auto& [addr, node] : extra) write(addr, node);
  if (v.value >= roots_.size()) roots_.resize(v.value + 1, kNoRoot);
  roots_[v.value] = path.front().addr;
}

std::optional<std::string> CowBTree::get(const Key& key, VersionId v) const {
  tree_.require_live(v);
  auto addr = root_for(v);
  if (!addr) return std::nullopt;
  for (;;) {
    const auto n = read(*addr);
    if (n.leaf) {
      auto it = std::lower_bound(n.keys.begin(), n.keys.end(), key);
      if (it == n.keys.end() || *it != key) return std::nullopt;
      return n.values[static_cast<std::size_t>(it - n.keys.begin())];
    }
    const auto idx = std::upper_bound(n.keys.begin(), n.keys.end(), key) - n.keys.begin();
    addr = n.children[static_cast<std::size_t>(idx)];
  }
}

std::vector<std::pair<Key, std::string>> CowBTree::range(const Key& start, const Key& end, VersionId v,
                                                         std::size_t limit) const {
  if (start > end) throw Error(ErrorCode::invalid_argument, "range start is greater than range end");
  tree_.require_live(v);
  std::vector<std::pair<Key, std::string>> out;
  auto root = root_for(v);
  if (!root) return out;
  auto full = [&] { return limit != 0 && out.size() >= limit; };
  auto visit = [&](auto&& self, std::uint64_t addr) -> void {
    const auto n = read(addr);
    if (n.leaf) {
      for (auto it = std::lower_bound(n.keys.begin(), n.keys.end(), start); it != n.keys.end() && *it <= end; ++it) {
        out.emplace_back(*it, n.values[static_cast<std::size_t>(it - n.keys.begin())]);
        if (full()) return;
      }
      return;
    }
    const auto first = static_cast<std::size_t>(std::upper_bound(n.keys.begin(), n.keys.end(), start) - n.keys.begin());
    const auto last = static_cast<std::size_t>(std::upper_bound(n.keys.begin(), n.keys.end(), end) - n.keys.begin());
    for (auto i = first; i <= last && !full(); ++i) self(self, n.children[i]);
  };
  visit(visit, *root);
  return out;
}

std::size_t CowBTree::depth(VersionId v) const {
  auto addr = root_for(v);
  std::size_t d = 0;
  while (addr) {
    ++d;
    const auto n = read(*addr);
    if (n.leaf) break;
    addr = n.children.front();
  }
  return d;
}

}  // namespace sda
