#include "sda/version_tree.hpp"

#include <algorithm>
#include <iterator>

namespace sda {

bool VersionSet::intersects(std::span<const VersionId> sorted_ids) const noexcept {
  auto a = members_.begin();
  auto b = sorted_ids.begin();
  while (a != members_.end() && b != sorted_ids.end()) {
    if (*a == *b) return true;
    if (*a < *b) ++a; else ++b;
  }
  return false;
}

bool VersionSet::intersects(const VersionSet& other) const noexcept {
  return intersects(other.members());
}

VersionSet VersionSet::united(const VersionSet& other) const {
  std::vector<VersionId> out;
  out.reserve(size() + other.size());
  std::set_union(members_.begin(), members_.end(), other.members_.begin(), other.members_.end(),
                 std::back_inserter(out));
  VersionSet s;
  s.members_ = std::move(out);
  return s;
}

std::string to_string(const VersionSet& s) {
  std::string out = "{";
  for (auto v : s) {
    if (out.size() > 1) out += ",";
    out += "v" + std::to_string(v.value);
  }
  return out + "}";
}

void VersionTree::check_exists(VersionId v) const {
  if (!exists(v)) throw Error(ErrorCode::unknown_version, "version " + std::to_string(v.value));
}

void VersionTree::require_live(VersionId v) const {
  check_exists(v);
  if (nodes_[v.value].deleted) {
    throw Error(ErrorCode::deleted_version, "version " + std::to_string(v.value));
  }
}

VersionId VersionTree::create_root() {
  if (!nodes_.empty()) throw Error(ErrorCode::precondition, "root already exists");
  nodes_.emplace_back();
  return kRootVersion;
}

VersionId VersionTree::clone(VersionId parent) {
  require_live(parent);
  const VersionId child{nodes_.size()};
  Node n;
  n.parent = parent.value;
  n.depth = nodes_[parent.value].depth + 1;
  nodes_.push_back(std::move(n));
  nodes_[parent.value].children.push_back(child);
  return child;
}

void VersionTree::delete_version(VersionId v) {
  require_live(v);
  if (v == kRootVersion) throw Error(ErrorCode::precondition, "cannot delete the root version");
  if (has_live_children(v)) {
    throw Error(ErrorCode::precondition, "version " + std::to_string(v.value) + " has children");
  }
  nodes_[v.value].deleted = true;
}

std::optional<VersionId> VersionTree::parent(VersionId v) const {
  check_exists(v);
  if (v == kRootVersion) return std::nullopt;
  return VersionId{nodes_[v.value].parent};
}

std::span<const VersionId> VersionTree::children(VersionId v) const {
  check_exists(v);
  return nodes_[v.value].children;
}

bool VersionTree::has_live_children(VersionId v) const {
  for (auto c : children(v)) {
    if (!nodes_[c.value].deleted) return true;
  }
  return false;
}

std::vector<VersionId> VersionTree::path(VersionId v) const {
  check_exists(v);
  std::vector<VersionId> out;
  out.reserve(nodes_[v.value].depth + 1);
  for (std::uint64_t cur = v.value;;) {
    out.push_back(VersionId{cur});
    if (cur == 0) break;
    cur = nodes_[cur].parent;
  }
  return out;
}

std::size_t VersionTree::depth(VersionId v) const {
  check_exists(v);
  return nodes_[v.value].depth;
}

bool VersionTree::is_ancestor_or_self(VersionId ancestor, VersionId v) const {
  check_exists(v);
  check_exists(ancestor);
  std::uint64_t cur = v.value;
  while (cur > ancestor.value) cur = nodes_[cur].parent;
  return cur == ancestor.value;
}

std::vector<VersionId> VersionTree::live_versions() const {
  std::vector<VersionId> out;
  for (std::uint64_t i = 0; i < nodes_.size(); ++i) {
    if (!nodes_[i].deleted) out.push_back(VersionId{i});
  }
  return out;
}

std::vector<VersionId> VersionTree::leaves() const {
  std::vector<VersionId> out;
  for (std::uint64_t i = 0; i < nodes_.size(); ++i) {
    if (!nodes_[i].deleted && !has_live_children(VersionId{i})) out.push_back(VersionId{i});
  }
  return out;
}

std::vector<VersionId> VersionTree::deleted_versions() const {
  std::vector<VersionId> out;
  for (std::uint64_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].deleted) out.push_back(VersionId{i});
  }
  return out;
}

void VersionTree::serialize(std::string& out) const {
  put_u64(out, nodes_.size());
  for (std::uint64_t i = 1; i < nodes_.size(); ++i) {
    put_u64(out, i);
    put_u64(out, nodes_[i].parent);
  }
  const auto dead = deleted_versions();
  put_u64(out, dead.size());
  for (auto v : dead) put_u64(out, v.value);
}

VersionTree VersionTree::deserialize(ByteReader& in) {
  VersionTree t;
  const auto count = in.u64();
  if (count == 0) {
    if (in.u64() != 0) throw Error(ErrorCode::corruption, "deleted versions in empty tree");
    return t;
  }
  if (count > (std::uint64_t{1} << 32)) throw Error(ErrorCode::corruption, "version count too large");
  t.create_root();
  for (std::uint64_t i = 1; i < count; ++i) {
    const auto child = in.u64();
    const auto parent = in.u64();
    if (child != i || parent >= child) throw Error(ErrorCode::corruption, "version tree out of order");
    t.clone(VersionId{parent});
  }
  const auto dead = in.u64();
  if (dead > count) throw Error(ErrorCode::corruption, "deleted set too large");
  std::vector<std::uint64_t> ids;
  for (std::uint64_t i = 0; i < dead; ++i) ids.push_back(in.u64());
  // Deleted versions may have deleted children, so mark deepest first.
  std::sort(ids.rbegin(), ids.rend());
  for (auto id : ids) {
    if (id == 0 || id >= count) throw Error(ErrorCode::corruption, "bad deleted version id");
    t.delete_version(VersionId{id});
  }
  return t;
}

}  // namespace sda
