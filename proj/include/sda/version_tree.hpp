#pragma once

#include "sda/core.hpp"

#include <algorithm>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sda {

/// Sorted set of version ids; the tag W of a tagged array.
class VersionSet {
 public:
  VersionSet() = default;
  VersionSet(std::initializer_list<VersionId> ids) : members_(ids) { normalize(); }
  explicit VersionSet(std::vector<VersionId> ids) : members_(std::move(ids)) { normalize(); }

  bool contains(VersionId v) const noexcept {
    return std::binary_search(members_.begin(), members_.end(), v);
  }
  void insert(VersionId v) {
    auto it = std::lower_bound(members_.begin(), members_.end(), v);
    if (it == members_.end() || *it != v) members_.insert(it, v);
  }
  bool intersects(const VersionSet& other) const noexcept;
  bool intersects(std::span<const VersionId> sorted_ids) const noexcept;
  VersionSet united(const VersionSet& other) const;

  std::size_t size() const noexcept { return members_.size(); }
  bool empty() const noexcept { return members_.empty(); }
  std::span<const VersionId> members() const noexcept { return members_; }
  auto begin() const noexcept { return members_.begin(); }
  auto end() const noexcept { return members_.end(); }

  bool operator==(const VersionSet&) const = default;

 private:
  void normalize() {
    std::sort(members_.begin(), members_.end());
    members_.erase(std::unique(members_.begin(), members_.end()), members_.end());
  }

  std::vector<VersionId> members_;
};

std::string to_string(const VersionSet& s);

/// Rooted tree of versions. Ancestry is answered by parent-pointer walks;
/// because ids grow in creation order, a walk from `w` toward the root can
/// stop as soon as it drops below the id it is looking for.
class VersionTree {
 public:
  VersionTree() = default;

  VersionId create_root();
  VersionId clone(VersionId parent);
  void delete_version(VersionId v);

  bool empty() const noexcept { return nodes_.empty(); }
  std::size_t size() const noexcept { return nodes_.size(); }

  bool exists(VersionId v) const noexcept { return v.value < nodes_.size(); }
  bool is_deleted(VersionId v) const noexcept { return exists(v) && nodes_[v.value].deleted; }
  bool is_live(VersionId v) const noexcept { return exists(v) && !nodes_[v.value].deleted; }

  /// Throws unknown_version / deleted_version when `v` cannot be queried.
  void require_live(VersionId v) const;

  std::optional<VersionId> parent(VersionId v) const;
  /// Children in creation order, including deleted ones.
  std::span<const VersionId> children(VersionId v) const;
  bool has_live_children(VersionId v) const;

  /// `v`, parent(v), ..., root.
  std::vector<VersionId> path(VersionId v) const;
  std::size_t depth(VersionId v) const;

  bool is_ancestor_or_self(VersionId ancestor, VersionId v) const;

  /// Element of `candidates` nearest to `v` on the root-to-v path.
  template <typename Set>
  std::optional<VersionId> closest_ancestor_in(VersionId v, const Set& candidates) const {
    check_exists(v);
    for (std::uint64_t cur = v.value;;) {
      if (candidates.contains(VersionId{cur})) return VersionId{cur};
      if (cur == 0) return std::nullopt;
      cur = nodes_[cur].parent;
    }
  }

  std::vector<VersionId> live_versions() const;
  std::vector<VersionId> leaves() const;  // live versions with no live children
  std::vector<VersionId> deleted_versions() const;

  /// Manifest encoding: count | (child, parent) pairs in id order |
  /// deleted count | deleted ids.
  void serialize(std::string& out) const;
  static VersionTree deserialize(ByteReader& in);

  bool operator==(const VersionTree&) const = default;

 private:
  struct Node {
    std::uint64_t parent = 0;  // unused for the root
    std::vector<VersionId> children;
    bool deleted = false;
    std::uint32_t depth = 0;

    bool operator==(const Node&) const = default;
  };

  void check_exists(VersionId v) const;

  std::vector<Node> nodes_;
};

}  // namespace sda
