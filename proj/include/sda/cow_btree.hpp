#pragma once

#include "sda/core.hpp"
#include "sda/device.hpp"
#include "sda/version_tree.hpp"

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace sda {

/// Copy-on-write B-tree with one root per version (the baseline).
///
/// Nodes carry the version that owns them. An update at v descends from
/// v's root and copies every node owned by another version; nodes owned by
/// v are modified in place. Copies are never reclaimed. There is no node
/// cache: every node visited is one block read.
class CowBTree {
 public:
  /// `max_node_entries` caps keys per node on top of the block-size limit
  /// (0 = block size only).
  explicit CowBTree(std::shared_ptr<BlockDevice> device, std::uint32_t max_node_entries = 0);

  VersionId create_root() { return tree_.create_root(); }
  VersionId clone(VersionId parent) { return tree_.clone(parent); }
  void delete_version(VersionId v) { tree_.delete_version(v); }

  void put(const Key& key, std::string value, VersionId v);
  /// Removes the key from v's tree; a no-op when v does not see the key.
  void delete_key(const Key& key, VersionId v);

  std::optional<std::string> get(const Key& key, VersionId v) const;
  std::vector<std::pair<Key, std::string>> range(const Key& start, const Key& end, VersionId v,
                                                 std::size_t limit = 0) const;

  const VersionTree& tree() const noexcept { return tree_; }
  IoStats io() const { return device_->stats(); }
  std::uint64_t blocks_allocated() const noexcept { return next_block_; }
  /// Number of nodes on a root-to-leaf path of v's tree (0 if v sees no tree).
  std::size_t depth(VersionId v) const;
  bool has_own_root(VersionId v) const;

  struct Node {
    VersionId version;
    bool leaf = true;
    std::vector<Key> keys;
    std::vector<std::uint64_t> children;  // internal: keys.size() + 1
    std::vector<std::string> values;      // leaf: keys.size()

    std::size_t encoded_size() const noexcept;
    std::string encode() const;
    static Node decode(std::span<const std::uint8_t> block);
  };

 private:
  struct PathStep {
    Node node;
    std::uint64_t addr = 0;
    bool dirty = false;
    std::size_t child = 0;  // index taken when descending
  };

  std::optional<std::uint64_t> root_for(VersionId v) const;
  Node read(std::uint64_t addr) const;
  void write(std::uint64_t addr, const Node& n);
  std::uint64_t allocate();
  bool oversized(const Node& n) const noexcept;
  void halve(Node node, Key separator, std::vector<std::pair<Key, Node>>& out) const;
  void update(const Key& key, const std::string* value, VersionId v);

  std::shared_ptr<BlockDevice> device_;
  std::uint32_t max_node_entries_;
  VersionTree tree_;
  std::vector<std::uint64_t> roots_;  // by version id; kNoRoot when absent
  std::uint64_t next_block_ = 0;

  static constexpr std::uint64_t kNoRoot = UINT64_MAX;
};

}  // namespace sda
