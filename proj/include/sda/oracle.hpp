#pragma once

#include "sda/core.hpp"
#include "sda/version_tree.hpp"

#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace sda {

/// Brute-force versioned dictionary: every version keeps only the writes
/// made at it, and every query walks the ancestry explicitly.
class Oracle {
 public:
  VersionId create_root() { return tree_.create_root(); }
  VersionId clone(VersionId parent) { return tree_.clone(parent); }
  void delete_version(VersionId v);

  void put(const Key& key, std::string value, VersionId v);
  void delete_key(const Key& key, VersionId v);

  std::optional<std::string> get(const Key& key, VersionId v) const;
  std::vector<std::pair<Key, std::string>> range(const Key& start, const Key& end, VersionId v,
                                                 std::size_t limit = 0) const;
  /// N_v: keys live at v.
  std::uint64_t live_count(VersionId v) const;

  const VersionTree& tree() const noexcept { return tree_; }
  bool operator==(const Oracle&) const = default;

 private:
  VersionTree tree_;
  std::map<VersionId, std::map<Key, Payload>> writes_;
};

}  // namespace sda
