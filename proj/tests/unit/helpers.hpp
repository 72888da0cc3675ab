#pragma once

#include "sda/core.hpp"
#include "sda/version_tree.hpp"

#include <algorithm>
#include <map>
#include <string>
#include <vector>

namespace testing {

using sda::Entry;
using sda::VersionId;

inline VersionId V(std::uint64_t v) { return VersionId{v}; }

inline Entry value_entry(std::string key, std::uint64_t v, std::string value, std::uint64_t stamp = 0) {
  return Entry{std::move(key), VersionId{v}, sda::Payload::value(std::move(value)), stamp};
}

inline Entry tomb_entry(std::string key, std::uint64_t v, std::uint64_t stamp = 0) {
  return Entry{std::move(key), VersionId{v}, sda::Payload::tombstone(), stamp};
}

// Independent liveness check: walk parent pointers from w to the root by
// hand and take the first version with an entry for the key.
inline std::vector<std::uint64_t> walk_up(const std::map<std::uint64_t, std::uint64_t>& parent, std::uint64_t w) {
  std::vector<std::uint64_t> out{w};
  while (out.back() != 0) out.push_back(parent.at(out.back()));
  return out;
}

inline bool brute_live(const Entry& e, std::uint64_t w, const std::vector<Entry>& all,
                       const std::map<std::uint64_t, std::uint64_t>& parent) {
  for (auto u : walk_up(parent, w)) {
    for (const auto& o : all) {
      if (o.key == e.key && o.version.value == u) return o.version == e.version;
    }
  }
  return false;
}

inline void sort_entries(std::vector<Entry>& es) { std::sort(es.begin(), es.end(), sda::entry_less); }

}  // namespace testing
