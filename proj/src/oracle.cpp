#include "sda/oracle.hpp"

#include <set>

namespace sda {

void Oracle::delete_version(VersionId v) {
  tree_.delete_version(v);
  writes_.erase(v);
}

void Oracle::put(const Key& key, std::string value, VersionId v) {
  validate_key(key);
  validate_value(value);
  tree_.require_live(v);
  writes_[v][key] = Payload::value(std::move(value));
}

void Oracle::delete_key(const Key& key, VersionId v) {
  validate_key(key);
  tree_.require_live(v);
  writes_[v][key] = Payload::tombstone();
}

std::optional<std::string> Oracle::get(const Key& key, VersionId v) const {
  tree_.require_live(v);
  for (auto u : tree_.path(v)) {
    auto vit = writes_.find(u);
    if (vit == writes_.end()) continue;
    auto kit = vit->second.find(key);
    if (kit == vit->second.end()) continue;
    if (kit->second.is_tombstone()) return std::nullopt;
    return kit->second.bytes();
  }
  return std::nullopt;
}

std::vector<std::pair<Key, std::string>> Oracle::range(const Key& start, const Key& end, VersionId v,
                                                       std::size_t limit) const {
  if (start > end) throw Error(ErrorCode::invalid_argument, "range start is greater than range end");
  tree_.require_live(v);
  // Walk the keys written anywhere on the path in ascending order; each one
  // is decided by the same ancestry walk as get().
  using It = std::map<Key, Payload>::const_iterator;
  std::vector<std::pair<It, It>> cursors;
  for (auto u : tree_.path(v)) {
    if (auto vit = writes_.find(u); vit != writes_.end()) {
      cursors.emplace_back(vit->second.lower_bound(start), vit->second.end());
    }
  }
  std::vector<std::pair<Key, std::string>> out;
  for (;;) {
    const Key* next = nullptr;
    for (auto& [it, stop] : cursors) {
      if (it != stop && it->first <= end && (!next || it->first < *next)) next = &it->first;
    }
    if (!next) break;
    const Key k = *next;
    for (auto& [it, stop] : cursors) {
      if (it != stop && it->first == k) ++it;
    }
    if (auto value = get(k, v)) {
      out.emplace_back(k, std::move(*value));
      if (limit != 0 && out.size() >= limit) break;
    }
  }
  return out;
}

std::uint64_t Oracle::live_count(VersionId v) const {
  tree_.require_live(v);
  std::set<Key> keys;
  for (auto u : tree_.path(v)) {
    if (auto vit = writes_.find(u); vit != writes_.end()) {
      for (const auto& [k, p] : vit->second) keys.insert(k);
    }
  }
  std::uint64_t n = 0;
  for (const auto& k : keys) n += get(k, v).has_value();
  return n;
}

}  // namespace sda
