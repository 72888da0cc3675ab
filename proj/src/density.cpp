#include "sda/density.hpp"

#include <algorithm>
#include <string>
#include <unordered_map>

namespace sda {

namespace {

/// Fixed-width bitset over the members of one VersionSet.
class Bits {
 public:
  explicit Bits(std::size_t n = 0) : words_((n + 63) / 64, 0) {}

  void set(std::size_t i) { words_[i / 64] |= std::uint64_t{1} << (i % 64); }
  void reset(std::size_t i) { words_[i / 64] &= ~(std::uint64_t{1} << (i % 64)); }
  bool test(std::size_t i) const { return (words_[i / 64] >> (i % 64)) & 1; }

  bool intersects(const Bits& o) const {
    for (std::size_t i = 0; i < words_.size(); ++i) {
      if (words_[i] & o.words_[i]) return true;
    }
    return false;
  }
  bool none() const {
    return std::all_of(words_.begin(), words_.end(), [](std::uint64_t w) { return w == 0; });
  }
  Bits& operator|=(const Bits& o) {
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] |= o.words_[i];
    return *this;
  }
  Bits& operator&=(const Bits& o) {
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] &= o.words_[i];
    return *this;
  }
  Bits& subtract(const Bits& o) {
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] &= ~o.words_[i];
    return *this;
  }
  bool operator==(const Bits&) const = default;

  template <typename F>
  void for_each(F&& f) const {
    for (std::size_t w = 0; w < words_.size(); ++w) {
      for (std::uint64_t bits = words_[w]; bits; bits &= bits - 1) {
        f(w * 64 + static_cast<std::size_t>(__builtin_ctzll(bits)));
      }
    }
  }

  std::string key() const {
    return std::string(reinterpret_cast<const char*>(words_.data()), words_.size() * sizeof(std::uint64_t));
  }

 private:
  std::vector<std::uint64_t> words_;
};

/// For every entry of a run, the set of tag members at which it is live,
/// bucketed into distinct signatures so that candidate version sets can be
/// evaluated without touching the entries again.
struct LivenessTable {
  std::vector<VersionId> members;
  std::vector<Bits> sig_bits;
  std::vector<std::uint64_t> sig_count;
  std::vector<std::uint32_t> row_sig;
  std::vector<std::uint64_t> live_count;  // per member
  std::uint64_t rows = 0;

  LivenessTable(std::span<const Entry> sorted, const VersionSet& tag, const VersionTree& tree)
      : members(tag.begin(), tag.end()), live_count(members.size(), 0), rows(sorted.size()) {
    const std::size_t m = members.size();

    // One signature per distinct entry version: the members it is an
    // ancestor-or-self of. Singleton key groups use these directly.
    std::unordered_map<std::uint64_t, std::uint32_t> version_sig;
    std::vector<std::size_t> depth_of;
    for (const auto& e : sorted) {
      auto [it, fresh] = version_sig.try_emplace(e.version.value, static_cast<std::uint32_t>(sig_bits.size()));
      if (!fresh) continue;
      Bits b(m);
      for (std::size_t t = 0; t < m; ++t) {
        if (tree.is_ancestor_or_self(e.version, members[t])) b.set(t);
      }
      sig_bits.push_back(std::move(b));
      sig_count.push_back(0);
      depth_of.push_back(tree.depth(e.version));
    }

    std::unordered_map<std::string, std::uint32_t> extra_sig;
    auto intern = [&](Bits&& b) {
      auto k = b.key();
      auto [it, fresh] = extra_sig.try_emplace(std::move(k), static_cast<std::uint32_t>(sig_bits.size()));
      if (fresh) {
        sig_bits.push_back(std::move(b));
        sig_count.push_back(0);
      }
      return it->second;
    };

    row_sig.resize(sorted.size());
    std::size_t i = 0;
    while (i < sorted.size()) {
      std::size_t j = i + 1;
      while (j < sorted.size() && sorted[j].key == sorted[i].key) ++j;
      if (j == i + 1) {
        row_sig[i] = version_sig.at(sorted[i].version.value);
      } else {
        // Each member picks the deepest ancestor-or-self version in the group.
        std::vector<Bits> live(j - i, Bits(m));
        for (std::size_t t = 0; t < m; ++t) {
          std::size_t best_depth = 0;
          bool found = false;
          VersionId best{};
          for (std::size_t r = i; r < j; ++r) {
            const auto s = version_sig.at(sorted[r].version.value);
            if (!sig_bits[s].test(t)) continue;
            if (!found || depth_of[s] > best_depth) {
              found = true;
              best_depth = depth_of[s];
              best = sorted[r].version;
            }
          }
          if (!found) continue;
          for (std::size_t r = i; r < j; ++r) {
            if (sorted[r].version == best) live[r - i].set(t);
          }
        }
        for (std::size_t r = i; r < j; ++r) row_sig[r] = intern(std::move(live[r - i]));
      }
      i = j;
    }

    for (auto s : row_sig) ++sig_count[s];
    for (std::size_t s = 0; s < sig_bits.size(); ++s) {
      if (sig_count[s] == 0) continue;
      sig_bits[s].for_each([&](std::size_t t) { live_count[t] += sig_count[s]; });
    }
  }

  std::uint64_t union_size(const Bits& u) const {
    std::uint64_t n = 0;
    for (std::size_t s = 0; s < sig_bits.size(); ++s) {
      if (sig_count[s] && sig_bits[s].intersects(u)) n += sig_count[s];
    }
    return n;
  }

  /// Density of extract(A, U) at U. Liveness at a member of U is unchanged
  /// by extraction, so only the extracted size depends on U.
  bool dense(const Bits& u, Fraction delta) const {
    std::uint64_t min_live = UINT64_MAX;
    u.for_each([&](std::size_t t) { min_live = std::min(min_live, live_count[t]); });
    if (min_live == UINT64_MAX) return false;
    return delta.satisfied_by(min_live, union_size(u));
  }

  std::vector<std::uint32_t> rows_for(const Bits& u) const {
    std::vector<std::uint32_t> out;
    for (std::size_t r = 0; r < row_sig.size(); ++r) {
      if (sig_bits[row_sig[r]].intersects(u)) out.push_back(static_cast<std::uint32_t>(r));
    }
    return out;
  }
};

std::uint64_t group_key(const VersionTree& tree, VersionId v) {
  auto p = tree.parent(v);
  return p ? p->value : UINT64_MAX;
}

class Amplifier {
 public:
  Amplifier(const LivenessTable& table, Fraction delta, const VersionTree& tree)
      : table_(table), delta_(delta), tree_(tree), m_(table.members.size()) {
    desc_.assign(m_, Bits(m_));
    anc_.assign(m_, Bits(m_));
    for (std::size_t a = 0; a < m_; ++a) {
      for (std::size_t b = 0; b < m_; ++b) {
        if (tree.is_ancestor_or_self(table.members[a], table.members[b])) {
          desc_[a].set(b);
          anc_[b].set(a);
        }
      }
    }
  }

  Bits choose(const Bits& remaining) const {
    // Forest roots of the remaining set, grouped by version-tree parent.
    std::map<std::uint64_t, std::vector<std::size_t>> groups;
    remaining.for_each([&](std::size_t t) {
      Bits above = anc_[t];
      above &= remaining;
      above.reset(t);
      if (above.none()) groups[group_key(tree_, table_.members[t])].push_back(t);
    });

    auto subtree = [&](std::size_t r) {
      Bits s = desc_[r];
      s &= remaining;
      return s;
    };

    for (const auto& [parent, roots] : groups) {
      Bits u(m_);
      for (auto r : roots) u |= subtree(r);
      if (table_.dense(u, delta_)) return u;
    }
    for (const auto& [parent, roots] : groups) {
      for (auto r : roots) {
        Bits u = subtree(r);
        if (table_.dense(u, delta_)) return u;
      }
    }

    // Nothing amalgamates: split the lowest-id root's subtree below it.
    std::size_t first = m_;
    for (const auto& [parent, roots] : groups) {
      for (auto r : roots) first = std::min(first, r);
    }
    Bits below = subtree(first);
    below.reset(first);
    if (below.none()) {
      Bits single(m_);
      single.set(first);
      return single;
    }
    return choose(below);
  }

 private:
  const LivenessTable& table_;
  Fraction delta_;
  const VersionTree& tree_;
  std::size_t m_;
  std::vector<Bits> desc_;
  std::vector<Bits> anc_;
};

VersionSet to_set(const LivenessTable& table, const Bits& bits) {
  std::vector<VersionId> ids;
  bits.for_each([&](std::size_t t) { ids.push_back(table.members[t]); });
  return VersionSet(std::move(ids));
}

}  // namespace

bool is_live(const Entry& e, VersionId w, std::span<const Entry> sorted, const VersionTree& tree) {
  if (!tree.is_ancestor_or_self(e.version, w)) return false;
  const std::size_t my_depth = tree.depth(e.version);
  auto lo = std::lower_bound(sorted.begin(), sorted.end(), e.key,
                             [](const Entry& x, const Key& k) { return x.key < k; });
  for (auto it = lo; it != sorted.end() && it->key == e.key; ++it) {
    if (it->version == e.version) continue;
    if (tree.is_ancestor_or_self(it->version, w) && tree.depth(it->version) > my_depth) return false;
  }
  return true;
}

DensityReport density(std::span<const Entry> sorted, const VersionSet& w, const VersionTree& tree) {
  if (sorted.empty()) throw Error(ErrorCode::invalid_argument, "density of an empty array");
  if (w.empty()) throw Error(ErrorCode::invalid_argument, "density over an empty version set");
  LivenessTable table(sorted, w, tree);
  DensityReport report;
  report.entry_count = sorted.size();
  report.min_live = UINT64_MAX;
  for (std::size_t t = 0; t < table.members.size(); ++t) {
    const auto live = table.live_count[t];
    report.per_version[table.members[t]] = {live, static_cast<double>(live) / static_cast<double>(sorted.size())};
    report.min_live = std::min(report.min_live, live);
  }
  report.min_density = static_cast<double>(report.min_live) / static_cast<double>(sorted.size());
  return report;
}

std::vector<Entry> extract(std::span<const Entry> sorted, const VersionSet& u, const VersionTree& tree) {
  std::vector<Entry> out;
  if (sorted.empty() || u.empty()) return out;
  LivenessTable table(sorted, u, tree);
  for (std::size_t r = 0; r < sorted.size(); ++r) {
    if (!table.sig_bits[table.row_sig[r]].none()) out.push_back(sorted[r]);
  }
  return out;
}

std::vector<PiecePlan> plan_amplification(std::span<const Entry> sorted, const VersionSet& w,
                                          Fraction delta_min, const VersionTree& tree) {
  std::vector<PiecePlan> plans;
  if (sorted.empty() || w.empty()) return plans;
  LivenessTable table(sorted, w, tree);
  const std::size_t m = table.members.size();

  Bits present(m);
  std::uint64_t min_live = UINT64_MAX;
  for (std::size_t t = 0; t < m; ++t) {
    if (table.live_count[t] > 0) present.set(t);
    min_live = std::min(min_live, table.live_count[t]);
  }
  if (delta_min.satisfied_by(min_live, sorted.size()) && min_live > 0) {
    plans.push_back({w, {}, true});
    return plans;
  }

  Amplifier amp(table, delta_min, tree);
  Bits remaining = present;
  while (!remaining.none()) {
    Bits u = amp.choose(remaining);
    plans.push_back({to_set(table, u), table.rows_for(u), false});
    remaining.subtract(u);
  }
  return plans;
}

std::vector<Piece> materialize(std::vector<Entry>&& sorted, std::vector<PiecePlan>&& plans) {
  std::vector<Piece> out;
  out.reserve(plans.size());
  if (plans.size() == 1 && plans.front().whole) {
    out.push_back({std::move(sorted), std::move(plans.front().tag)});
    return out;
  }
  std::vector<std::uint32_t> uses(sorted.size(), 0);
  for (const auto& p : plans) {
    for (auto r : p.rows) ++uses[r];
  }
  for (auto& p : plans) {
    Piece piece;
    piece.tag = std::move(p.tag);
    piece.entries.reserve(p.rows.size());
    for (auto r : p.rows) {
      if (--uses[r] == 0) {
        piece.entries.push_back(std::move(sorted[r]));
      } else {
        piece.entries.push_back(sorted[r]);
      }
    }
    out.push_back(std::move(piece));
  }
  return out;
}

std::vector<Piece> amplify(std::span<const Entry> sorted, const VersionSet& w, Fraction delta_min,
                           const VersionTree& tree) {
  auto plans = plan_amplification(sorted, w, delta_min, tree);
  return materialize(std::vector<Entry>(sorted.begin(), sorted.end()), std::move(plans));
}

}  // namespace sda
