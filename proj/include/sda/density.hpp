#pragma once

#include "sda/core.hpp"
#include "sda/version_tree.hpp"

#include <cstdint>
#include <map>
#include <span>
#include <vector>

namespace sda {

struct VersionDensity {
  std::uint64_t live_count = 0;
  double density = 0.0;
};

struct DensityReport {
  std::map<VersionId, VersionDensity> per_version;
  std::uint64_t entry_count = 0;
  std::uint64_t min_live = 0;
  double min_density = 0.0;

  /// Exact comparison of the minimum against a threshold.
  bool meets(Fraction delta) const noexcept { return delta.satisfied_by(min_live, entry_count); }
};

/// True iff `e.version` is an ancestor-or-self of `w` and no other entry of
/// `sorted` with the same key sits strictly closer to `w` on its path.
/// Liveness is relative to the array: only entries inside it can shadow.
bool is_live(const Entry& e, VersionId w, std::span<const Entry> sorted, const VersionTree& tree);

DensityReport density(std::span<const Entry> sorted, const VersionSet& w, const VersionTree& tree);

/// Entries of `sorted` live at some member of `u`, in entry order.
std::vector<Entry> extract(std::span<const Entry> sorted, const VersionSet& u, const VersionTree& tree);

struct Piece {
  std::vector<Entry> entries;
  VersionSet tag;
};

/// A piece described by row numbers into the input run. `whole` means the
/// input is returned unchanged (it was already dense).
struct PiecePlan {
  VersionSet tag;
  std::vector<std::uint32_t> rows;
  bool whole = false;
};

/// Splits (sorted, w) into pieces whose tags partition the versions of `w`
/// that have live entries, each piece dense at `delta_min`. Deterministic.
std::vector<PiecePlan> plan_amplification(std::span<const Entry> sorted, const VersionSet& w,
                                          Fraction delta_min, const VersionTree& tree);

std::vector<Piece> amplify(std::span<const Entry> sorted, const VersionSet& w, Fraction delta_min,
                           const VersionTree& tree);

/// Materializes a plan, moving entries out of `sorted` where a row is used
/// by exactly one piece.
std::vector<Piece> materialize(std::vector<Entry>&& sorted, std::vector<PiecePlan>&& plans);

}  // namespace sda
