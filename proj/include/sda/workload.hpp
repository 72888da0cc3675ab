#pragma once

#include "sda/config.hpp"
#include "sda/core.hpp"
#include "sda/store.hpp"
#include "sda/version_tree.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace sda {

/// Deterministic random source. Only the raw mt19937_64 stream is used, so
/// sequences are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next() { return gen_(); }
  /// Uniform in [0, n), n > 0.
  std::uint64_t below(std::uint64_t n);
  bool chance(Fraction p);
  std::string bytes(std::size_t n);

 private:
  std::mt19937_64 gen_;
};

enum class OpKind : std::uint8_t { put, delete_key, get, range, clone, delete_version };

std::string_view to_string(OpKind kind) noexcept;

struct Op {
  OpKind kind = OpKind::put;
  VersionId version;  // target version; the parent for clone
  Key key;            // range start for range
  Key end;
  std::string value;
  std::uint32_t limit = 0;
};

void encode_op(const Op& op, std::string& out);

struct WorkloadSpec {
  std::uint64_t seed = 1;
  std::uint64_t total_inserts = 100000;
  std::uint32_t key_len = 16;
  std::uint32_t value_len = 84;
  std::uint64_t clone_interval = 100000;
  Fraction leaf_clone_prob{1, 3};
  std::uint32_t range_query_size = 1000;
  std::uint64_t range_query_interval = 10000;

  // Mixed mode, used by the equivalence runs; all off by default.
  std::uint64_t key_space = 0;  // 0: keys uniform over all key_len-byte strings
  Fraction delete_key_prob{0, 1};
  Fraction get_prob{0, 1};
  std::uint64_t delete_version_interval = 0;

  void validate() const;
  /// Consumes known keys from `kv`.
  static WorkloadSpec from_map(std::map<std::string, std::string>& kv);
};

/// Streams the benchmark workload. The root version is assumed to exist.
///
/// Per insert slot: a put (or, in mixed mode, a delete_key) at a uniformly
/// random current leaf; optionally a get; every range_query_interval slots a
/// range query at a random live version; every clone_interval slots a clone
/// of a random leaf (w.p. leaf_clone_prob) or internal version.
class WorkloadGenerator {
 public:
  explicit WorkloadGenerator(WorkloadSpec spec);

  std::optional<Op> next();
  std::uint64_t inserts_done() const noexcept { return inserts_; }
  const VersionTree& tree() const noexcept { return tree_; }

 private:
  void refresh();
  Key random_key();
  Key known_key();
  VersionId pick(const std::vector<VersionId>& from);
  void slot();

  WorkloadSpec spec_;
  Rng rng_;
  VersionTree tree_;
  std::vector<VersionId> leaves_;
  std::vector<VersionId> internal_;
  std::vector<VersionId> live_;
  std::vector<Key> sample_;  // written keys, for gets and deletes
  std::uint64_t seen_ = 0;
  std::vector<Op> pending_;
  std::size_t pending_pos_ = 0;
  std::uint64_t inserts_ = 0;
};

std::vector<Op> gen_workload(const WorkloadSpec& spec);

enum class Target { sda, cow, both };

std::optional<Target> parse_target(std::string_view text);

struct MetricsRow {
  std::string target;
  std::uint64_t ops_done = 0;
  std::uint64_t inserts_done = 0;
  std::uint64_t inserts_per_window = 0;
  std::uint64_t blocks_read = 0;
  std::uint64_t blocks_written = 0;
  double sequential_fraction = 0.0;
  std::uint64_t stored_entries = 0;
  double dup_factor = 0.0;
  std::string level_arrays;  // "level:count;..." (empty for cow)
  std::uint64_t range_entries = 0;
  std::uint64_t range_blocks_read = 0;
  double wall_ms = 0.0;  // informational only
};

inline constexpr const char* kCsvSchema = "sda-bench-1";
std::string csv_header();
std::string to_csv(const MetricsRow& row);

struct BenchOptions {
  Target target = Target::sda;
  WorkloadSpec workload;
  StoreConfig store;
  std::uint32_t cow_max_node_entries = 0;
  std::uint64_t cow_device_blocks = 1ull << 22;
  bool verify = false;
  bool audit_after_maintenance = false;
  std::uint64_t row_interval = 0;  // inserts per metrics row; 0 = range_query_interval
  std::optional<std::filesystem::path> store_dir;
  std::function<void(const MetricsRow&)> on_row;

  /// Consumes bench-level keys (cow_*, row_interval, audit_after_maintenance)
  /// and delegates the rest to StoreConfig and WorkloadSpec. Unknown keys
  /// are an error.
  void apply_config(std::map<std::string, std::string> kv);
};

struct TargetSummary {
  IoStats insert_io;  // during put and delete_key, including triggered maintenance
  IoStats range_io;
  IoStats total_io;
  std::uint64_t range_queries = 0;
  std::uint64_t range_entries = 0;
  std::uint64_t range_candidates = 0;  // sda only
  StoreStats store;                    // sda only
  std::uint64_t cow_blocks_allocated = 0;
};

struct BenchResult {
  std::vector<MetricsRow> rows;
  std::uint64_t ops = 0;
  std::uint64_t checks = 0;
  std::uint64_t mismatches = 0;
  std::vector<std::string> mismatch_details;  // first few
  std::vector<Violation> violations;
  TargetSummary sda;
  TargetSummary cow;
  std::uint64_t maintenance_audits = 0;

  /// 0 ok, 1 verification failure, 2 invariant violation.
  int exit_code() const noexcept { return mismatches ? 1 : (violations.empty() ? 0 : 2); }
};

BenchResult run_bench(const BenchOptions& options);

struct CrashOptions {
  WorkloadSpec workload;
  StoreConfig store;
  std::uint64_t max_points = 0;  // 0: every kill point
  std::function<void(std::uint64_t point, std::uint64_t total)> on_progress;
};

struct CrashCase {
  std::uint64_t point = 0;
  std::string label;
  bool matches_pre = false;
  bool matches_post = false;
  std::uint64_t epoch = 0;
  std::uint64_t orphan_blocks = 0;
  std::vector<std::string> problems;

  bool ok() const noexcept { return (matches_pre || matches_post) && problems.empty(); }
};

struct CrashReport {
  std::uint64_t total_points = 0;
  std::uint64_t commits = 0;
  std::vector<CrashCase> cases;

  std::uint64_t failures() const noexcept;
};

/// Replays the workload once per kill point, crashing there, recovering,
/// and comparing the recovered store with the oracle state as of the last
/// commit before the crash (pre) and the state being committed (post).
CrashReport run_crash_sweep(const CrashOptions& options);

}  // namespace sda
