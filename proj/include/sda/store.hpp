#pragma once

#include "sda/array_file.hpp"
#include "sda/config.hpp"
#include "sda/core.hpp"
#include "sda/manifest.hpp"
#include "sda/version_tree.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

namespace sda {

/// Which committed array set a read ran against.
struct ReadTrace {
  std::uint64_t epoch = 0;
  std::vector<std::uint64_t> seqs;  // ascending
  std::size_t candidates = 0;       // arrays whose tag meets path(v)
};

struct StoreStats {
  std::uint64_t total_written = 0;   // distinct (key, version) pairs ever written
  std::uint64_t stored_entries = 0;  // entries in arrays plus buffer
  std::uint64_t buffered = 0;
  double dup_factor = 0.0;
  std::map<std::uint32_t, std::uint64_t> level_arrays;
  std::uint64_t array_count = 0;
  std::uint64_t array_blocks = 0;
  std::uint64_t flushes = 0;
  std::uint64_t maintenance_runs = 0;
  std::uint64_t epoch = 0;
};

struct Violation {
  std::string kind;  // sortedness, density, size, tag, header, extents, disjointness
  std::uint64_t seq = 0;
  std::string detail;
};

struct RecoveryReport {
  std::uint64_t epoch = 0;
  std::uint64_t orphan_blocks = 0;  // neither referenced nor free in the recovered manifest
  std::vector<std::string> notes;
};

/// Space figures for the most recent maintain_level run, in blocks.
struct MaintenanceFootprint {
  std::uint64_t input_blocks = 0;
  std::uint64_t output_blocks = 0;
  std::uint64_t peak_extra_blocks = 0;  // allocated but not referenced, above the starting level
};

/// The stratified doubling array: an in-memory buffer over levels of
/// immutable tagged arrays.
///
/// All mutations are serialized by one writer mutex. Readers copy the
/// buffer hits and the current snapshot under a shared lock, then search
/// arrays without any lock; a snapshot keeps its arrays alive, and retired
/// arrays are released only once no snapshot holds them and the following
/// manifest epoch is committed.
class Store {
 public:
  static std::unique_ptr<Store> create(StorageEnv env, StoreConfig config, CrashInjector* injector = nullptr);
  /// Recovers the committed state and, with auto_maintain, finishes any
  /// maintenance a crash interrupted. `auto_maintain` is not persisted.
  static std::unique_ptr<Store> open(StorageEnv env, bool auto_maintain = true, CrashInjector* injector = nullptr);

  ~Store();
  Store(const Store&) = delete;
  Store& operator=(const Store&) = delete;

  VersionId create_root();
  VersionId clone(VersionId parent);
  void delete_version(VersionId v);

  void put(const Key& key, std::string value, VersionId v);
  void delete_key(const Key& key, VersionId v);

  std::optional<std::string> get(const Key& key, VersionId v, ReadTrace* trace = nullptr) const;
  /// Keys in [start, end] live at v, ascending. `limit` of 0 means no limit.
  std::vector<std::pair<Key, std::string>> range_query(const Key& start, const Key& end, VersionId v,
                                                       std::size_t limit = 0, ReadTrace* trace = nullptr) const;

  void flush();
  void maintain_level(std::uint32_t level);
  /// Maintains every level until all are at rest.
  void maintain_all();
  /// Commits the manifest even when no array changed, persisting the tree.
  void checkpoint();
  /// flush + checkpoint, leaving no retired space unrecorded.
  void close();

  std::vector<Violation> audit() const;
  /// Run the audit checks on each array produced by maintenance, plus the
  /// disjointness check on the maintained level; results accumulate.
  void set_audit_after_maintenance(bool on);
  std::vector<Violation> maintenance_violations() const;
  std::uint64_t audited_maintenance_runs() const;

  StoreStats stats() const;
  IoStats io() const { return env_.device->stats(); }
  const StoreConfig& config() const noexcept { return config_; }
  const RecoveryReport& recovery() const noexcept { return recovery_; }
  MaintenanceFootprint last_footprint() const;
  VersionTree tree() const;
  std::uint64_t epoch() const;
  std::vector<ArrayDescriptor> arrays() const;
  /// Empty when free space and manifest extents partition the device.
  std::vector<std::string> check_space() const;
  const StorageEnv& env() const noexcept { return env_; }
  void set_injector(CrashInjector* injector);

  /// Writes `sorted` as one committed array without any density or level
  /// processing. Used to inject malformed arrays into audits.
  void install_raw_array(std::vector<Entry> sorted, const VersionSet& tag, std::uint32_t level);

 private:
  struct Snapshot {
    std::uint64_t epoch = 0;
    std::vector<std::shared_ptr<const ArrayReader>> arrays;  // ascending seq
  };
  struct Buffered {
    Payload payload;
    std::uint64_t stamp = 0;
  };
  using BufferKey = std::pair<Key, VersionId>;
  struct Retired {
    std::shared_ptr<const ArrayReader> array;
    std::uint64_t epoch = 0;  // epoch of the commit that dropped it
  };

  Store(StorageEnv env, StoreConfig config, CrashInjector* injector);

  void write_locked(const Key& key, Payload payload, VersionId v);
  void flush_locked();
  void maintain_from(std::set<std::uint32_t> levels);
  void maintain_one(std::uint32_t level, std::set<std::uint32_t>& touched);
  std::uint32_t place(std::uint64_t count, std::uint32_t min_level) const noexcept;

  std::shared_ptr<const ArrayReader> write_array(std::span<const Entry> sorted, const VersionSet& tag,
                                                 std::uint32_t level);
  std::vector<std::shared_ptr<const ArrayReader>> write_pieces(std::vector<Entry>&& sorted, const VersionSet& w,
                                                               std::uint32_t min_level, const VersionTree& tree,
                                                               std::set<std::uint32_t>& touched);
  /// Commits current arrays minus `retired` plus `added`, then publishes the
  /// snapshot. `clear_buffer` drops the flushed buffer in the same step.
  void commit(const std::vector<std::shared_ptr<const ArrayReader>>& added,
              const std::vector<std::shared_ptr<const ArrayReader>>& retired, bool clear_buffer);
  void release_retired();

  void audit_array(const ArrayReader& a, const VersionTree& tree, std::vector<Violation>& out) const;
  void audit_disjoint(const Snapshot& snap, std::optional<std::uint32_t> level, std::vector<Violation>& out) const;
  void audit_space(const Snapshot& snap, std::vector<Violation>& out) const;

  static std::uint64_t pair_hash(std::string_view key, VersionId v) noexcept;

  StorageEnv env_;
  StoreConfig config_;
  CrashInjector* injector_;
  std::unique_ptr<ManifestLog> log_;
  Allocator allocator_;
  RecoveryReport recovery_;

  mutable std::mutex writer_;        // serializes every mutation
  mutable std::shared_mutex state_;  // guards buffer_, tree_, snapshot_
  std::map<BufferKey, Buffered> buffer_;
  VersionTree tree_;
  std::shared_ptr<const Snapshot> snapshot_;

  // Writer-owned.
  std::vector<Retired> retired_;
  std::uint64_t next_seq_ = 1;
  std::uint64_t next_stamp_ = 1;
  std::unordered_set<std::uint64_t> written_;
  std::uint64_t flushes_ = 0;
  std::uint64_t maintenance_runs_ = 0;
  MaintenanceFootprint footprint_;
  bool audit_after_maintenance_ = false;
  std::set<std::uint64_t> audited_seqs_;
  std::vector<Violation> maintenance_violations_;
  std::uint64_t audited_runs_ = 0;
};

}  // namespace sda
