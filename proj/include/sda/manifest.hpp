#pragma once

#include "sda/array_file.hpp"
#include "sda/config.hpp"
#include "sda/version_tree.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace sda {

/// The atomically swapped root of a store: version tree, live arrays,
/// allocator state and the counters needed to resume after a restart.
struct Manifest {
  std::uint64_t epoch = 0;
  StoreConfig config;  // auto_maintain is not persisted
  VersionTree tree;
  std::vector<ArrayDescriptor> arrays;
  std::vector<Extent> free_list;
  std::uint64_t next_seq = 1;
  std::uint64_t next_stamp = 1;

  std::string encode() const;
  /// Throws corruption on a bad magic, format or checksum.
  static Manifest decode(std::string_view bytes);

  std::vector<Extent> referenced_extents() const;
};

/// Small named records kept next to the block file (MANIFEST.A, MANIFEST.B,
/// EPOCH). `write` replaces the whole record.
class MetaStore {
 public:
  virtual ~MetaStore() = default;
  virtual std::optional<std::string> read(const std::string& name) const = 0;
  virtual void write(const std::string& name, std::string_view bytes) = 0;
  /// Atomic replacement; used for the epoch pointer.
  virtual void replace(const std::string& name, std::string_view bytes) { write(name, bytes); }
};

class RamMetaStore final : public MetaStore {
 public:
  std::optional<std::string> read(const std::string& name) const override;
  void write(const std::string& name, std::string_view bytes) override;

 private:
  mutable std::mutex mu_;
  std::map<std::string, std::string> records_;
};

class DirMetaStore final : public MetaStore {
 public:
  explicit DirMetaStore(std::filesystem::path dir);

  std::optional<std::string> read(const std::string& name) const override;
  void write(const std::string& name, std::string_view bytes) override;
  void replace(const std::string& name, std::string_view bytes) override;

 private:
  std::filesystem::path dir_;
};

/// Thrown by CrashInjector at the selected kill point. Not an sda::Error, so
/// ordinary error handling never swallows it.
struct SimulatedCrash {
  std::string point;
};

/// Numbered kill points. Every call to `hit` advances the counter; the call
/// whose number equals `target` throws SimulatedCrash. With target 0 the
/// injector only counts, which is how a sweep learns how many points exist.
class CrashInjector {
 public:
  explicit CrashInjector(std::uint64_t target = 0) : target_(target) {}

  void hit(const char* point);
  /// Like hit, but returns true instead of throwing so the caller can leave
  /// partial state behind (a torn write) before throwing itself.
  bool fires(const char* point);

  std::uint64_t count() const noexcept { return count_; }
  std::uint64_t target() const noexcept { return target_; }
  const std::string& last_point() const noexcept { return last_; }

 private:
  std::uint64_t target_;
  std::uint64_t count_ = 0;
  std::string last_;
};

/// Two manifest slots plus an epoch pointer. Epoch e lives in slot e % 2, so
/// a commit never overwrites the manifest the pointer names.
class ManifestLog {
 public:
  static constexpr const char* kSlotNames[2] = {"MANIFEST.A", "MANIFEST.B"};
  static constexpr const char* kPointerName = "EPOCH";

  ManifestLog(std::shared_ptr<MetaStore> meta, std::uint64_t epoch) : meta_(std::move(meta)), epoch_(epoch) {}

  /// Assigns m.epoch = epoch() + 1, writes the slot, then switches the pointer.
  void commit(Manifest& m, CrashInjector* injector = nullptr);
  std::uint64_t epoch() const noexcept { return epoch_; }

  struct Recovered {
    Manifest manifest;
    std::vector<std::string> notes;  // fallbacks taken, invalid records seen
  };
  /// Pointer is authoritative; if its slot is unreadable, the other slot is
  /// used when it holds an older valid epoch. Without a valid pointer the
  /// highest valid slot wins. Throws unrecoverable when nothing is valid.
  static Recovered recover(const MetaStore& meta);

  static std::string encode_pointer(std::uint64_t epoch, std::uint8_t slot);

 private:
  std::shared_ptr<MetaStore> meta_;
  std::uint64_t epoch_;
};

/// Block device and metadata records backing one store.
struct StorageEnv {
  std::shared_ptr<BlockDevice> device;
  std::shared_ptr<MetaStore> meta;

  static StorageEnv ram(std::uint32_t block_size, std::uint64_t capacity);
  /// Creates (or truncates) `dir/device.blk` with the given geometry.
  static StorageEnv create_dir(const std::filesystem::path& dir, std::uint32_t block_size, std::uint64_t capacity);
  /// Opens an existing directory; geometry comes from the committed manifest.
  static StorageEnv open_dir(const std::filesystem::path& dir);
};

}  // namespace sda
