#include "sda/store.hpp"

#include "sda/density.hpp"

#include <algorithm>
#include <numeric>

namespace sda {

namespace {

std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

bool on_path(std::span<const VersionId> sorted_path, VersionId v) noexcept {
  return std::binary_search(sorted_path.begin(), sorted_path.end(), v);
}

/// Closest ancestor wins; along one path a larger id is always closer.
/// Equal versions fall back to the newer write.
bool beats(const Entry& e, const Entry* best) noexcept {
  if (!best) return true;
  if (e.version != best->version) return e.version > best->version;
  return e.stamp > best->stamp;
}

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) { parent[find(a)] = find(b); }
};

}  // namespace

std::uint64_t Store::pair_hash(std::string_view key, VersionId v) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : key) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return mix64(h ^ mix64(v.value + 0x9e3779b97f4a7c15ULL));
}

Store::Store(StorageEnv env, StoreConfig config, CrashInjector* injector)
    : env_(std::move(env)),
      config_(config),
      injector_(injector),
      allocator_(env_.device->capacity(), config_.chunk_blocks()),
      snapshot_(std::make_shared<Snapshot>()) {}

Store::~Store() = default;

std::unique_ptr<Store> Store::create(StorageEnv env, StoreConfig config, CrashInjector* injector) {
  config.validate();
  if (env.device->block_size() != config.block_size || env.device->capacity() != config.device_blocks) {
    throw Error(ErrorCode::invalid_argument, "device geometry does not match the store config");
  }
  std::unique_ptr<Store> s(new Store(std::move(env), config, injector));
  s->log_ = std::make_unique<ManifestLog>(s->env_.meta, 0);
  std::lock_guard w(s->writer_);
  s->commit({}, {}, false);
  return s;
}

std::unique_ptr<Store> Store::open(StorageEnv env, bool auto_maintain, CrashInjector* injector) {
  auto rec = ManifestLog::recover(*env.meta);
  auto& m = rec.manifest;
  StoreConfig config = m.config;
  config.auto_maintain = auto_maintain;
  if (env.device->block_size() != config.block_size || env.device->capacity() != config.device_blocks) {
    throw Error(ErrorCode::corruption, "device geometry disagrees with the manifest");
  }
  std::unique_ptr<Store> s(new Store(std::move(env), config, injector));
  s->log_ = std::make_unique<ManifestLog>(s->env_.meta, m.epoch);
  const auto referenced = m.referenced_extents();
  s->allocator_ = Allocator::rebuild(s->env_.device->capacity(), config.chunk_blocks(), referenced);

  std::uint64_t stored_free = 0;
  for (const auto& e : m.free_list) stored_free += e.length;
  const auto ref_blocks = total_blocks(referenced);
  if (stored_free + ref_blocks > s->env_.device->capacity()) {
    rec.notes.push_back("stored free list overlaps referenced extents; rebuilt from the manifest arrays");
  } else {
    s->recovery_.orphan_blocks = s->env_.device->capacity() - ref_blocks - stored_free;
  }

  s->tree_ = std::move(m.tree);
  s->next_seq_ = m.next_seq;
  s->next_stamp_ = m.next_stamp;

  auto snap = std::make_shared<Snapshot>();
  snap->epoch = m.epoch;
  IoStream quiet{UINT64_MAX, false};
  for (auto& d : m.arrays) {
    auto a = ArrayReader::open(s->env_.device, d);
    for (const auto& e : a->read_all(quiet)) s->written_.insert(pair_hash(e.key, e.version));
    snap->arrays.push_back(std::move(a));
  }
  std::sort(snap->arrays.begin(), snap->arrays.end(), [](const auto& x, const auto& y) { return x->seq() < y->seq(); });
  s->snapshot_ = std::move(snap);
  s->recovery_.epoch = m.epoch;
  s->recovery_.notes = std::move(rec.notes);
  // A crash between a flush commit and the maintenance commit that follows
  // it leaves a level with intersecting tags; finish that work now.
  if (auto_maintain) {
    const auto before = s->epoch();
    s->maintain_all();
    if (s->epoch() != before) s->recovery_.notes.push_back("completed interrupted maintenance");
  }
  return s;
}

VersionId Store::create_root() {
  std::lock_guard w(writer_);
  std::unique_lock lock(state_);
  return tree_.create_root();
}

VersionId Store::clone(VersionId parent) {
  std::lock_guard w(writer_);
  std::unique_lock lock(state_);
  return tree_.clone(parent);
}

void Store::delete_version(VersionId v) {
  std::lock_guard w(writer_);
  std::unique_lock lock(state_);
  tree_.delete_version(v);
}

void Store::put(const Key& key, std::string value, VersionId v) {
  validate_key(key);
  validate_value(value);
  std::lock_guard w(writer_);
  write_locked(key, Payload::value(std::move(value)), v);
}

void Store::delete_key(const Key& key, VersionId v) {
  validate_key(key);
  std::lock_guard w(writer_);
  write_locked(key, Payload::tombstone(), v);
}

void Store::write_locked(const Key& key, Payload payload, VersionId v) {
  tree_.require_live(v);
  {
    std::unique_lock lock(state_);
    buffer_[BufferKey{key, v}] = Buffered{std::move(payload), next_stamp_++};
  }
  written_.insert(pair_hash(key, v));
  if (buffer_.size() >= config_.flush_entries) flush_locked();
}

std::optional<std::string> Store::get(const Key& key, VersionId v, ReadTrace* trace) const {
  std::vector<VersionId> path;
  std::shared_ptr<const Snapshot> snap;
  Entry buffered;
  bool have_buffered = false;
  {
    std::shared_lock lock(state_);
    tree_.require_live(v);
    path = tree_.path(v);
    BufferKey probe{key, v};
    for (auto u : path) {
      probe.second = u;
      if (auto it = buffer_.find(probe); it != buffer_.end()) {
        buffered = Entry{key, u, it->second.payload, it->second.stamp};
        have_buffered = true;
        break;
      }
    }
    snap = snapshot_;
  }
  if (trace) {
    trace->epoch = snap->epoch;
    trace->seqs.clear();
    trace->candidates = 0;
    for (const auto& a : snap->arrays) trace->seqs.push_back(a->seq());
  }
  const Entry* best = have_buffered ? &buffered : nullptr;
  Entry winner;
  // Nothing can be closer than v itself, and the buffer holds the newest
  // write for every pair it contains.
  if (!(best && best->version == v)) {
    std::reverse(path.begin(), path.end());
    for (const auto& a : snap->arrays) {
      if (!a->tag().intersects(path)) continue;
      if (trace) ++trace->candidates;
      IoStream stream;
      for (auto& e : a->search(key, path, &stream)) {
        if (beats(e, best)) {
          winner = std::move(e);
          best = &winner;
        }
      }
    }
  }
  if (!best || best->payload.is_tombstone()) return std::nullopt;
  return best->payload.bytes();
}

std::vector<std::pair<Key, std::string>> Store::range_query(const Key& start, const Key& end, VersionId v,
                                                            std::size_t limit, ReadTrace* trace) const {
  if (start > end) throw Error(ErrorCode::invalid_argument, "range start is greater than range end");
  std::vector<VersionId> path;
  std::shared_ptr<const Snapshot> snap;
  std::vector<Entry> buffered;
  {
    std::shared_lock lock(state_);
    tree_.require_live(v);
    path = tree_.path(v);
    std::reverse(path.begin(), path.end());
    for (auto it = buffer_.lower_bound(BufferKey{start, VersionId{0}}); it != buffer_.end() && it->first.first <= end;
         ++it) {
      if (on_path(path, it->first.second)) {
        buffered.push_back(Entry{it->first.first, it->first.second, it->second.payload, it->second.stamp});
      }
    }
    snap = snapshot_;
  }
  if (trace) {
    trace->epoch = snap->epoch;
    trace->seqs.clear();
    for (const auto& a : snap->arrays) trace->seqs.push_back(a->seq());
  }

  std::vector<ArrayCursor> cursors;
  for (const auto& a : snap->arrays) {
    if (a->tag().intersects(path)) cursors.emplace_back(a, start, end);
  }
  if (trace) trace->candidates = cursors.size();

  std::vector<std::pair<Key, std::string>> out;
  std::size_t bi = 0;
  while (true) {
    // Smallest key among loaded sources; an unloaded cursor whose bound does
    // not exceed it might hold that key (or a smaller one) and is loaded.
    const Key* min = nullptr;
    for (;;) {
      min = bi < buffered.size() ? &buffered[bi].key : nullptr;
      for (auto& c : cursors) {
        if (!c.exhausted() && c.loaded() && (!min || c.probe() < *min)) min = &c.probe();
      }
      ArrayCursor* pending = nullptr;
      for (auto& c : cursors) {
        if (!c.exhausted() && !c.loaded() && (!min || c.probe() <= *min)) {
          pending = &c;
          break;
        }
      }
      if (!pending) break;
      pending->load();
    }
    if (!min) break;
    const Key k = *min;

    const Entry* best = nullptr;
    Entry winner;
    for (; bi < buffered.size() && buffered[bi].key == k; ++bi) {
      if (beats(buffered[bi], best)) {
        winner = buffered[bi];
        best = &winner;
      }
    }
    for (auto& c : cursors) {
      while (!c.exhausted()) {
        if (!c.loaded()) {
          if (c.probe() > k) break;
          c.load();
          continue;
        }
        const auto& e = c.current();
        if (e.key != k) break;
        if (on_path(path, e.version) && beats(e, best)) {
          winner = e;
          best = &winner;
        }
        c.advance();
      }
    }
    if (best && !best->payload.is_tombstone()) {
      out.emplace_back(k, best->payload.bytes());
      if (limit != 0 && out.size() >= limit) break;
    }
  }
  return out;
}

std::uint32_t Store::place(std::uint64_t count, std::uint32_t min_level) const noexcept {
  std::uint32_t l = min_level;
  while (l < 60 && count >= (config_.flush_entries << (l + 1))) ++l;
  return l;
}

std::shared_ptr<const ArrayReader> Store::write_array(std::span<const Entry> sorted, const VersionSet& tag,
                                                      std::uint32_t level) {
  if (injector_) injector_->hit("before array write");
  const ArrayBuildOptions options{config_.bloom_bits_per_key, config_.bloom_hashes};
  return ArrayReader::write(env_.device, allocator_, sorted, tag, level, next_seq_++, options);
}

std::vector<std::shared_ptr<const ArrayReader>> Store::write_pieces(std::vector<Entry>&& sorted,
                                                                    const VersionSet& w, std::uint32_t min_level,
                                                                    const VersionTree& tree,
                                                                    std::set<std::uint32_t>& touched) {
  std::vector<std::shared_ptr<const ArrayReader>> out;
  auto plans = plan_amplification(sorted, w, config_.delta_min, tree);
  for (auto& piece : materialize(std::move(sorted), std::move(plans))) {
    if (piece.entries.empty()) continue;
    const auto level = place(piece.entries.size(), min_level);
    out.push_back(write_array(piece.entries, piece.tag, level));
    touched.insert(level);
  }
  return out;
}

void Store::commit(const std::vector<std::shared_ptr<const ArrayReader>>& added,
                   const std::vector<std::shared_ptr<const ArrayReader>>& retired, bool clear_buffer) {
  auto next = std::make_shared<Snapshot>();
  for (const auto& a : snapshot_->arrays) {
    if (std::find(retired.begin(), retired.end(), a) == retired.end()) next->arrays.push_back(a);
  }
  next->arrays.insert(next->arrays.end(), added.begin(), added.end());
  std::sort(next->arrays.begin(), next->arrays.end(), [](const auto& x, const auto& y) { return x->seq() < y->seq(); });

  Manifest m;
  m.config = config_;
  m.tree = tree_;
  for (const auto& a : next->arrays) m.arrays.push_back(a->descriptor());
  m.free_list = allocator_.free_regions();
  m.next_seq = next_seq_;
  m.next_stamp = next_stamp_;

  env_.device->sync();
  log_->commit(m, injector_);

  for (const auto& a : added) allocator_.mark_referenced(a->descriptor().extents);
  for (const auto& a : retired) {
    allocator_.unreference(a->descriptor().extents);
    retired_.push_back({a, m.epoch});
  }
  next->epoch = m.epoch;
  {
    std::unique_lock lock(state_);
    snapshot_ = std::move(next);
    if (clear_buffer) buffer_.clear();
  }
  release_retired();
}

void Store::release_retired() {
  const auto epoch = log_->epoch();
  for (auto it = retired_.begin(); it != retired_.end();) {
    if (it->epoch < epoch && it->array.use_count() == 1) {
      allocator_.release(it->array->descriptor().extents);
      it = retired_.erase(it);
    } else {
      ++it;
    }
  }
}

void Store::flush() {
  std::lock_guard w(writer_);
  flush_locked();
}

void Store::flush_locked() {
  if (buffer_.empty()) return;
  release_retired();
  std::vector<Entry> run;
  run.reserve(buffer_.size());
  std::vector<VersionId> present;
  for (const auto& [k, b] : buffer_) {
    if (tree_.is_deleted(k.second)) continue;
    run.push_back(Entry{k.first, k.second, b.payload, b.stamp});
    present.push_back(k.second);
  }
  std::set<std::uint32_t> touched;
  std::vector<std::shared_ptr<const ArrayReader>> added;
  if (!run.empty()) added = write_pieces(std::move(run), VersionSet(std::move(present)), 0, tree_, touched);
  commit(added, {}, true);
  ++flushes_;
  if (config_.auto_maintain) maintain_from(std::move(touched));
}

void Store::maintain_level(std::uint32_t level) {
  std::lock_guard w(writer_);
  maintain_from({level});
}

void Store::maintain_all() {
  std::lock_guard w(writer_);
  std::set<std::uint32_t> levels;
  for (const auto& a : snapshot_->arrays) levels.insert(a->level());
  maintain_from(std::move(levels));
}

void Store::maintain_from(std::set<std::uint32_t> levels) {
  while (!levels.empty()) {
    const auto l = *levels.begin();
    levels.erase(levels.begin());
    maintain_one(l, levels);
  }
}

void Store::maintain_one(std::uint32_t level, std::set<std::uint32_t>& pending) {
  release_retired();
  const auto snap = snapshot_;
  std::vector<std::shared_ptr<const ArrayReader>> at_level;
  for (const auto& a : snap->arrays) {
    if (a->level() == level) at_level.push_back(a);
  }
  UnionFind uf(at_level.size());
  for (std::size_t i = 0; i < at_level.size(); ++i) {
    for (std::size_t j = i + 1; j < at_level.size(); ++j) {
      if (at_level[i]->tag().intersects(at_level[j]->tag())) uf.unite(i, j);
    }
  }
  std::map<std::size_t, std::vector<std::shared_ptr<const ArrayReader>>> groups;
  for (std::size_t i = 0; i < at_level.size(); ++i) groups[uf.find(i)].push_back(at_level[i]);

  std::vector<std::shared_ptr<const ArrayReader>> added;
  std::vector<std::shared_ptr<const ArrayReader>> retired;
  std::set<std::uint32_t> touched;
  MaintenanceFootprint fp;
  allocator_.reset_peak();
  const auto start_unreferenced = allocator_.unreferenced_blocks();

  for (auto& [root, group] : groups) {
    if (group.size() < 2) continue;
    std::vector<Entry> run;
    std::vector<VersionId> versions;
    std::size_t total = 0;
    for (const auto& a : group) total += a->entry_count();
    run.reserve(total);
    for (const auto& a : group) {
      IoStream stream;
      auto part = a->read_all(stream);
      std::move(part.begin(), part.end(), std::back_inserter(run));
      for (auto v : a->tag()) {
        if (!tree_.is_deleted(v)) versions.push_back(v);
      }
      fp.input_blocks += a->total_blocks();
    }
    std::sort(run.begin(), run.end(), [](const Entry& x, const Entry& y) {
      const auto c = entry_order(x, y);
      if (c != 0) return c < 0;
      return x.stamp > y.stamp;
    });
    // Exact (key, version) duplicates keep the newest write; entries of
    // deleted versions go. Tombstones stay.
    std::size_t keep = 0;
    for (std::size_t i = 0; i < run.size(); ++i) {
      if (keep > 0 && entry_order(run[keep - 1], run[i]) == 0) continue;
      if (tree_.is_deleted(run[i].version)) continue;
      if (keep != i) run[keep] = std::move(run[i]);
      ++keep;
    }
    run.resize(keep);
    retired.insert(retired.end(), group.begin(), group.end());
    if (run.empty() || versions.empty()) continue;
    auto pieces = write_pieces(std::move(run), VersionSet(std::move(versions)), level, tree_, touched);
    for (const auto& p : pieces) fp.output_blocks += p->total_blocks();
    added.insert(added.end(), pieces.begin(), pieces.end());
  }
  ++maintenance_runs_;
  if (retired.empty()) return;

  fp.peak_extra_blocks = allocator_.peak_unreferenced() - start_unreferenced;
  footprint_ = fp;
  commit(added, retired, false);
  for (auto l : touched) {
    if (l > level) pending.insert(l);
  }

  if (audit_after_maintenance_) {
    const auto now = snapshot_;
    for (const auto& a : now->arrays) {
      if (audited_seqs_.insert(a->seq()).second) audit_array(*a, tree_, maintenance_violations_);
    }
    audit_disjoint(*now, level, maintenance_violations_);
    ++audited_runs_;
  }
}

void Store::set_injector(CrashInjector* injector) {
  std::lock_guard w(writer_);
  injector_ = injector;
}

void Store::checkpoint() {
  std::lock_guard w(writer_);
  commit({}, {}, false);
}

void Store::close() {
  std::lock_guard w(writer_);
  flush_locked();
  // The first commit releases arrays retired by earlier commits; the second
  // records that space in the free list, so a clean reopen finds no orphans.
  commit({}, {}, false);
  commit({}, {}, false);
}

void Store::install_raw_array(std::vector<Entry> sorted, const VersionSet& tag, std::uint32_t level) {
  std::lock_guard w(writer_);
  std::sort(sorted.begin(), sorted.end(), entry_less);
  commit({write_array(sorted, tag, level)}, {}, false);
}

void Store::audit_array(const ArrayReader& a, const VersionTree& tree, std::vector<Violation>& out) const {
  const auto seq = a.seq();
  bool tag_ok = !a.tag().empty();
  if (!tag_ok) out.push_back({"tag", seq, "empty tag"});
  for (auto v : a.tag()) {
    if (!tree.exists(v)) {
      out.push_back({"tag", seq, "tag names unknown version " + std::to_string(v.value)});
      tag_ok = false;
    }
  }
  for (auto& p : a.verify_header()) out.push_back({"header", seq, std::move(p)});

  std::vector<Entry> entries;
  try {
    IoStream quiet{UINT64_MAX, false};
    entries = a.read_all(quiet, true);
  } catch (const Error& e) {
    out.push_back({"header", seq, e.what()});
    return;
  }
  for (std::size_t i = 1; i < entries.size(); ++i) {
    if (!entry_less(entries[i - 1], entries[i])) {
      out.push_back({"sortedness", seq, "entries " + std::to_string(i - 1) + " and " + std::to_string(i) +
                                            " out of order or duplicated"});
      break;
    }
  }
  for (const auto& e : entries) {
    if (!tree.exists(e.version)) {
      out.push_back({"tag", seq, "entry at unknown version " + std::to_string(e.version.value)});
      tag_ok = false;
      break;
    }
  }
  if (a.level() < 60 && a.entry_count() >= (config_.flush_entries << (a.level() + 1))) {
    out.push_back({"size", seq, std::to_string(a.entry_count()) + " entries at level " + std::to_string(a.level())});
  }
  if (tag_ok && !entries.empty()) {
    const auto rep = density(entries, a.tag(), tree);
    if (!rep.meets(config_.delta_min)) {
      out.push_back({"density", seq, "min live " + std::to_string(rep.min_live) + " of " +
                                         std::to_string(rep.entry_count) + " below " +
                                         std::to_string(config_.delta_min.num) + "/" +
                                         std::to_string(config_.delta_min.den)});
    }
  }
}

void Store::audit_disjoint(const Snapshot& snap, std::optional<std::uint32_t> level,
                           std::vector<Violation>& out) const {
  for (std::size_t i = 0; i < snap.arrays.size(); ++i) {
    const auto& a = snap.arrays[i];
    if (level && a->level() != *level) continue;
    for (std::size_t j = i + 1; j < snap.arrays.size(); ++j) {
      const auto& b = snap.arrays[j];
      if (b->level() == a->level() && a->tag().intersects(b->tag())) {
        out.push_back({"disjointness", b->seq(), "tag overlaps array " + std::to_string(a->seq()) + " at level " +
                                                     std::to_string(a->level())});
      }
    }
  }
}

void Store::audit_space(const Snapshot& snap, std::vector<Violation>& out) const {
  std::vector<std::pair<Extent, std::uint64_t>> extents;
  for (const auto& a : snap.arrays) {
    for (const auto& e : a->descriptor().extents) extents.push_back({e, a->seq()});
  }
  std::sort(extents.begin(), extents.end(), [](const auto& x, const auto& y) { return x.first.start < y.first.start; });
  for (std::size_t i = 0; i < extents.size(); ++i) {
    const auto& [e, seq] = extents[i];
    if (e.length == 0 || e.end() > env_.device->capacity()) out.push_back({"extents", seq, "extent outside device"});
    if (i > 0 && extents[i - 1].first.end() > e.start) {
      out.push_back({"extents", seq, "extent overlaps array " + std::to_string(extents[i - 1].second)});
    }
  }
  for (auto& p : allocator_.check()) out.push_back({"extents", 0, std::move(p)});

  // Allocator referenced set must be exactly the manifest extents, and the
  // only unreferenced allocations are retired arrays awaiting release.
  Allocator expected = Allocator::rebuild(env_.device->capacity(), allocator_.chunk_blocks(), [&] {
    std::vector<Extent> v;
    for (const auto& x : extents) v.push_back(x.first);
    return v;
  }());
  if (expected.referenced_regions() != allocator_.referenced_regions()) {
    out.push_back({"extents", 0, "allocator referenced set differs from manifest extents"});
  }
  std::uint64_t retired_blocks = 0;
  for (const auto& r : retired_) retired_blocks += r.array->total_blocks();
  if (allocator_.unreferenced_blocks() != retired_blocks) {
    out.push_back({"extents", 0, std::to_string(allocator_.unreferenced_blocks()) +
                                     " blocks allocated but unreferenced, " + std::to_string(retired_blocks) +
                                     " awaiting release"});
  }
}

std::vector<Violation> Store::audit() const {
  std::lock_guard w(writer_);
  std::vector<Violation> out;
  const auto snap = snapshot_;
  for (const auto& a : snap->arrays) audit_array(*a, tree_, out);
  audit_disjoint(*snap, std::nullopt, out);
  audit_space(*snap, out);
  return out;
}

std::vector<std::string> Store::check_space() const {
  std::lock_guard w(writer_);
  std::vector<Violation> v;
  audit_space(*snapshot_, v);
  std::vector<std::string> out;
  for (auto& x : v) out.push_back(x.detail);
  return out;
}

void Store::set_audit_after_maintenance(bool on) {
  std::lock_guard w(writer_);
  audit_after_maintenance_ = on;
}

std::vector<Violation> Store::maintenance_violations() const {
  std::lock_guard w(writer_);
  return maintenance_violations_;
}

std::uint64_t Store::audited_maintenance_runs() const {
  std::lock_guard w(writer_);
  return audited_runs_;
}

MaintenanceFootprint Store::last_footprint() const {
  std::lock_guard w(writer_);
  return footprint_;
}

StoreStats Store::stats() const {
  std::lock_guard w(writer_);
  StoreStats s;
  s.total_written = written_.size();
  s.buffered = buffer_.size();
  s.stored_entries = s.buffered;
  for (const auto& a : snapshot_->arrays) {
    s.stored_entries += a->entry_count();
    s.array_blocks += a->total_blocks();
    ++s.level_arrays[a->level()];
  }
  s.array_count = snapshot_->arrays.size();
  s.dup_factor = s.total_written ? static_cast<double>(s.stored_entries) / static_cast<double>(s.total_written) : 0.0;
  s.flushes = flushes_;
  s.maintenance_runs = maintenance_runs_;
  s.epoch = snapshot_->epoch;
  return s;
}

VersionTree Store::tree() const {
  std::shared_lock lock(state_);
  return tree_;
}

std::uint64_t Store::epoch() const {
  std::shared_lock lock(state_);
  return snapshot_->epoch;
}

std::vector<ArrayDescriptor> Store::arrays() const {
  std::shared_lock lock(state_);
  std::vector<ArrayDescriptor> out;
  for (const auto& a : snapshot_->arrays) out.push_back(a->descriptor());
  return out;
}

}  // namespace sda
