#include "sda/workload.hpp"

#include "sda/cow_btree.hpp"
#include "sda/oracle.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <sstream>

namespace sda {

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw Error(ErrorCode::invalid_argument, "Rng::below(0)");
  const std::uint64_t threshold = (0 - n) % n;
  for (;;) {
    const auto r = gen_();
    if (r >= threshold) return r % n;
  }
}

bool Rng::chance(Fraction p) {
  if (p.num == 0) return false;
  if (p.num >= p.den) return true;
  return below(p.den) < p.num;
}

std::string Rng::bytes(std::size_t n) {
  std::string out(n, '\0');
  for (std::size_t i = 0; i < n; i += 8) {
    auto r = gen_();
    for (std::size_t j = i; j < std::min(n, i + 8); ++j) {
      out[j] = static_cast<char>(r & 0xff);
      r >>= 8;
    }
  }
  return out;
}

std::string_view to_string(OpKind kind) noexcept {
  switch (kind) {
    case OpKind::put: return "put";
    case OpKind::delete_key: return "delete_key";
    case OpKind::get: return "get";
    case OpKind::range: return "range";
    case OpKind::clone: return "clone";
    case OpKind::delete_version: return "delete_version";
  }
  return "?";
}

void encode_op(const Op& op, std::string& out) {
  put_u8(out, static_cast<std::uint8_t>(op.kind));
  put_u64(out, op.version.value);
  put_u16(out, static_cast<std::uint16_t>(op.key.size()));
  put_bytes(out, op.key);
  put_u16(out, static_cast<std::uint16_t>(op.end.size()));
  put_bytes(out, op.end);
  put_u32(out, static_cast<std::uint32_t>(op.value.size()));
  put_bytes(out, op.value);
  put_u32(out, op.limit);
}

void WorkloadSpec::validate() const {
  if (key_len == 0 || key_len > kMaxKeyBytes) throw Error(ErrorCode::invalid_argument, "key_len out of range");
  if (value_len > kMaxValueBytes) throw Error(ErrorCode::invalid_argument, "value_len out of range");
  if (clone_interval == 0) throw Error(ErrorCode::invalid_argument, "clone_interval must be positive");
  if (range_query_interval == 0) throw Error(ErrorCode::invalid_argument, "range_query_interval must be positive");
  if (key_space != 0 && key_len < 8) throw Error(ErrorCode::invalid_argument, "key_space needs key_len >= 8");
  for (const auto& p : {leaf_clone_prob, delete_key_prob, get_prob}) {
    if (p.den == 0 || p.num > p.den) throw Error(ErrorCode::invalid_argument, "probability outside [0, 1]");
  }
}

WorkloadSpec WorkloadSpec::from_map(std::map<std::string, std::string>& kv) {
  WorkloadSpec s;
  auto take = [&](const char* key, auto&& apply) {
    if (auto it = kv.find(key); it != kv.end()) {
      apply(it->second);
      kv.erase(it);
    }
  };
  auto u64 = [&](const char* key, std::uint64_t& field) {
    take(key, [&](const std::string& v) { field = parse_u64(key, v); });
  };
  auto u32 = [&](const char* key, std::uint32_t& field) {
    take(key, [&](const std::string& v) { field = static_cast<std::uint32_t>(parse_u64(key, v)); });
  };
  auto frac = [&](const char* key, Fraction& field) {
    take(key, [&](const std::string& v) { field = Fraction::parse(v); });
  };
  u64("seed", s.seed);
  u64("inserts", s.total_inserts);
  u32("key_len", s.key_len);
  u32("value_len", s.value_len);
  u64("clone_interval", s.clone_interval);
  frac("leaf_clone_prob", s.leaf_clone_prob);
  u32("range_query_size", s.range_query_size);
  u64("range_query_interval", s.range_query_interval);
  u64("key_space", s.key_space);
  frac("delete_key_prob", s.delete_key_prob);
  frac("get_prob", s.get_prob);
  u64("delete_version_interval", s.delete_version_interval);
  s.validate();
  return s;
}

WorkloadGenerator::WorkloadGenerator(WorkloadSpec spec) : spec_(std::move(spec)), rng_(spec_.seed) {
  spec_.validate();
  tree_.create_root();
  refresh();
}

void WorkloadGenerator::refresh() {
  leaves_ = tree_.leaves();
  live_ = tree_.live_versions();
  internal_.clear();
  for (auto v : live_) {
    if (tree_.has_live_children(v)) internal_.push_back(v);
  }
}

VersionId WorkloadGenerator::pick(const std::vector<VersionId>& from) {
  return from[rng_.below(from.size())];
}

Key WorkloadGenerator::random_key() {
  if (spec_.key_space == 0) return rng_.bytes(spec_.key_len);
  const auto i = rng_.below(spec_.key_space);
  std::string digits = std::to_string(i);
  return "k" + std::string(spec_.key_len - 1 - std::min<std::size_t>(digits.size(), spec_.key_len - 1), '0') + digits;
}

Key WorkloadGenerator::known_key() {
  if (spec_.key_space != 0 || sample_.empty() || rng_.below(2) == 0) return random_key();
  return sample_[rng_.below(sample_.size())];
}

void WorkloadGenerator::slot() {
  ++inserts_;
  Op op;
  op.version = pick(leaves_);
  if (rng_.chance(spec_.delete_key_prob)) {
    op.kind = OpKind::delete_key;
    op.key = known_key();
  } else {
    op.kind = OpKind::put;
    op.key = random_key();
    op.value = rng_.bytes(spec_.value_len);
    // Reservoir of written keys for later gets and deletes.
    ++seen_;
    if (sample_.size() < 4096) {
      sample_.push_back(op.key);
    } else if (const auto j = rng_.below(seen_); j < sample_.size()) {
      sample_[j] = op.key;
    }
  }
  pending_.push_back(std::move(op));

  if (rng_.chance(spec_.get_prob)) {
    Op g;
    g.kind = OpKind::get;
    g.version = pick(live_);
    g.key = known_key();
    pending_.push_back(std::move(g));
  }
  if (inserts_ % spec_.range_query_interval == 0) {
    Op r;
    r.kind = OpKind::range;
    r.version = pick(live_);
    r.key = random_key();
    r.end = std::string(spec_.key_len, '\xff');
    r.limit = spec_.range_query_size;
    pending_.push_back(std::move(r));
  }
  if (spec_.delete_version_interval != 0 && inserts_ % spec_.delete_version_interval == 0 && leaves_.size() >= 2) {
    const auto v = pick(leaves_);
    if (v != kRootVersion) {
      Op d;
      d.kind = OpKind::delete_version;
      d.version = v;
      tree_.delete_version(v);
      refresh();
      pending_.push_back(std::move(d));
    }
  }
  if (inserts_ % spec_.clone_interval == 0) {
    Op c;
    c.kind = OpKind::clone;
    const bool leaf = internal_.empty() || rng_.chance(spec_.leaf_clone_prob);
    c.version = leaf ? pick(leaves_) : pick(internal_);
    tree_.clone(c.version);
    refresh();
    pending_.push_back(std::move(c));
  }
}

std::optional<Op> WorkloadGenerator::next() {
  while (pending_pos_ >= pending_.size()) {
    pending_.clear();
    pending_pos_ = 0;
    if (inserts_ >= spec_.total_inserts) return std::nullopt;
    slot();
  }
  return std::move(pending_[pending_pos_++]);
}

std::vector<Op> gen_workload(const WorkloadSpec& spec) {
  WorkloadGenerator g(spec);
  std::vector<Op> out;
  while (auto op = g.next()) out.push_back(std::move(*op));
  return out;
}

std::optional<Target> parse_target(std::string_view text) {
  if (text == "sda") return Target::sda;
  if (text == "cow") return Target::cow;
  if (text == "both") return Target::both;
  return std::nullopt;
}

std::string csv_header() {
  return "schema,target,ops_done,inserts_done,inserts_per_window,blocks_read,blocks_written,sequential_fraction,"
         "stored_entries,dup_factor,level_arrays,range_entries,range_blocks_read,wall_ms";
}

std::string to_csv(const MetricsRow& r) {
  char fractions[96];
  std::snprintf(fractions, sizeof fractions, "%.6f", r.sequential_fraction);
  char dup[32];
  std::snprintf(dup, sizeof dup, "%.6f", r.dup_factor);
  char wall[32];
  std::snprintf(wall, sizeof wall, "%.1f", r.wall_ms);
  std::ostringstream os;
  os << kCsvSchema << ',' << r.target << ',' << r.ops_done << ',' << r.inserts_done << ',' << r.inserts_per_window
     << ',' << r.blocks_read << ',' << r.blocks_written << ',' << fractions << ',' << r.stored_entries << ',' << dup
     << ',' << r.level_arrays << ',' << r.range_entries << ',' << r.range_blocks_read << ',' << wall;
  return os.str();
}

void BenchOptions::apply_config(std::map<std::string, std::string> kv) {
  auto take = [&](const char* key) -> std::optional<std::string> {
    auto it = kv.find(key);
    if (it == kv.end()) return std::nullopt;
    auto v = it->second;
    kv.erase(it);
    return v;
  };
  if (auto v = take("cow_max_node_entries")) cow_max_node_entries = static_cast<std::uint32_t>(parse_u64("cow_max_node_entries", *v));
  if (auto v = take("cow_device_blocks")) cow_device_blocks = parse_u64("cow_device_blocks", *v);
  if (auto v = take("row_interval")) row_interval = parse_u64("row_interval", *v);
  if (auto v = take("audit_after_maintenance")) audit_after_maintenance = parse_bool("audit_after_maintenance", *v);
  store = StoreConfig::from_map(kv);
  const auto seed = workload.seed;
  const auto inserts = workload.total_inserts;
  workload = WorkloadSpec::from_map(kv);
  if (!kv.count("seed")) workload.seed = seed;
  if (!kv.count("inserts")) workload.total_inserts = inserts;
  if (!kv.empty()) throw Error(ErrorCode::invalid_argument, "unknown config key " + kv.begin()->first);
}

namespace {

using Clock = std::chrono::steady_clock;

std::string format_levels(const StoreStats& s) {
  std::string out;
  for (const auto& [level, count] : s.level_arrays) {
    if (!out.empty()) out += ';';
    out += std::to_string(level) + ':' + std::to_string(count);
  }
  return out;
}

double sequential_fraction(const IoStats& io) {
  const auto total = io.reads + io.writes;
  if (total == 0) return 0.0;
  return static_cast<double>(io.sequential_reads + io.sequential_writes) / static_cast<double>(total);
}

/// Outcome of one operation on one implementation: the error code it threw,
/// or its query result.
struct Outcome {
  std::optional<ErrorCode> error;
  std::optional<std::string> value;
  std::vector<std::pair<Key, std::string>> rows;

  bool operator==(const Outcome&) const = default;
};

template <typename F>
Outcome attempt(F&& f) {
  Outcome o;
  try {
    f(o);
  } catch (const Error& e) {
    o.error = e.code();
  }
  return o;
}

std::string describe(const Outcome& o) {
  if (o.error) return "error " + std::string(to_string(*o.error));
  if (!o.rows.empty()) return std::to_string(o.rows.size()) + " rows";
  return o.value ? "value(" + std::to_string(o.value->size()) + " bytes)" : "absent";
}

template <typename Dict>
Outcome apply_op(Dict& d, const Op& op) {
  return attempt([&](Outcome& o) {
    switch (op.kind) {
      case OpKind::put: d.put(op.key, op.value, op.version); break;
      case OpKind::delete_key: d.delete_key(op.key, op.version); break;
      case OpKind::get: o.value = d.get(op.key, op.version); break;
      case OpKind::clone: d.clone(op.version); break;
      case OpKind::delete_version: d.delete_version(op.version); break;
      case OpKind::range: break;  // handled by the caller
    }
  });
}

}  // namespace

BenchResult run_bench(const BenchOptions& o) {
  o.workload.validate();
  o.store.validate();
  const bool want_sda = o.target != Target::cow;
  const bool want_cow = o.target != Target::sda;
  const auto row_interval = o.row_interval ? o.row_interval : o.workload.range_query_interval;

  std::unique_ptr<Store> sda;
  std::shared_ptr<BlockDevice> cow_device;
  std::unique_ptr<CowBTree> cow;
  std::unique_ptr<Oracle> oracle;
  if (want_sda) {
    auto env = o.store_dir ? StorageEnv::create_dir(*o.store_dir / "sda", o.store.block_size, o.store.device_blocks)
                           : StorageEnv::ram(o.store.block_size, o.store.device_blocks);
    sda = Store::create(std::move(env), o.store);
    sda->set_audit_after_maintenance(o.audit_after_maintenance);
    sda->create_root();
  }
  if (want_cow) {
    if (o.store_dir) {
      std::filesystem::create_directories(*o.store_dir / "cow");
      std::filesystem::remove(*o.store_dir / "cow" / "device.blk");
      cow_device = std::make_shared<FileDevice>(*o.store_dir / "cow" / "device.blk", o.store.block_size,
                                                o.cow_device_blocks);
    } else {
      cow_device = std::make_shared<RamDevice>(o.store.block_size, o.cow_device_blocks);
    }
    cow = std::make_unique<CowBTree>(cow_device, o.cow_max_node_entries);
    cow->create_root();
  }
  if (o.verify) {
    oracle = std::make_unique<Oracle>();
    oracle->create_root();
  }

  BenchResult res;
  const auto t0 = Clock::now();
  std::uint64_t last_row_inserts = 0;
  std::uint64_t inserts = 0;

  auto mismatch = [&](const char* who, const Op& op, const Outcome& got, const Outcome& want) {
    ++res.mismatches;
    if (res.mismatch_details.size() < 10) {
      res.mismatch_details.push_back(std::string(who) + " op " + std::to_string(res.ops) + " (" +
                                     std::string(to_string(op.kind)) + " at v" + std::to_string(op.version.value) +
                                     "): got " + describe(got) + ", oracle " + describe(want));
    }
  };

  auto emit_rows = [&] {
    const double wall = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    if (sda) {
      MetricsRow r;
      r.target = "sda";
      r.ops_done = res.ops;
      r.inserts_done = inserts;
      r.inserts_per_window = inserts - last_row_inserts;
      const auto io = sda->io();
      r.blocks_read = io.reads;
      r.blocks_written = io.writes;
      r.sequential_fraction = sequential_fraction(io);
      const auto st = sda->stats();
      r.stored_entries = st.stored_entries;
      r.dup_factor = st.dup_factor;
      r.level_arrays = format_levels(st);
      r.range_entries = res.sda.range_entries;
      r.range_blocks_read = res.sda.range_io.reads;
      r.wall_ms = wall;
      if (o.on_row) o.on_row(r);
      res.rows.push_back(std::move(r));
    }
    if (cow) {
      MetricsRow r;
      r.target = "cow";
      r.ops_done = res.ops;
      r.inserts_done = inserts;
      r.inserts_per_window = inserts - last_row_inserts;
      const auto io = cow->io();
      r.blocks_read = io.reads;
      r.blocks_written = io.writes;
      r.sequential_fraction = sequential_fraction(io);
      r.stored_entries = cow->blocks_allocated();
      r.range_entries = res.cow.range_entries;
      r.range_blocks_read = res.cow.range_io.reads;
      r.wall_ms = wall;
      if (o.on_row) o.on_row(r);
      res.rows.push_back(std::move(r));
    }
    last_row_inserts = inserts;
  };

  WorkloadGenerator gen(o.workload);
  while (auto next = gen.next()) {
    const Op& op = *next;
    ++res.ops;
    const bool is_write = op.kind == OpKind::put || op.kind == OpKind::delete_key;
    std::optional<Outcome> want;
    if (oracle) {
      if (op.kind == OpKind::range) {
        want = attempt([&](Outcome& out) { out.rows = oracle->range(op.key, op.end, op.version, op.limit); });
      } else {
        want = apply_op(*oracle, op);
      }
    }
    auto run_target = [&](auto& dict, TargetSummary& sum, const char* who, auto io_of) {
      const auto before = io_of();
      Outcome got;
      if (op.kind == OpKind::range) {
        got = attempt([&](Outcome& out) {
          if constexpr (std::is_same_v<std::decay_t<decltype(dict)>, Store>) {
            ReadTrace trace;
            out.rows = dict.range_query(op.key, op.end, op.version, op.limit, &trace);
            sum.range_candidates += trace.candidates;
          } else {
            out.rows = dict.range(op.key, op.end, op.version, op.limit);
          }
        });
      } else {
        got = apply_op(dict, op);
      }
      const auto delta = io_of() - before;
      if (is_write) sum.insert_io += delta;
      if (op.kind == OpKind::range) {
        sum.range_io += delta;
        ++sum.range_queries;
        sum.range_entries += got.rows.size();
      }
      if (want) {
        ++res.checks;
        if (!(got == *want)) mismatch(who, op, got, *want);
      } else if (got.error) {
        throw Error(*got.error, std::string(who) + " failed on " + std::string(to_string(op.kind)));
      }
    };
    if (sda) run_target(*sda, res.sda, "sda", [&] { return sda->io(); });
    if (cow) run_target(*cow, res.cow, "cow", [&] { return cow->io(); });
    if (is_write) {
      ++inserts;
      if (inserts % row_interval == 0) emit_rows();
    }
  }
  if (inserts != last_row_inserts || res.rows.empty()) emit_rows();

  if (sda) {
    res.sda.total_io = sda->io();
    res.sda.store = sda->stats();
    res.violations = sda->audit();
    const auto during = sda->maintenance_violations();
    res.violations.insert(res.violations.end(), during.begin(), during.end());
    res.maintenance_audits = sda->audited_maintenance_runs();
    // Persist the buffer so the directory reopens with every write.
    if (o.store_dir) sda->close();
  }
  if (cow) {
    res.cow.total_io = cow->io();
    res.cow.cow_blocks_allocated = cow->blocks_allocated();
  }
  return res;
}

std::uint64_t CrashReport::failures() const noexcept {
  return static_cast<std::uint64_t>(std::count_if(cases.begin(), cases.end(), [](const CrashCase& c) { return !c.ok(); }));
}

namespace {

bool same_state(const Store& store, const Oracle& oracle, std::string* why) {
  const auto tree = store.tree();
  if (!(tree == oracle.tree())) {
    if (why) *why = "version tree differs";
    return false;
  }
  const std::string lo;
  const std::string hi(kMaxKeyBytes, '\xff');
  for (auto v : tree.live_versions()) {
    if (store.range_query(lo, hi, v) != oracle.range(lo, hi, v)) {
      if (why) *why = "contents differ at v" + std::to_string(v.value);
      return false;
    }
  }
  return true;
}

Oracle replay(const std::vector<Op>& ops, std::size_t count) {
  Oracle o;
  o.create_root();
  for (std::size_t i = 0; i < count; ++i) apply_op(o, ops[i]);
  return o;
}

/// Runs `ops` against a fresh store; returns the number of leading ops
/// covered by the last commit observed, and the number of commits. A
/// SimulatedCrash propagates with `progress` describing where it happened.
struct Progress {
  std::size_t committed_ops = 0;
  std::size_t current_op = 0;
  std::uint64_t commits = 0;
};

void drive(Store& store, Oracle& oracle, const std::vector<Op>& ops, Progress& p) {
  auto epoch = store.epoch();
  for (std::size_t i = 0; i < ops.size(); ++i) {
    p.current_op = i;
    const auto& op = ops[i];
    apply_op(oracle, op);
    if (op.kind == OpKind::range) continue;
    const auto got = apply_op(store, op);
    if (got.error) throw Error(*got.error, "store rejected a valid op during the crash sweep");
    if (store.epoch() != epoch) {
      p.commits += store.epoch() - epoch;
      epoch = store.epoch();
      p.committed_ops = i + 1;
    }
  }
}

}  // namespace

CrashReport run_crash_sweep(const CrashOptions& options) {
  options.workload.validate();
  options.store.validate();
  const auto ops = gen_workload(options.workload);
  CrashReport report;

  {
    CrashInjector counter(0);
    auto store = Store::create(StorageEnv::ram(options.store.block_size, options.store.device_blocks), options.store);
    store->create_root();
    store->checkpoint();
    store->set_injector(&counter);
    Oracle oracle;
    oracle.create_root();
    Progress p;
    drive(*store, oracle, ops, p);
    report.total_points = counter.count();
    report.commits = p.commits;
  }

  std::vector<std::uint64_t> targets;
  if (options.max_points == 0 || options.max_points >= report.total_points) {
    for (std::uint64_t t = 1; t <= report.total_points; ++t) targets.push_back(t);
  } else {
    for (std::uint64_t k = 0; k < options.max_points; ++k) {
      targets.push_back(1 + k * report.total_points / options.max_points);
    }
  }

  for (const auto t : targets) {
    if (options.on_progress) options.on_progress(t, report.total_points);
    auto env = StorageEnv::ram(options.store.block_size, options.store.device_blocks);
    CrashInjector injector(t);
    CrashCase c;
    c.point = t;
    Progress p;
    Oracle post;
    post.create_root();
    {
      auto store = Store::create(env, options.store);
      store->create_root();
      store->checkpoint();
      store->set_injector(&injector);
      try {
        drive(*store, post, ops, p);
        c.problems.push_back("kill point never reached");
      } catch (const SimulatedCrash& crash) {
        c.label = crash.point;
      }
    }
    try {
      auto recovered = Store::open(env);
      c.epoch = recovered->recovery().epoch;
      c.orphan_blocks = recovered->recovery().orphan_blocks;
      const auto pre = replay(ops, p.committed_ops);
      std::string why_pre, why_post;
      c.matches_pre = same_state(*recovered, pre, &why_pre);
      c.matches_post = same_state(*recovered, post, &why_post);
      if (!c.matches_pre && !c.matches_post) c.problems.push_back("pre: " + why_pre + "; post: " + why_post);
      for (auto& s : recovered->check_space()) c.problems.push_back(std::move(s));
      for (auto& v : recovered->audit()) c.problems.push_back(v.kind + ": " + v.detail);
    } catch (const Error& e) {
      c.problems.push_back(std::string("recovery failed: ") + e.what());
    }
    report.cases.push_back(std::move(c));
  }
  return report;
}

}  // namespace sda
