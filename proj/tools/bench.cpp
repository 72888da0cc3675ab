// bench: runs the versioned workload against sda / cow, audits stores and
// sweeps crash points.
#include "sda/store.hpp"
#include "sda/workload.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitMismatch = 1;
constexpr int kExitViolation = 2;
constexpr int kExitIo = 3;

int exit_for(const sda::Error& e) {
  switch (e.code()) {
    case sda::ErrorCode::io_error:
    case sda::ErrorCode::corruption:
    case sda::ErrorCode::out_of_space:
    case sda::ErrorCode::unrecoverable:
      return kExitIo;
    default:
      return kExitViolation;
  }
}

void print_violations(const std::vector<sda::Violation>& vs) {
  for (const auto& v : vs) std::cerr << "violation " << v.kind << " array " << v.seq << ": " << v.detail << "\n";
}

// Figure-style series: per window, inserts per 1000 block IOs and range
// entries returned per block read.
void write_plot_data(const std::vector<sda::MetricsRow>& rows, std::ostream& out) {
  out << "series,target,ops_done,value\n";
  std::map<std::string, sda::MetricsRow> prev;
  for (const auto& r : rows) {
    const auto& p = prev[r.target];
    const auto io = (r.blocks_read - p.blocks_read) + (r.blocks_written - p.blocks_written);
    const auto range_reads = r.range_blocks_read - p.range_blocks_read;
    const auto range_entries = r.range_entries - p.range_entries;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f", io ? 1000.0 * static_cast<double>(r.inserts_per_window) / io : 0.0);
    out << "insert," << r.target << ',' << r.ops_done << ',' << buf << '\n';
    if (range_reads) {
      std::snprintf(buf, sizeof buf, "%.4f", static_cast<double>(range_entries) / range_reads);
      out << "range," << r.target << ',' << r.ops_done << ',' << buf << '\n';
    }
    prev[r.target] = r;
  }
}

struct RunArgs {
  std::string target = "sda";
  std::uint64_t inserts = 100000;
  std::uint64_t seed = 1;
  bool verify = false;
  bool audit_after_maintenance = false;
  std::string config;
  std::string store;
  std::string out;
  std::string plot_data;
};

int cmd_run(const RunArgs& a) {
  sda::BenchOptions o;
  o.workload.total_inserts = a.inserts;
  o.workload.seed = a.seed;
  if (!a.config.empty()) o.apply_config(sda::load_key_values(a.config));
  // Command-line values win over the config file.
  o.workload.total_inserts = a.inserts;
  o.workload.seed = a.seed;
  const auto target = sda::parse_target(a.target);
  if (!target) throw sda::Error(sda::ErrorCode::invalid_argument, "unknown target " + a.target);
  o.target = *target;
  o.verify = a.verify;
  o.audit_after_maintenance = o.audit_after_maintenance || a.audit_after_maintenance;
  if (!a.store.empty()) o.store_dir = a.store;

  std::ofstream csv;
  std::ostream* out = &std::cout;
  if (!a.out.empty() && a.out != "-") {
    csv.open(a.out);
    if (!csv) throw sda::Error(sda::ErrorCode::io_error, "cannot open " + a.out);
    out = &csv;
  }
  *out << sda::csv_header() << '\n';
  o.on_row = [&](const sda::MetricsRow& r) { *out << sda::to_csv(r) << '\n'; };

  auto res = sda::run_bench(o);
  out->flush();
  if (!a.plot_data.empty()) {
    std::ofstream plot(a.plot_data);
    if (!plot) throw sda::Error(sda::ErrorCode::io_error, "cannot open " + a.plot_data);
    write_plot_data(res.rows, plot);
  }
  std::cerr << "ops " << res.ops << ", checks " << res.checks << ", mismatches " << res.mismatches
            << ", violations " << res.violations.size() << "\n";
  if (o.target != sda::Target::cow) {
    std::cerr << "sda: blocks_written " << res.sda.total_io.writes << ", blocks_read " << res.sda.total_io.reads
              << ", dup_factor " << res.sda.store.dup_factor << "\n";
  }
  if (o.target != sda::Target::sda) {
    std::cerr << "cow: blocks_written " << res.cow.total_io.writes << ", blocks_read " << res.cow.total_io.reads
              << "\n";
  }
  for (const auto& d : res.mismatch_details) std::cerr << "mismatch " << d << "\n";
  print_violations(res.violations);
  return res.exit_code();
}

int cmd_audit(const std::string& dir) {
  std::filesystem::path path = dir;
  // Accept a bench run directory as well as a store directory.
  if (!std::filesystem::exists(path / "EPOCH") && std::filesystem::exists(path / "sda")) path /= "sda";
  auto store = sda::Store::open(sda::StorageEnv::open_dir(path), false);
  const auto& rec = store->recovery();
  for (const auto& n : rec.notes) std::cerr << "recovery: " << n << "\n";
  auto violations = store->audit();
  const auto st = store->stats();
  std::cout << "epoch " << rec.epoch << ", arrays " << st.array_count << ", blocks " << st.array_blocks
            << ", stored_entries " << st.stored_entries << ", orphan_blocks " << rec.orphan_blocks
            << ", violations " << violations.size() << "\n";
  print_violations(violations);
  return violations.empty() ? kExitOk : kExitViolation;
}

int cmd_crash(const std::string& points, std::uint64_t inserts, std::uint64_t seed, const std::string& config) {
  sda::CrashOptions o;
  o.workload.total_inserts = inserts;
  o.workload.seed = seed;
  o.workload.clone_interval = 1000;
  o.workload.range_query_interval = 1000;
  o.store.block_size = 4096;
  o.store.chunk_bytes = 64 * 1024;
  o.store.flush_entries = 256;
  o.store.device_blocks = 1 << 16;
  if (!config.empty()) {
    auto kv = sda::load_key_values(config);
    o.store = sda::StoreConfig::from_map(kv);
    o.workload = sda::WorkloadSpec::from_map(kv);
    if (!kv.empty()) throw sda::Error(sda::ErrorCode::invalid_argument, "unknown config key " + kv.begin()->first);
    o.workload.total_inserts = inserts;
    o.workload.seed = seed;
  }
  if (points != "all") o.max_points = sda::parse_u64("kill-points", points);
  auto report = sda::run_crash_sweep(o);
  std::uint64_t pre = 0, post = 0, orphans = 0;
  for (const auto& c : report.cases) {
    pre += c.matches_pre;
    post += c.matches_post && !c.matches_pre;
    orphans += c.orphan_blocks;
    if (!c.ok()) {
      std::cerr << "kill point " << c.point << " (" << c.label << "):";
      for (const auto& p : c.problems) std::cerr << " " << p << ";";
      std::cerr << "\n";
    }
  }
  std::cout << "kill points " << report.total_points << ", commits " << report.commits << ", replayed "
            << report.cases.size() << ", recovered pre " << pre << ", recovered post " << post
            << ", orphan blocks reclaimed " << orphans << ", failures " << report.failures() << "\n";
  return report.failures() ? kExitViolation : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Versioned dictionary benchmark harness"};
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "run the workload and emit CSV metrics");
  run_cmd->add_option("--target", run.target, "sda, cow or both")->check(CLI::IsMember({"sda", "cow", "both"}));
  run_cmd->add_option("--inserts", run.inserts, "number of insert slots");
  run_cmd->add_option("--seed", run.seed, "workload seed");
  run_cmd->add_flag("--verify", run.verify, "shadow every operation on the oracle");
  run_cmd->add_flag("--audit-after-maintenance", run.audit_after_maintenance, "audit each maintenance result");
  run_cmd->add_option("--config", run.config, "key = value config file")->check(CLI::ExistingFile);
  run_cmd->add_option("--store", run.store, "directory for file-backed devices (default: in memory)");
  run_cmd->add_option("--out", run.out, "CSV output path, - for stdout");
  run_cmd->add_option("--plot-data", run.plot_data, "write insert / range series to this file");

  std::string audit_dir;
  auto* audit_cmd = app.add_subcommand("audit", "recover a store directory and audit it");
  audit_cmd->add_option("--store", audit_dir, "store directory")->required();

  std::string points = "all";
  std::uint64_t crash_inserts = 10000;
  std::uint64_t crash_seed = 1;
  std::string crash_config;
  auto* crash_cmd = app.add_subcommand("crash-test", "crash at every commit kill point and check recovery");
  crash_cmd->add_option("--kill-points", points, "all, or a number of evenly spaced points");
  crash_cmd->add_option("--inserts", crash_inserts, "workload insert slots");
  crash_cmd->add_option("--seed", crash_seed, "workload seed");
  crash_cmd->add_option("--config", crash_config, "key = value config file")->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*run_cmd) return cmd_run(run);
    if (*audit_cmd) return cmd_audit(audit_dir);
    if (*crash_cmd) return cmd_crash(points, crash_inserts, crash_seed, crash_config);
  } catch (const sda::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitOk;
}
