#include "helpers.hpp"
#include "sda/allocator.hpp"
#include "sda/array_file.hpp"
#include "sda/oracle.hpp"
#include "sda/store.hpp"
#include "sda/workload.hpp"

#include <doctest.h>

#include <random>
#include <set>

using namespace sda;
using testing::V;

TEST_SUITE("properties") {
  TEST_CASE("allocator: blocks are always free, referenced or in flight, never two of these") {
    std::mt19937_64 rng(77);
    for (int round = 0; round < 20; ++round) {
      const std::uint64_t cap = 200 + rng() % 800;
      Allocator a(cap, 1 + rng() % 20);
      std::vector<std::vector<Extent>> pending, committed;
      std::vector<int> owner(cap, 0);  // 0 free, 1 in flight, 2 referenced
      for (int step = 0; step < 400; ++step) {
        const auto op = rng() % 4;
        if (op == 0) {
          const auto n = 1 + rng() % 40;
          if (n > a.free_blocks()) {
            CHECK_THROWS_AS(a.allocate(n), Error);
            continue;
          }
          auto got = a.allocate(n);
          CHECK(total_blocks(got) == n);
          for (const auto& e : got) {
            CHECK(e.length <= std::max<std::uint64_t>(a.chunk_blocks(), got.size() == 1 ? n : 0));
            for (auto b = e.start; b < e.end(); ++b) {
              REQUIRE(owner[b] == 0);
              owner[b] = 1;
            }
          }
          pending.push_back(std::move(got));
        } else if (op == 1 && !pending.empty()) {
          const auto i = rng() % pending.size();
          a.mark_referenced(pending[i]);
          for (const auto& e : pending[i]) std::fill(owner.begin() + e.start, owner.begin() + e.end(), 2);
          committed.push_back(std::move(pending[i]));
          pending.erase(pending.begin() + i);
        } else if (op == 2 && !committed.empty()) {
          const auto i = rng() % committed.size();
          CHECK_THROWS_AS(a.release(committed[i]), Error);
          a.unreference(committed[i]);
          for (const auto& e : committed[i]) std::fill(owner.begin() + e.start, owner.begin() + e.end(), 1);
          pending.push_back(std::move(committed[i]));
          committed.erase(committed.begin() + i);
        } else if (op == 3 && !pending.empty()) {
          const auto i = rng() % pending.size();
          a.release(pending[i]);
          for (const auto& e : pending[i]) std::fill(owner.begin() + e.start, owner.begin() + e.end(), 0);
          pending.erase(pending.begin() + i);
        }
        const auto fr = std::count(owner.begin(), owner.end(), 0);
        const auto rf = std::count(owner.begin(), owner.end(), 2);
        REQUIRE(a.free_blocks() == static_cast<std::uint64_t>(fr));
        REQUIRE(a.referenced_blocks() == static_cast<std::uint64_t>(rf));
        REQUIRE(a.check().empty());
      }
    }
  }

  TEST_CASE("arrays roundtrip for random record sizes and block sizes") {
    std::mt19937_64 rng(5);
    for (int round = 0; round < 25; ++round) {
      const std::uint32_t bs = 512u << (rng() % 4);
      auto dev = std::make_shared<RamDevice>(bs, 1 << 14);
      Allocator alloc(1 << 14, 1 + rng() % 64);
      std::map<std::pair<std::string, std::uint64_t>, Entry> uniq;
      const auto n = 1 + rng() % 3000;
      for (std::uint64_t i = 0; i < n; ++i) {
        std::string k(1 + rng() % 24, '\0');
        for (auto& c : k) c = static_cast<char>('a' + rng() % 4);
        const auto v = rng() % 5;
        Entry e = rng() % 6 == 0 ? testing::tomb_entry(k, v, i + 1)
                                 : testing::value_entry(k, v, std::string(rng() % (rng() % 10 == 0 ? 3 * bs : 90), 'p'), i + 1);
        uniq[{k, v}] = e;
      }
      std::vector<Entry> es;
      for (auto& [_, e] : uniq) es.push_back(e);
      testing::sort_entries(es);
      auto arr = ArrayReader::write(dev, alloc, es, VersionSet{V(0), V(1), V(2), V(3), V(4)}, 1, round + 1, {});
      auto back = ArrayReader::open(dev, arr->descriptor());
      IoStream s;
      auto got = back->read_all(s, true);
      REQUIRE(got.size() == es.size());
      for (std::size_t i = 0; i < es.size(); ++i) {
        CHECK(got[i].key == es[i].key);
        CHECK(got[i].payload == es[i].payload);
      }
      // Every key is found by search with every version.
      const std::vector<VersionId> all{V(0), V(1), V(2), V(3), V(4)};
      for (int probe = 0; probe < 50; ++probe) {
        const auto& e = es[rng() % es.size()];
        auto hits = back->search(e.key, all);
        CHECK(std::any_of(hits.begin(), hits.end(), [&](const Entry& h) { return h.version == e.version; }));
        for (const auto& h : hits) CHECK(h.key == e.key);
      }
      // A cursor over a random interval yields exactly the records inside it.
      auto lo = es[rng() % es.size()].key, hi = es[rng() % es.size()].key;
      if (hi < lo) std::swap(lo, hi);
      ArrayCursor c(back, lo, hi);
      std::vector<Key> seen;
      for (c.load(); !c.exhausted(); c.advance(), c.load()) seen.push_back(c.current().key);
      std::vector<Key> want;
      for (const auto& e : es) {
        if (e.key >= lo && e.key <= hi) want.push_back(e.key);
      }
      CHECK(seen == want);
    }
  }

  TEST_CASE("store under random configurations: oracle equivalence, flush invariance, clean audits") {
    std::mt19937_64 rng(31);
    const Fraction deltas[] = {{1, 3}, {1, 4}, {1, 2}, {1, 5}};
    for (int round = 0; round < 8; ++round) {
      StoreConfig c;
      c.block_size = 1024u << (rng() % 3);
      c.chunk_bytes = c.block_size * (1 + rng() % 16);
      c.flush_entries = 4 + rng() % 60;
      c.delta_min = deltas[round % 4];
      c.device_blocks = 1 << 16;
      c.bloom_bits_per_key = 1 + rng() % 12;
      auto s = Store::create(StorageEnv::ram(c.block_size, c.device_blocks), c);
      s->set_audit_after_maintenance(true);
      s->create_root();
      Oracle o;
      o.create_root();
      for (int i = 0; i < 3000; ++i) {
        const auto op = rng() % 100;
        const auto key = "k" + std::to_string(rng() % 150);
        const auto leaves = o.tree().leaves();
        const auto live = o.tree().live_versions();
        if (op < 60) {
          const auto v = leaves[rng() % leaves.size()];
          s->put(key, std::to_string(i), v);
          o.put(key, std::to_string(i), v);
        } else if (op < 70) {
          const auto v = leaves[rng() % leaves.size()];
          s->delete_key(key, v);
          o.delete_key(key, v);
        } else if (op < 90) {
          const auto v = live[rng() % live.size()];
          REQUIRE(s->get(key, v) == o.get(key, v));
        } else if (op < 95) {
          const auto p = live[rng() % live.size()];
          s->clone(p);
          o.clone(p);
        } else if (op < 97) {
          const auto v = leaves[rng() % leaves.size()];
          if (v != kRootVersion) {
            s->delete_version(v);
            o.delete_version(v);
          }
        } else {
          // A forced flush must not change any answer.
          const auto v = live[rng() % live.size()];
          const auto before = s->range_query("", "\xff", v);
          s->flush();
          REQUIRE(s->range_query("", "\xff", v) == before);
          REQUIRE(before == o.range("", "\xff", v));
        }
      }
      for (auto v : o.tree().live_versions()) REQUIRE(s->range_query("", "\xff", v) == o.range("", "\xff", v));
      CHECK(s->audit().empty());
      CHECK(s->maintenance_violations().empty());
      // Arrays within a level carry disjoint tags.
      std::map<std::uint32_t, std::set<VersionId>> owner;
      for (const auto& a : s->arrays()) {
        for (auto v : a.tag) CHECK(owner[a.level].insert(v).second);
      }
    }
  }

  TEST_CASE("every crash point of a small workload recovers to the pre or post state") {
    CrashOptions o;
    o.workload.total_inserts = 800;
    o.workload.clone_interval = 150;
    o.workload.range_query_interval = 1000;
    o.workload.key_space = 300;
    o.workload.delete_key_prob = {1, 10};
    o.workload.delete_version_interval = 400;
    o.store.block_size = 1024;
    o.store.chunk_bytes = 8192;
    o.store.flush_entries = 32;
    o.store.device_blocks = 1 << 14;
    auto report = run_crash_sweep(o);
    CHECK(report.total_points > 50);
    CHECK(report.cases.size() == report.total_points);
    std::set<std::string> labels;
    for (const auto& c : report.cases) {
      labels.insert(c.label);
      if (!c.ok()) {
        std::string why;
        for (const auto& p : c.problems) why += p + "; ";
        FAIL_CHECK("kill point " << c.point << " (" << c.label << "): " << why);
      }
    }
    CHECK(report.failures() == 0);
    CHECK(labels.count("before array write") == 1);
    CHECK(labels.count("torn manifest write") == 1);
    CHECK(labels.count("after pointer switch") == 1);
  }
}
