#include "helpers.hpp"
#include "sda/oracle.hpp"
#include "sda/store.hpp"

#include <doctest.h>

#include <random>

using namespace sda;
using testing::V;

namespace {

StoreConfig small_config(std::uint64_t flush_entries = 64, bool auto_maintain = true) {
  StoreConfig c;
  c.block_size = 4096;
  c.chunk_bytes = 64 * 1024;
  c.flush_entries = flush_entries;
  c.device_blocks = 1 << 15;
  c.auto_maintain = auto_maintain;
  return c;
}

std::unique_ptr<Store> make_store(StoreConfig c = small_config()) {
  auto s = Store::create(StorageEnv::ram(c.block_size, c.device_blocks), c);
  s->create_root();
  return s;
}

std::size_t count_at_level(const Store& s, std::uint32_t level) {
  std::size_t n = 0;
  for (const auto& a : s.arrays()) n += a.level == level;
  return n;
}

using Rows = std::vector<std::pair<Key, std::string>>;

}  // namespace

TEST_SUITE("sda_store") {
  TEST_CASE("put and get; last write wins; deleted versions reject writes") {
    auto s = make_store();
    s->put("k", "x", V(0));
    CHECK(s->get("k", V(0)) == "x");
    s->put("k", "y", V(0));
    CHECK(s->get("k", V(0)) == "y");
    s->flush();
    CHECK(s->get("k", V(0)) == "y");
    auto v1 = s->clone(V(0));
    s->delete_version(v1);
    try {
      s->put("k", "z", v1);
      FAIL("expected deleted_version");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::deleted_version);
    }
    CHECK_THROWS_AS(s->get("k", V(7)), Error);
    CHECK_THROWS_AS(s->put("", "x", V(0)), Error);
  }

  TEST_CASE("delete_key shadows only the subtree") {
    auto s = make_store();
    s->put("k", "x", V(0));
    auto v1 = s->clone(V(0));
    s->delete_key("k", v1);
    CHECK_FALSE(s->get("k", v1).has_value());
    CHECK(s->get("k", V(0)) == "x");
    s->delete_key("never", V(0));
    CHECK_FALSE(s->get("never", V(0)).has_value());
    s->put("never", "now", V(0));
    CHECK(s->get("never", V(0)) == "now");
    s->flush();
    CHECK_FALSE(s->get("k", v1).has_value());
    CHECK(s->get("k", V(0)) == "x");
  }

  TEST_CASE("get falls back to the closest ancestor; siblings are isolated") {
    auto s = make_store();
    auto v1 = s->clone(V(0));
    auto v2 = s->clone(v1);
    s->put("k", "a", V(0));
    s->put("k", "b", v1);
    CHECK(s->get("k", v2) == "b");
    auto v3 = s->clone(V(0));
    auto v4 = s->clone(V(0));
    s->put("j", "a", v3);
    CHECK_FALSE(s->get("j", v4).has_value());
    s->flush();
    CHECK(s->get("k", v2) == "b");
    CHECK_FALSE(s->get("j", v4).has_value());
  }

  TEST_CASE("range merges ancestor and child writes") {
    auto s = make_store();
    for (auto k : {"a", "b", "c", "d", "e"}) s->put(k, std::string("0") + k, V(0));
    auto v1 = s->clone(V(0));
    s->put("c", "1c", v1);
    const Rows want{{"a", "0a"}, {"b", "0b"}, {"c", "1c"}, {"d", "0d"}, {"e", "0e"}};
    CHECK(s->range_query("a", "e", v1) == want);
    s->flush();
    CHECK(s->range_query("a", "e", v1) == want);
    CHECK(s->range_query("a", "e", v1, 2) == Rows(want.begin(), want.begin() + 2));
    CHECK(s->range_query("f", "z", v1).empty());
    CHECK_THROWS_AS(s->range_query("z", "a", v1), Error);
  }

  TEST_CASE("flush writes one level-0 array tagged with the buffered versions") {
    auto s = make_store(small_config(64, false));
    s->put("k", "x", V(0));
    s->flush();
    auto arrays = s->arrays();
    REQUIRE(arrays.size() == 1);
    CHECK(arrays[0].level == 0);
    CHECK(arrays[0].entry_count == 1);
    CHECK(arrays[0].tag == VersionSet{V(0)});

    auto t = make_store(small_config(64, false));
    auto v1 = t->clone(V(0));
    t->put("a", "x", V(0));
    t->put("b", "y", v1);
    t->flush();
    arrays = t->arrays();
    REQUIRE(arrays.size() == 1);
    CHECK(arrays[0].tag == VersionSet{V(0), V(1)});
    CHECK(t->stats().buffered == 0);
  }

  TEST_CASE("maintain_level merges intersecting tags and leaves disjoint ones") {
    auto s = make_store(small_config(64, false));
    s->put("a", "x", V(0));
    s->flush();
    auto v1 = s->clone(V(0));
    s->put("b", "y", V(0));
    s->put("c", "z", v1);
    s->flush();
    REQUIRE(count_at_level(*s, 0) == 2);
    s->maintain_level(0);
    const auto arrays = s->arrays();
    REQUIRE(arrays.size() == 1);
    CHECK(arrays[0].entry_count == 3);
    CHECK(arrays[0].tag == VersionSet{V(0), V(1)});
    CHECK(s->get("c", v1) == "z");
    CHECK(s->get("a", v1) == "x");
    CHECK(s->audit().empty());

    auto t = make_store(small_config(64, false));
    auto w1 = t->clone(V(0));
    auto w2 = t->clone(V(0));
    t->put("a", "x", w1);
    t->flush();
    t->put("a", "y", w2);
    t->flush();
    const auto before = t->arrays();
    t->maintain_level(0);
    CHECK(t->arrays() == before);
  }

  TEST_CASE("duplicate (key, version) across inputs keeps the newer write") {
    auto s = make_store(small_config(64, false));
    s->put("k", "old", V(0));
    s->flush();
    s->put("k", "new", V(0));
    s->flush();
    s->maintain_level(0);
    const auto arrays = s->arrays();
    REQUIRE(arrays.size() == 1);
    CHECK(arrays[0].entry_count == 1);
    CHECK(s->get("k", V(0)) == "new");
  }

  TEST_CASE("merge drops entries of deleted versions") {
    auto s = make_store(small_config(64, false));
    auto v1 = s->clone(V(0));
    auto v2 = s->clone(v1);
    auto v3 = s->clone(v1);
    s->put("k", "x", v3);
    s->put("j", "y", v1);
    s->flush();
    s->put("m", "z", v1);
    s->flush();
    s->delete_version(v3);
    s->maintain_level(0);
    for (const auto& a : s->arrays()) CHECK_FALSE(a.tag.contains(v3));
    std::uint64_t entries = 0;
    for (const auto& a : s->arrays()) entries += a.entry_count;
    CHECK(entries == 2);
    CHECK(s->get("j", v2) == "y");
    CHECK_THROWS_AS(s->get("k", v3), Error);
  }

  TEST_CASE("audit flags an injected sparse array exactly once") {
    auto s = make_store(small_config(64, false));
    CHECK(s->audit().empty());
    s->clone(V(0));
    s->clone(V(0));
    std::vector<Entry> a;
    for (int i = 0; i < 6; ++i) a.push_back(testing::value_entry("k1_" + std::to_string(i), 1, "x", 1 + i));
    a.push_back(testing::value_entry("k2", 2, "y", 7));
    a.push_back(testing::value_entry("k0", 0, "z", 8));
    s->install_raw_array(a, VersionSet{V(1), V(2)}, 0);
    auto violations = s->audit();
    REQUIRE(violations.size() == 1);
    CHECK(violations[0].kind == "density");
  }

  TEST_CASE("audit flags unsorted and oversized arrays") {
    auto s = make_store(small_config(4, false));
    std::vector<Entry> a;
    for (int i = 0; i < 20; ++i) a.push_back(testing::value_entry("k" + std::to_string(100 + i), 0, "x", 1 + i));
    s->install_raw_array(a, VersionSet{V(0)}, 0);  // 20 >= 4 * 2
    auto violations = s->audit();
    REQUIRE(violations.size() == 1);
    CHECK(violations[0].kind == "size");
  }

  TEST_CASE("randomized workload agrees with the oracle; audit stays clean") {
    for (std::uint64_t seed : {1, 2, 3}) {
      auto s = make_store(small_config(32));
      s->set_audit_after_maintenance(true);
      Oracle o;
      o.create_root();
      std::mt19937_64 rng(seed);
      std::vector<VersionId> leaves{V(0)};
      for (int i = 0; i < 10000; ++i) {
        const auto op = rng() % 100;
        auto key = "k" + std::to_string(rng() % 300);
        if (op < 55) {
          const auto v = leaves[rng() % leaves.size()];
          auto val = "v" + std::to_string(i);
          s->put(key, val, v);
          o.put(key, val, v);
        } else if (op < 63) {
          const auto v = leaves[rng() % leaves.size()];
          s->delete_key(key, v);
          o.delete_key(key, v);
        } else if (op < 88) {
          const auto live = o.tree().live_versions();
          const auto v = live[rng() % live.size()];
          REQUIRE(s->get(key, v) == o.get(key, v));
        } else if (op < 93) {
          const auto live = o.tree().live_versions();
          const auto v = live[rng() % live.size()];
          auto end = "k" + std::to_string(rng() % 300);
          if (end < key) std::swap(key, end);
          const auto limit = rng() % 3 == 0 ? rng() % 20 : 0;
          REQUIRE(s->range_query(key, end, v, limit) == o.range(key, end, v, limit));
        } else if (op < 98) {
          const auto live = o.tree().live_versions();
          const auto p = live[rng() % live.size()];
          CHECK(s->clone(p) == o.clone(p));
          leaves = o.tree().leaves();
        } else {
          const auto v = leaves[rng() % leaves.size()];
          if (v != kRootVersion) {
            s->delete_version(v);
            o.delete_version(v);
            leaves = o.tree().leaves();
          }
        }
      }
      CHECK(s->audit().empty());
      CHECK(s->maintenance_violations().empty());
      CHECK(s->audited_maintenance_runs() > 0);
      CHECK(s->check_space().empty());
      const auto st = s->stats();
      CHECK(st.dup_factor <= 4.0);

      // Clean shutdown and reopen.
      auto env = s->env();
      s->close();
      s.reset();
      auto r = Store::open(env);
      CHECK(r->tree() == o.tree());
      for (auto v : o.tree().live_versions()) CHECK(r->range_query("", "\xff", v) == o.range("", "\xff", v));
      CHECK(r->recovery().orphan_blocks == 0);
      CHECK(r->audit().empty());
    }
  }

  TEST_CASE("maintenance output respects per-level size bounds") {
    auto s = make_store(small_config(16));
    std::mt19937_64 rng(9);
    for (int i = 0; i < 3000; ++i) s->put("k" + std::to_string(rng() % 100000), "v", V(0));
    for (const auto& a : s->arrays()) CHECK(a.entry_count < 16ull << (a.level + 1));
    CHECK(s->stats().level_arrays.size() >= 3);
  }

  TEST_CASE("reads record the array set they ran against") {
    auto s = make_store(small_config(8));
    for (int i = 0; i < 40; ++i) s->put("k" + std::to_string(i), "v", V(0));
    ReadTrace t;
    CHECK(s->get("k3", V(0), &t) == "v");
    CHECK(t.epoch == s->epoch());
    CHECK(t.seqs.size() == s->arrays().size());
    CHECK(t.candidates >= 1);
  }

  TEST_CASE("file-backed store survives reopen") {
    const auto dir = std::filesystem::temp_directory_path() / "sda_store_unit";
    std::filesystem::remove_all(dir);
    auto c = small_config(32);
    {
      auto s = Store::create(StorageEnv::create_dir(dir, c.block_size, c.device_blocks), c);
      s->create_root();
      auto v1 = s->clone(V(0));
      for (int i = 0; i < 500; ++i) s->put("k" + std::to_string(i), "v" + std::to_string(i), i % 2 ? v1 : V(0));
      s->close();
    }
    auto s = Store::open(StorageEnv::open_dir(dir));
    CHECK(s->config().block_size == 4096);
    CHECK(s->get("k7", V(1)) == "v7");
    CHECK_FALSE(s->get("k7", V(0)).has_value());
    CHECK(s->get("k8", V(1)) == "v8");
    CHECK(s->audit().empty());
    std::filesystem::remove_all(dir);
  }
}
