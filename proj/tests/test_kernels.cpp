#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <unordered_map>

#include "pimsim/kernels/hash.hpp"
#include "pimsim/kernels/hash_table.hpp"
#include "pimsim/kernels/prefix_sum.hpp"
#include "pimsim/kernels/quicksort.hpp"

using namespace pimsim;
using namespace pimsim::kern;

namespace {

MachineConfig one_dpu_cfg() {
  MachineConfig cfg;
  cfg.dpu_count = 1;
  cfg.dpus_per_rank = 1;
  return cfg;
}

std::vector<KeyValue> make_records(std::span<const i64> keys) {
  std::vector<KeyValue> v(keys.size());
  for (std::size_t i = 0; i < keys.size(); ++i) v[i] = {keys[i], i};
  return v;
}

void write_records(DpuState& dpu, u64 off, std::span<const KeyValue> recs) {
  auto dst = dpu.mram_span<KeyValue>(off, recs.size());
  std::copy(recs.begin(), recs.end(), dst.begin());
}

std::vector<KeyValue> read_records(DpuState& dpu, u64 off, u64 n) {
  auto src = dpu.mram_span<KeyValue>(off, n);
  return {src.begin(), src.end()};
}

/// Checks output is sorted by key and is a value-preserving permutation of
/// the input (multiset of (key, value) pairs).
void check_sorted_permutation(std::span<const KeyValue> in, std::span<const KeyValue> out) {
  REQUIRE(in.size() == out.size());
  for (std::size_t i = 1; i < out.size(); ++i) REQUIRE(out[i - 1].key <= out[i].key);
  auto norm = [](std::span<const KeyValue> v) {
    std::vector<std::pair<i64, u64>> p;
    p.reserve(v.size());
    for (const auto& kv : v) p.emplace_back(kv.key, kv.value);
    std::sort(p.begin(), p.end());
    return p;
  };
  REQUIRE(norm(in) == norm(out));
}

}  // namespace

TEST_CASE("exclusive prefix sum") {
  SECTION("basic") {
    std::vector<u64> counts{2, 3, 1};
    auto r = exclusive_prefix_sum(counts);
    CHECK(r.offsets == std::vector<u64>{0, 2, 5});
    CHECK(r.total == 6);
  }
  SECTION("empty") {
    auto r = exclusive_prefix_sum({});
    CHECK(r.offsets.empty());
    CHECK(r.total == 0);
  }
  SECTION("random 1000 entries vs sequential fold") {
    Rng rng(99);
    std::vector<u64> counts(1000);
    for (auto& c : counts) c = rng.below(1000);
    auto r = exclusive_prefix_sum(counts);
    u64 run = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
      REQUIRE(r.offsets[i] == run);
      run += counts[i];
    }
    CHECK(r.total == run);
  }
}

TEST_CASE("hash32 properties") {
  SECTION("deterministic") {
    CHECK(hash32(1234567) == hash32(1234567));
    CHECK(hash32(-42) == hash32(-42));
  }
  SECTION("bucket balance over sequential keys") {
    const u32 buckets = 32;
    std::vector<u64> histo(buckets, 0);
    for (i64 k = 0; k < (1 << 16); ++k) ++histo[hash_bucket(k, buckets)];
    u64 maxb = *std::max_element(histo.begin(), histo.end());
    double mean = static_cast<double>(1 << 16) / buckets;
    CHECK(static_cast<double>(maxb) / mean <= 1.3);
  }
  SECTION("charge schedule: fixed op count, no multiplies") {
    MachineConfig cfg = one_dpu_cfg();
    DpuState dpu(0, cfg);
    dpu.wram_open(cfg, 1);
    KernelMetrics m = run_kernel(dpu, cfg, 1, [](TaskletCtx& ctx) -> TaskletProgram {
      Bill b;
      charge_hash(b, 1);
      co_await ctx.charge(b);
    });
    CHECK(m.class_count(InstrClass::kAdd32) == kHash32Ops);
    CHECK(m.class_count(InstrClass::kMul32) == 0);
    CHECK(m.class_count(InstrClass::kDiv32) == 0);
  }
}

TEST_CASE("scratchpad hash table") {
  MachineConfig cfg = one_dpu_cfg();
  DpuState dpu(0, cfg);
  dpu.wram_open(cfg, 1);
  const u32 cap = 64;
  u64 off = dpu.wram_alloc(SpmHashTable::bytes_for(cap, 1));
  SpmHashTable ht(dpu, off, cap, 1);
  Bill bill;
  ht.clear(bill);

  SECTION("insert lands at the home slot") {
    auto r = ht.upsert(7, bill);
    CHECK(r.outcome == SpmHashTable::Outcome::kInserted);
    CHECK(r.slot == (hash32(7) & (cap - 1)));
    CHECK(ht.key_at(r.slot) == 7);
  }
  SECTION("duplicate keys combine through the payload") {
    auto a = ht.upsert(7, bill);
    ht.payload(a.slot, 0) = 1;
    auto b = ht.upsert(7, bill);
    CHECK(b.outcome == SpmHashTable::Outcome::kFound);
    CHECK(b.slot == a.slot);
    ht.payload(b.slot, 0) += 2;
    CHECK(ht.payload(a.slot, 0) == 3);
    CHECK(ht.count() == 1);
  }
  SECTION("table-full after filling capacity") {
    for (u32 i = 0; i < cap; ++i) {
      auto r = ht.upsert(1000 + i, bill);
      REQUIRE(r.outcome == SpmHashTable::Outcome::kInserted);
    }
    auto r = ht.upsert(99999, bill);
    CHECK(r.outcome == SpmHashTable::Outcome::kFull);
  }
  SECTION("probe hit and miss") {
    auto a = ht.upsert(42, bill);
    ht.payload(a.slot, 0) = 777;
    auto hit = ht.find(42, bill);
    REQUIRE(hit.has_value());
    CHECK(ht.payload(*hit, 0) == 777);
    CHECK_FALSE(ht.find(43, bill).has_value());
  }
  SECTION("random inserts and probes match a host map") {
    DpuState big(1, cfg);
    big.wram_open(cfg, 1);
    const u32 c2 = 2048;
    u64 o2 = big.wram_alloc(SpmHashTable::bytes_for(c2, 1));
    SpmHashTable t2(big, o2, c2, 1);
    Bill b2;
    t2.clear(b2);
    std::unordered_map<i64, u64> oracle;
    Rng rng(7);
    for (int i = 0; i < 10000; ++i) {
      i64 key = static_cast<i64>(rng.below(1500));
      u64 add = rng.below(100);
      auto r = t2.upsert(key, b2);
      REQUIRE(r.outcome != SpmHashTable::Outcome::kFull);
      if (r.outcome == SpmHashTable::Outcome::kInserted) t2.payload(r.slot, 0) = 0;
      t2.payload(r.slot, 0) += add;
      oracle[key] += add;
    }
    for (const auto& [k, v] : oracle) {
      auto slot = t2.find(k, b2);
      REQUIRE(slot.has_value());
      CHECK(t2.payload(*slot, 0) == v);
    }
    REQUIRE_FALSE(t2.find(-5, b2).has_value());
    CHECK(t2.count() == oracle.size());
  }
}

TEST_CASE("quicksort_mram basics") {
  MachineConfig cfg = one_dpu_cfg();
  KernelConfig kcfg;

  SECTION("three records") {
    DpuState dpu(0, cfg);
    auto recs = make_records(std::vector<i64>{3, 1, 2});
    write_records(dpu, 0, recs);
    kcfg.tasklets = 1;
    quicksort_mram(dpu, cfg, 0, recs.size(), kcfg);
    auto out = read_records(dpu, 0, recs.size());
    CHECK(out[0].key == 1);
    CHECK(out[1].key == 2);
    CHECK(out[2].key == 3);
  }
  SECTION("already sorted input unchanged") {
    DpuState dpu(0, cfg);
    std::vector<i64> keys(4096);
    for (std::size_t i = 0; i < keys.size(); ++i) keys[i] = static_cast<i64>(i * 3);
    auto recs = make_records(keys);
    write_records(dpu, 0, recs);
    kcfg.tasklets = 8;
    quicksort_mram(dpu, cfg, 0, recs.size(), kcfg);
    auto out = read_records(dpu, 0, recs.size());
    for (std::size_t i = 0; i < keys.size(); ++i) REQUIRE(out[i].key == keys[i]);
  }
}

TEST_CASE("quicksort_mram adversarial shapes") {
  MachineConfig cfg = one_dpu_cfg();
  KernelConfig kcfg;
  kcfg.tasklets = 4;
  auto run_on = [&](std::vector<i64> keys) {
    DpuState dpu(0, cfg);
    auto recs = make_records(keys);
    write_records(dpu, 0, recs);
    quicksort_mram(dpu, cfg, 0, recs.size(), kcfg);
    auto out = read_records(dpu, 0, recs.size());
    check_sorted_permutation(recs, out);
  };

  SECTION("all keys equal") {
    run_on(std::vector<i64>(3000, 42));
  }
  SECTION("reverse sorted") {
    std::vector<i64> keys(2500);
    for (std::size_t i = 0; i < keys.size(); ++i) keys[i] = static_cast<i64>(keys.size() - i);
    run_on(keys);
  }
  SECTION("two distinct values") {
    Rng rng(5);
    std::vector<i64> keys(2000);
    for (auto& k : keys) k = rng.below(2) ? 7 : -7;
    run_on(keys);
  }
  SECTION("organ pipe") {
    std::vector<i64> keys;
    for (i64 i = 0; i < 1000; ++i) keys.push_back(i);
    for (i64 i = 1000; i-- > 0;) keys.push_back(i);
    run_on(keys);
  }
  SECTION("empty and single") {
    run_on({});
    run_on({5});
  }
}

TEST_CASE("quicksort_mram randomized vs host sort oracle") {
  MachineConfig cfg = one_dpu_cfg();
  Rng rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    // Log-uniform sizes spanning 10..65536.
    double t = static_cast<double>(rng.below(1'000'000)) / 1'000'000.0;
    u64 n = static_cast<u64>(10.0 * std::pow(65536.0 / 10.0, t));
    KernelConfig kcfg;
    kcfg.tasklets = static_cast<u32>(rng.range(1, 24));
    kcfg.buffer_elems = static_cast<u32>(rng.range(8, 256));
    i64 key_span = 1 + static_cast<i64>(rng.below(3 * n + 1));
    std::vector<i64> keys(n);
    for (auto& k : keys) k = rng.irange(-key_span, key_span);

    DpuState dpu(0, cfg);
    auto recs = make_records(keys);
    write_records(dpu, 0, recs);
    INFO("trial=" << trial << " n=" << n << " tasklets=" << kcfg.tasklets
                  << " buffer=" << kcfg.buffer_elems);
    KernelMetrics m = quicksort_mram(dpu, cfg, 0, n, kcfg);
    auto out = read_records(dpu, 0, n);
    check_sorted_permutation(recs, out);
    if (n >= 2) CHECK(m.instructions > 0);
    CHECK(m.ipc() <= std::min(1.0, static_cast<double>(kcfg.tasklets) / cfg.dispatch_gap) + 1e-12);
  }
}

TEST_CASE("quicksort budget holds for all tasklet counts") {
  MachineConfig cfg = one_dpu_cfg();
  Rng rng(3);
  std::vector<i64> keys(1500);
  for (auto& k : keys) k = rng.irange(-1000, 1000);
  for (u32 t = 1; t <= 24; ++t) {
    DpuState dpu(0, cfg);
    auto recs = make_records(keys);
    write_records(dpu, 0, recs);
    KernelConfig kcfg;
    kcfg.tasklets = t;
    REQUIRE_NOTHROW(quicksort_mram(dpu, cfg, 0, keys.size(), kcfg));
    auto out = read_records(dpu, 0, keys.size());
    check_sorted_permutation(recs, out);
  }
}

#include "pimsim/kernels/merge.hpp"
#include "pimsim/kernels/partition.hpp"

TEST_CASE("partition_parallel") {
  MachineConfig cfg = one_dpu_cfg();
  KernelConfig kcfg;

  SECTION("single pivot example") {
    DpuState dpu(0, cfg);
    auto recs = make_records(std::vector<i64>{9, 1, 7, 2});
    write_records(dpu, 0, recs);
    kcfg.tasklets = 2;
    u64 out = 4096;
    auto r = partition_parallel(dpu, cfg, 0, recs.size(), {5}, out, kcfg);
    REQUIRE(r.bucket_offsets == std::vector<u64>{0, 2, 4});
    auto got = read_records(dpu, out, recs.size());
    std::vector<i64> lows{got[0].key, got[1].key}, highs{got[2].key, got[3].key};
    std::sort(lows.begin(), lows.end());
    std::sort(highs.begin(), highs.end());
    CHECK(lows == std::vector<i64>{1, 2});
    CHECK(highs == std::vector<i64>{7, 9});
  }
  SECTION("all keys equal goes right of the pivot") {
    DpuState dpu(0, cfg);
    auto recs = make_records(std::vector<i64>(100, 5));
    write_records(dpu, 0, recs);
    kcfg.tasklets = 4;
    u64 out = 1 << 16;
    auto r = partition_parallel(dpu, cfg, 0, recs.size(), {5}, out, kcfg);
    CHECK(r.bucket_offsets == std::vector<u64>{0, 0, 100});
    auto got = read_records(dpu, out, recs.size());
    for (const auto& kv : got) REQUIRE(kv.key == 5);
  }
  SECTION("random multiway: permutation and bucket predicate") {
    Rng rng(11);
    const u64 n = 65536;
    std::vector<i64> keys(n);
    for (auto& k : keys) k = rng.irange(-100000, 100000);
    DpuState dpu(0, cfg);
    auto recs = make_records(keys);
    write_records(dpu, 0, recs);
    std::vector<i64> splitters{-50000, -1000, 17, 42000};
    kcfg.tasklets = 16;
    u64 out = 4 * kMiB;
    auto r = partition_parallel(dpu, cfg, 0, n, splitters, out, kcfg);
    auto got = read_records(dpu, out, n);
    REQUIRE(r.bucket_offsets.size() == 6);
    REQUIRE(r.bucket_offsets.back() == n);
    // Bucket predicate at every index.
    for (u32 b = 0; b + 1 < r.bucket_offsets.size(); ++b) {
      for (u64 i = r.bucket_offsets[b]; i < r.bucket_offsets[b + 1]; ++i) {
        if (b > 0) REQUIRE(got[i].key >= splitters[b - 1]);
        if (b < splitters.size()) REQUIRE(got[i].key < splitters[b]);
      }
    }
    // Multiset preservation.
    auto norm = [](std::vector<KeyValue> v) {
      std::vector<std::pair<i64, u64>> p;
      for (auto& kv : v) p.emplace_back(kv.key, kv.value);
      std::sort(p.begin(), p.end());
      return p;
    };
    REQUIRE(norm(recs) == norm(got));
  }
}

TEST_CASE("hash partitioning") {
  MachineConfig cfg = one_dpu_cfg();
  KernelConfig kcfg;
  kcfg.tasklets = 8;

  SECTION("counts match host hash histogram") {
    Rng rng(21);
    const u64 n = 4096;
    std::vector<i64> keys(n);
    for (auto& k : keys) k = rng.irange(0, 1 << 20);
    DpuState dpu(0, cfg);
    write_records(dpu, 0, make_records(keys));
    auto r = hash_partition_count(dpu, cfg, 0, n, 16, kcfg);
    std::vector<u64> histo(16, 0);
    for (i64 k : keys) ++histo[hash_bucket(k, 16)];
    CHECK(r.sizes == histo);
    CHECK(r.offsets == exclusive_prefix_sum(histo).offsets);
  }
  SECTION("empty region yields zeros") {
    DpuState dpu(0, cfg);
    auto r = hash_partition_count(dpu, cfg, 0, 0, 8, kcfg);
    CHECK(r.sizes == std::vector<u64>(8, 0));
  }
  SECTION("scatter: every record exactly once, buckets contiguous") {
    Rng rng(22);
    const u64 n = 30000;
    std::vector<i64> keys(n);
    for (auto& k : keys) k = rng.irange(-5000, 5000);
    DpuState dpu(0, cfg);
    auto recs = make_records(keys);
    write_records(dpu, 0, recs);
    const u32 B = 8;
    auto c = hash_partition_count(dpu, cfg, 0, n, B, kcfg);
    u64 out = 2 * kMiB;
    hash_partition_scatter(dpu, cfg, 0, n, c.offsets, B, out, kcfg);
    auto got = read_records(dpu, out, n);
    for (u32 b = 0; b < B; ++b)
      for (u64 i = c.offsets[b]; i < c.offsets[b] + c.sizes[b]; ++i)
        REQUIRE(hash_bucket(got[i].key, B) == b);
    auto norm = [](std::vector<KeyValue> v) {
      std::vector<std::pair<i64, u64>> p;
      for (auto& kv : v) p.emplace_back(kv.key, kv.value);
      std::sort(p.begin(), p.end());
      return p;
    };
    REQUIRE(norm(recs) == norm(got));
  }
  SECTION("single bucket is a permutation") {
    Rng rng(23);
    const u64 n = 500;
    std::vector<i64> keys(n);
    for (auto& k : keys) k = rng.irange(0, 100);
    DpuState dpu(0, cfg);
    auto recs = make_records(keys);
    write_records(dpu, 0, recs);
    std::vector<u64> offsets{0};
    hash_partition_scatter(dpu, cfg, 0, n, offsets, 1, 1 << 20, kcfg);
    auto got = read_records(dpu, 1 << 20, n);
    auto norm = [](std::vector<KeyValue> v) {
      std::vector<std::pair<i64, u64>> p;
      for (auto& kv : v) p.emplace_back(kv.key, kv.value);
      std::sort(p.begin(), p.end());
      return p;
    };
    REQUIRE(norm(recs) == norm(got));
  }
}

TEST_CASE("multipass radix partition") {
  MachineConfig cfg = one_dpu_cfg();
  KernelConfig kcfg;
  kcfg.tasklets = 8;

  SECTION("pass and group arithmetic") {
    Rng rng(31);
    const u64 n = 2000;
    std::vector<i64> keys(n);
    for (auto& k : keys) k = rng.irange(0, 1 << 30);
    DpuState dpu(0, cfg);
    write_records(dpu, 0, make_records(keys));
    u64 region_b = 8 * kMiB;
    auto r = multipass_radix_partition(dpu, cfg, 0, region_b, n, 10, 5, kcfg);
    CHECK(r.passes == 2);
    CHECK(r.group_offsets.size() == 1024 + 1);
  }
  SECTION("grouping equals single-pass oracle") {
    Rng rng(32);
    const u64 n = 20000;
    std::vector<i64> keys(n);
    for (auto& k : keys) k = rng.irange(-100000, 100000);
    DpuState dpu(0, cfg);
    auto recs = make_records(keys);
    write_records(dpu, 0, recs);
    const u32 total_bits = 6;
    auto r = multipass_radix_partition(dpu, cfg, 0, 8 * kMiB, n, total_bits, 2, kcfg);
    CHECK(r.passes == 3);
    auto got = read_records(dpu, r.result_off, n);
    // Each final group holds exactly the records whose hash field matches.
    REQUIRE(r.group_offsets.size() == (1u << total_bits) + 1);
    std::map<u32, std::vector<std::pair<i64, u64>>> oracle, mine;
    for (const auto& kv : recs) oracle[hash_field(kv.key, 0, total_bits)].emplace_back(kv.key, kv.value);
    for (u32 g = 0; g < (1u << total_bits); ++g)
      for (u64 i = r.group_offsets[g]; i < r.group_offsets[g + 1]; ++i)
        mine[g].emplace_back(got[i].key, got[i].value);
    for (auto& [g, v] : oracle) std::sort(v.begin(), v.end());
    for (auto& [g, v] : mine) std::sort(v.begin(), v.end());
    for (u32 g = 0; g < (1u << total_bits); ++g) {
      INFO("group " << g);
      REQUIRE(mine[g] == oracle[g]);
    }
  }
}

TEST_CASE("merge kernels") {
  MachineConfig cfg = one_dpu_cfg();
  KernelConfig kcfg;

  SECTION("basic merges") {
    DpuState dpu(0, cfg);
    auto a = make_records(std::vector<i64>{1, 3});
    auto b = make_records(std::vector<i64>{2, 4});
    write_records(dpu, 0, a);
    write_records(dpu, 4096, b);
    merge_pass(dpu, cfg, 0, 2, 4096, 2, 8192, kcfg);
    auto out = read_records(dpu, 8192, 4);
    CHECK(out[0].key == 1);
    CHECK(out[1].key == 2);
    CHECK(out[2].key == 3);
    CHECK(out[3].key == 4);
  }
  SECTION("empty left run") {
    DpuState dpu(0, cfg);
    auto b = make_records(std::vector<i64>{5});
    write_records(dpu, 4096, b);
    merge_pass(dpu, cfg, 0, 0, 4096, 1, 8192, kcfg);
    auto out = read_records(dpu, 8192, 1);
    CHECK(out[0].key == 5);
  }
  SECTION("two random sorted runs match host merge") {
    Rng rng(41);
    std::vector<i64> ka(10000), kb(10000);
    for (auto& k : ka) k = rng.irange(-50000, 50000);
    for (auto& k : kb) k = rng.irange(-50000, 50000);
    std::sort(ka.begin(), ka.end());
    std::sort(kb.begin(), kb.end());
    DpuState dpu(0, cfg);
    write_records(dpu, 0, make_records(ka));
    write_records(dpu, 1 * kMiB, make_records(kb));
    merge_pass(dpu, cfg, 0, ka.size(), 1 * kMiB, kb.size(), 2 * kMiB, kcfg);
    auto out = read_records(dpu, 2 * kMiB, ka.size() + kb.size());
    std::vector<i64> expect;
    std::merge(ka.begin(), ka.end(), kb.begin(), kb.end(), std::back_inserter(expect));
    for (std::size_t i = 0; i < expect.size(); ++i) REQUIRE(out[i].key == expect[i]);
  }
  SECTION("mergesort sorts") {
    Rng rng(42);
    const u64 n = 20000;
    std::vector<i64> keys(n);
    for (auto& k : keys) k = rng.irange(-100000, 100000);
    DpuState dpu(0, cfg);
    auto recs = make_records(keys);
    write_records(dpu, 0, recs);
    kcfg.tasklets = 12;
    auto r = mergesort_mram(dpu, cfg, 0, 4 * kMiB, n, kcfg);
    auto out = read_records(dpu, r.result_off, n);
    check_sorted_permutation(recs, out);
  }
}

TEST_CASE("sample_keys returns sorted candidates") {
  MachineConfig cfg = one_dpu_cfg();
  Rng rng(51);
  std::vector<i64> keys(5000);
  for (auto& k : keys) k = rng.irange(-1000, 1000);
  DpuState dpu(0, cfg);
  write_records(dpu, 0, make_records(keys));
  auto [samples, m] = sample_keys(dpu, cfg, 0, keys.size(), 32, KernelConfig{});
  REQUIRE(samples.size() == 32);
  CHECK(std::is_sorted(samples.begin(), samples.end()));
}
