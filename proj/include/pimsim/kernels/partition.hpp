#pragma once

#include "pimsim/kernels/hash.hpp"
#include "pimsim/kernels/prefix_sum.hpp"
#include "pimsim/kernels/quicksort.hpp"

namespace pimsim::kern {

namespace detail_part {

/// Bucket of a key under range partitioning: number of splitters <= key,
/// i.e. keys below splitters[0] land in bucket 0, keys >= splitters[i-1]
/// land in bucket i. Charged as a binary search over the splitter array.
inline u32 range_bucket(std::span<const i64> splitters, i64 key) {
  return static_cast<u32>(std::upper_bound(splitters.begin(), splitters.end(), key) -
                          splitters.begin());
}

inline void charge_bsearch(Bill& b, u64 elems, u32 buckets) {
  u64 steps = buckets > 1 ? std::bit_width(static_cast<u32>(buckets - 1)) : 1;
  b.add(InstrClass::kWramLoad8, steps * elems)
      .add(InstrClass::kCmp, 2 * steps * elems)
      .add(InstrClass::kBranch, steps * elems)
      .add(InstrClass::kAdd32, 2 * elems);
}

inline void charge_count_incr(Bill& b, u64 elems) {
  b.add(InstrClass::kWramLoad8, elems).add(InstrClass::kAdd32, 2 * elems).add(
      InstrClass::kWramStore8, elems);
}

inline void charge_stage_append(Bill& b, u64 elems) {
  b.add(InstrClass::kWramLoad8, 2 * elems)
      .add(InstrClass::kWramStore8, 2 * elems)
      .add(InstrClass::kAdd32, 2 * elems);
}

inline void charge_tile_loop(Bill& b, u64 elems) {
  b.add(InstrClass::kAdd32, elems).add(InstrClass::kCmp, elems).add(InstrClass::kBranch, elems);
}

}  // namespace detail_part

struct PartitionResult {
  std::vector<u64> bucket_offsets;  // B + 1 entries into the output region
  KernelMetrics metrics;
};

/// Cooperative sort partitioning (quicksort parallelization): each tasklet
/// counts its slice per range bucket, one tasklet turns the count matrix
/// into write offsets by prefix sum, then each tasklet scatters its slice
/// into the disjoint output region through private per-bucket staging
/// buffers. A single splitter is the plain pivot case.
inline PartitionResult partition_parallel(DpuState& dpu, const MachineConfig& cfg, u64 in_off,
                                          u64 n, std::vector<i64> splitters, u64 out_off,
                                          const KernelConfig& kcfg) {
  kcfg.validate();
  if (splitters.empty()) throw ConfigError("partition_parallel needs at least one splitter");
  if (!std::is_sorted(splitters.begin(), splitters.end()))
    throw ConfigError("splitters must be sorted");
  const u32 T = kcfg.tasklets;
  const u32 B = static_cast<u32>(splitters.size()) + 1;

  dpu.wram_open(cfg, T);
  u64 splitter_off = dpu.wram_alloc(splitters.size() * 8);
  u64 counts_off = dpu.wram_alloc(static_cast<u64>(T) * B * 8);  // becomes offsets in place
  u64 bucket_off = dpu.wram_alloc((B + 1) * 8);
  // Split the remaining budget between the input tile and the staging rows.
  u64 fixed = dpu.wram_used();
  u64 budget = dpu.wram_budget(cfg, T);
  u64 stage_budget = std::min((budget - fixed) / 2, static_cast<u64>(T) * B * 16 * kKvBytes);
  u32 stage_elems =
      std::max<u64>(1, stage_budget / (static_cast<u64>(T) * B * kKvBytes));
  std::vector<u64> stage_offs(T);
  for (u32 t = 0; t < T; ++t)
    stage_offs[t] = dpu.wram_alloc(static_cast<u64>(B) * stage_elems * kKvBytes);
  u32 tile = fit_tile_elems(dpu, cfg, T, dpu.wram_used(), 1, kcfg.buffer_elems);
  std::vector<u64> tile_offs(T);
  for (u32 t = 0; t < T; ++t) tile_offs[t] = dpu.wram_alloc(static_cast<u64>(tile) * kKvBytes);

  {
    auto sp = dpu.wram_span<i64>(splitter_off, splitters.size());
    std::copy(splitters.begin(), splitters.end(), sp.begin());
    auto cn = dpu.wram_span<u64>(counts_off, static_cast<u64>(T) * B);
    std::fill(cn.begin(), cn.end(), 0);
  }

  auto splitter_vals = std::make_shared<std::vector<i64>>(std::move(splitters));
  auto fn = [=, &dpu](TaskletCtx& ctx) -> TaskletProgram {
    const u32 t = ctx.id();
    auto [slo, shi] = slice_of(n, T, t);
    auto counts = dpu.wram_span<u64>(counts_off, static_cast<u64>(T) * B);
    std::span<const i64> sp(*splitter_vals);

    // Pass 1: bucket sizes.
    for (u64 pos = slo; pos < shi; pos += tile) {
      u64 m = std::min<u64>(tile, shi - pos);
      co_await ctx.dma_read(in_off + pos * kKvBytes, tile_offs[t], m * kKvBytes);
      auto tl = wram_kv(dpu, tile_offs[t], m);
      for (u64 k = 0; k < m; ++k) ++counts[static_cast<u64>(t) * B +
                                            detail_part::range_bucket(sp, tl[k].key)];
      Bill bill;
      detail_part::charge_bsearch(bill, m, B);
      detail_part::charge_count_incr(bill, m);
      detail_part::charge_tile_loop(bill, m);
      co_await ctx.charge(bill);
    }
    co_await barrier(ctx);

    // One tasklet computes write offsets: bucket-major exclusive prefix.
    if (t == 0) {
      auto buckets = dpu.wram_span<u64>(bucket_off, B + 1);
      u64 run = 0;
      for (u32 b = 0; b < B; ++b) {
        buckets[b] = run;
        for (u32 tt = 0; tt < T; ++tt) {
          u64 c = counts[static_cast<u64>(tt) * B + b];
          counts[static_cast<u64>(tt) * B + b] = run;
          run += c;
        }
      }
      buckets[B] = run;
      Bill bill;
      bill.add(InstrClass::kWramLoad8, static_cast<u64>(T) * B)
          .add(InstrClass::kWramStore8, static_cast<u64>(T) * B + B + 1)
          .add(InstrClass::kAdd32, 2ull * T * B)
          .add(InstrClass::kBranch, static_cast<u64>(T) * B);
      co_await ctx.charge(bill);
    }
    co_await barrier(ctx);

    // Pass 2: scatter through private staging rows.
    std::vector<u64> cursor(B), fill(B);
    for (u32 b = 0; b < B; ++b) cursor[b] = counts[static_cast<u64>(t) * B + b];
    co_await ctx.charge(Bill{}.add(InstrClass::kWramLoad8, B).add(InstrClass::kAdd32, B));
    auto stage = wram_kv(dpu, stage_offs[t], static_cast<u64>(B) * stage_elems);
    for (u64 pos = slo; pos < shi; pos += tile) {
      u64 m = std::min<u64>(tile, shi - pos);
      co_await ctx.dma_read(in_off + pos * kKvBytes, tile_offs[t], m * kKvBytes);
      auto tl = wram_kv(dpu, tile_offs[t], m);
      Bill bill;
      detail_part::charge_bsearch(bill, m, B);
      detail_part::charge_stage_append(bill, m);
      detail_part::charge_tile_loop(bill, m);
      co_await ctx.charge(bill);
      for (u64 k = 0; k < m; ++k) {
        u32 b = detail_part::range_bucket(sp, tl[k].key);
        stage[static_cast<u64>(b) * stage_elems + fill[b]] = tl[k];
        if (++fill[b] == stage_elems) {
          co_await ctx.charge(Bill{}.add(InstrClass::kAdd32, 3).add(InstrClass::kBranch, 1));
          co_await ctx.dma_write(out_off + cursor[b] * kKvBytes,
                                 stage_offs[t] + static_cast<u64>(b) * stage_elems * kKvBytes,
                                 stage_elems * kKvBytes);
          cursor[b] += stage_elems;
          fill[b] = 0;
        }
      }
    }
    for (u32 b = 0; b < B; ++b) {
      if (fill[b] == 0) continue;
      co_await ctx.charge(Bill{}.add(InstrClass::kAdd32, 3).add(InstrClass::kBranch, 1));
      co_await ctx.dma_write(out_off + cursor[b] * kKvBytes,
                             stage_offs[t] + static_cast<u64>(b) * stage_elems * kKvBytes,
                             fill[b] * kKvBytes);
      cursor[b] += fill[b];
    }
  };

  PartitionResult r;
  r.metrics = run_kernel(dpu, cfg, T, fn);
  auto buckets = dpu.wram_span<u64>(bucket_off, B + 1);
  r.bucket_offsets.assign(buckets.begin(), buckets.end());
  return r;
}

struct HashCountResult {
  std::vector<u64> sizes;
  std::vector<u64> offsets;  // exclusive prefix of sizes
  KernelMetrics metrics;
};

namespace detail_part {

struct HashPartitionShape {
  u64 counts_off;  // T x B count matrix
  u64 shared_off;  // B aggregated sizes / offsets
  u32 tile;
  std::vector<u64> tile_offs;
};

inline HashPartitionShape hash_count_layout(DpuState& dpu, const MachineConfig& cfg, u32 T,
                                            u32 B, u32 want_tile) {
  HashPartitionShape s;
  s.counts_off = dpu.wram_alloc(static_cast<u64>(T) * B * 8);
  s.shared_off = dpu.wram_alloc(static_cast<u64>(B + 1) * 8);
  s.tile = fit_tile_elems(dpu, cfg, T, dpu.wram_used(), 1, want_tile);
  s.tile_offs.resize(T);
  for (u32 t = 0; t < T; ++t) s.tile_offs[t] = dpu.wram_alloc(static_cast<u64>(s.tile) * kKvBytes);
  auto cn = dpu.wram_span<u64>(s.counts_off, static_cast<u64>(T) * B);
  std::fill(cn.begin(), cn.end(), 0);
  return s;
}

}  // namespace detail_part

/// Hash partitioning steps 1-2: per-tasklet bucket counters over hash32 low
/// bits, aggregated into shared sizes, offsets by single-tasklet prefix sum.
inline HashCountResult hash_partition_count(DpuState& dpu, const MachineConfig& cfg, u64 in_off,
                                            u64 n, u32 buckets, const KernelConfig& kcfg) {
  kcfg.validate();
  if (!is_pow2(buckets)) throw ConfigError("bucket count must be a power of two");
  const u32 T = kcfg.tasklets;
  const u32 B = buckets;
  dpu.wram_open(cfg, T);
  auto shape = detail_part::hash_count_layout(dpu, cfg, T, B, kcfg.buffer_elems);

  auto fn = [=, &dpu](TaskletCtx& ctx) -> TaskletProgram {
    const u32 t = ctx.id();
    auto [slo, shi] = slice_of(n, T, t);
    auto counts = dpu.wram_span<u64>(shape.counts_off, static_cast<u64>(T) * B);
    for (u64 pos = slo; pos < shi; pos += shape.tile) {
      u64 m = std::min<u64>(shape.tile, shi - pos);
      co_await ctx.dma_read(in_off + pos * kKvBytes, shape.tile_offs[t], m * kKvBytes);
      auto tl = wram_kv(dpu, shape.tile_offs[t], m);
      for (u64 k = 0; k < m; ++k)
        ++counts[static_cast<u64>(t) * B + hash_bucket(tl[k].key, B)];
      Bill bill;
      charge_hash(bill, m);
      bill.add(InstrClass::kAdd32, m);  // bucket mask
      detail_part::charge_count_incr(bill, m);
      detail_part::charge_tile_loop(bill, m);
      co_await ctx.charge(bill);
    }
    co_await barrier(ctx);
    if (t == 0) {
      // Aggregate the per-tasklet counters into the shared sizes, then turn
      // them into offsets with a prefix sum.
      auto shared = dpu.wram_span<u64>(shape.shared_off, B + 1);
      Bill bill;
      for (u32 b = 0; b < B; ++b) {
        u64 sum = 0;
        for (u32 tt = 0; tt < T; ++tt) sum += counts[static_cast<u64>(tt) * B + b];
        shared[b] = sum;
      }
      bill.add(InstrClass::kWramLoad8, static_cast<u64>(T) * B)
          .add(InstrClass::kAdd32, static_cast<u64>(T) * B)
          .add(InstrClass::kWramStore8, B)
          .add(InstrClass::kBranch, static_cast<u64>(T) * B);
      shared[B] = exclusive_prefix_wram(dpu, shape.shared_off, B, bill);
      co_await ctx.charge(bill);
    }
  };

  HashCountResult r;
  r.metrics = run_kernel(dpu, cfg, T, fn);
  auto shared = dpu.wram_span<u64>(shape.shared_off, B + 1);
  u64 total = shared[B];
  r.offsets.assign(shared.begin(), shared.begin() + B);
  r.sizes.resize(B);
  for (u32 b = 0; b < B; ++b)
    r.sizes[b] = (b + 1 < B ? r.offsets[b + 1] : total) - r.offsets[b];
  r.metrics.cycles = r.metrics.cycles;  // one launch
  return r;
}

/// Hash partitioning step 3: tasklets push records into a shared per-bucket
/// staging cache under one mutex per bucket; the tasklet that fills a bucket
/// writes it back to the bank at the bucket cursor while holding the lock.
/// Within-bucket order is flush order.
inline KernelMetrics hash_partition_scatter(DpuState& dpu, const MachineConfig& cfg, u64 in_off,
                                            u64 n, std::span<const u64> offsets, u32 buckets,
                                            u64 out_off, const KernelConfig& kcfg) {
  kcfg.validate();
  if (!is_pow2(buckets)) throw ConfigError("bucket count must be a power of two");
  if (offsets.size() != buckets) throw ConfigError("offsets size must equal bucket count");
  const u32 T = kcfg.tasklets;
  const u32 B = buckets;

  dpu.wram_open(cfg, T);
  u64 cursor_off = dpu.wram_alloc(static_cast<u64>(B) * 8);
  u64 end_off = dpu.wram_alloc(static_cast<u64>(B) * 8);
  u64 fill_off = dpu.wram_alloc(static_cast<u64>(B) * 8);
  // Shared stage: half the remaining budget, at least one record per bucket.
  u64 budget = dpu.wram_budget(cfg, T);
  u64 stage_budget = (budget - dpu.wram_used()) / 2;
  u32 stage_elems = static_cast<u32>(
      std::clamp<u64>(stage_budget / (static_cast<u64>(B) * kKvBytes), 1, 256));
  u64 stage_off = dpu.wram_alloc(static_cast<u64>(B) * stage_elems * kKvBytes);
  u32 tile = fit_tile_elems(dpu, cfg, T, dpu.wram_used(), 1, kcfg.buffer_elems);
  std::vector<u64> tile_offs(T);
  for (u32 t = 0; t < T; ++t) tile_offs[t] = dpu.wram_alloc(static_cast<u64>(tile) * kKvBytes);

  {
    auto cur = dpu.wram_span<u64>(cursor_off, B);
    auto end = dpu.wram_span<u64>(end_off, B);
    auto fil = dpu.wram_span<u64>(fill_off, B);
    for (u32 b = 0; b < B; ++b) {
      cur[b] = offsets[b];
      end[b] = b + 1 < B ? offsets[b + 1] : n;
      fil[b] = 0;
    }
  }

  auto fn = [=, &dpu](TaskletCtx& ctx) -> TaskletProgram {
    const u32 t = ctx.id();
    auto [slo, shi] = slice_of(n, T, t);
    auto cur = dpu.wram_span<u64>(cursor_off, B);
    auto end = dpu.wram_span<u64>(end_off, B);
    auto fil = dpu.wram_span<u64>(fill_off, B);
    auto stage = wram_kv(dpu, stage_off, static_cast<u64>(B) * stage_elems);

    for (u64 pos = slo; pos < shi; pos += tile) {
      u64 m = std::min<u64>(tile, shi - pos);
      co_await ctx.dma_read(in_off + pos * kKvBytes, tile_offs[t], m * kKvBytes);
      auto tl = wram_kv(dpu, tile_offs[t], m);
      co_await ctx.charge(Bill{}.add(InstrClass::kAdd32, m));  // tile loop
      for (u64 k = 0; k < m; ++k) {
        u32 b = hash_bucket(tl[k].key, B);
        Bill bill;
        charge_hash(bill, 1);
        bill.add(InstrClass::kAdd32, 1);
        co_await ctx.charge(bill);
        co_await ctx.lock(b);
        stage[static_cast<u64>(b) * stage_elems + fil[b]] = tl[k];
        ++fil[b];
        Bill inside;
        detail_part::charge_stage_append(inside, 1);
        co_await ctx.charge(inside);
        if (fil[b] == stage_elems) {
          if (cur[b] + stage_elems > end[b])
            throw InternalError("bucket overflow: offsets inconsistent with data");
          co_await ctx.charge(Bill{}.add(InstrClass::kWramLoad8, 2)
                                  .add(InstrClass::kAdd32, 3)
                                  .add(InstrClass::kCmp, 1)
                                  .add(InstrClass::kBranch, 1)
                                  .add(InstrClass::kWramStore8, 1));
          co_await ctx.dma_write(out_off + cur[b] * kKvBytes,
                                 stage_off + static_cast<u64>(b) * stage_elems * kKvBytes,
                                 stage_elems * kKvBytes);
          cur[b] += stage_elems;
          fil[b] = 0;
        }
        co_await ctx.unlock(b);
      }
    }
    co_await barrier(ctx);
    if (t == 0) {
      for (u32 b = 0; b < B; ++b) {
        if (fil[b] == 0) continue;
        if (cur[b] + fil[b] > end[b])
          throw InternalError("bucket overflow: offsets inconsistent with data");
        co_await ctx.charge(Bill{}.add(InstrClass::kWramLoad8, 2)
                                .add(InstrClass::kAdd32, 3)
                                .add(InstrClass::kCmp, 1)
                                .add(InstrClass::kBranch, 1));
        co_await ctx.dma_write(out_off + cur[b] * kKvBytes,
                               stage_off + static_cast<u64>(b) * stage_elems * kKvBytes,
                               fil[b] * kKvBytes);
        cur[b] += fil[b];
        fil[b] = 0;
      }
    }
  };
  return run_kernel(dpu, cfg, T, fn);
}

struct RadixResult {
  u64 result_off = 0;               // region holding the final grouping
  std::vector<u64> group_offsets;   // boundaries of the final groups
  KernelMetrics metrics;            // all passes combined
  u32 passes = 0;
};

/// Multi-pass radix partitioning by the top `total_bits` of hash32,
/// `bits_per_pass` bits per pass (the last pass takes the remainder).
/// Ping-pongs between the two regions; each pass refines every group of the
/// previous pass with the shared-stage scatter.
inline RadixResult multipass_radix_partition(DpuState& dpu, const MachineConfig& cfg,
                                             u64 region_a, u64 region_b, u64 n, u32 total_bits,
                                             u32 bits_per_pass, const KernelConfig& kcfg) {
  kcfg.validate();
  if (total_bits == 0 || total_bits > 24) throw ConfigError("total_bits must be in [1, 24]");
  if (bits_per_pass == 0) throw ConfigError("bits_per_pass must be >= 1");
  RadixResult res;
  res.result_off = region_a;
  res.group_offsets = {0, n};
  u64 other = region_b;
  u32 consumed = 0;

  while (consumed < total_bits) {
    u32 bits = std::min(bits_per_pass, total_bits - consumed);
    u32 B = 1u << bits;
    const u32 T = kcfg.tasklets;

    dpu.wram_open(cfg, T);
    u64 counts_off = dpu.wram_alloc(static_cast<u64>(T) * B * 8);
    u64 shared_off = dpu.wram_alloc(static_cast<u64>(B + 1) * 8);
    u64 fill_off = dpu.wram_alloc(static_cast<u64>(B) * 8);
    u64 budget = dpu.wram_budget(cfg, T);
    u64 stage_budget = (budget - dpu.wram_used()) / 2;
    u32 stage_elems = static_cast<u32>(
        std::clamp<u64>(stage_budget / (static_cast<u64>(B) * kKvBytes), 1, 256));
    u64 stage_off = dpu.wram_alloc(static_cast<u64>(B) * stage_elems * kKvBytes);
    u32 tile = fit_tile_elems(dpu, cfg, T, dpu.wram_used(), 1, kcfg.buffer_elems);
    std::vector<u64> tile_offs(T);
    for (u32 t = 0; t < T; ++t) tile_offs[t] = dpu.wram_alloc(static_cast<u64>(tile) * kKvBytes);

    auto groups = std::make_shared<std::vector<u64>>(res.group_offsets);
    auto new_groups = std::make_shared<std::vector<u64>>();
    u64 in_base = res.result_off, out_base = other;
    u32 shift_consumed = consumed;

    auto fn = [=, &dpu](TaskletCtx& ctx) -> TaskletProgram {
      const u32 t = ctx.id();
      auto counts = dpu.wram_span<u64>(counts_off, static_cast<u64>(T) * B);
      auto shared = dpu.wram_span<u64>(shared_off, B + 1);
      auto fil = dpu.wram_span<u64>(fill_off, B);
      auto stage = wram_kv(dpu, stage_off, static_cast<u64>(B) * stage_elems);

      for (std::size_t g = 0; g + 1 < groups->size(); ++g) {
        u64 glo = (*groups)[g], ghi = (*groups)[g + 1];
        u64 gn = ghi - glo;
        if (t == 0) {
          std::fill(counts.begin(), counts.end(), 0);
          std::fill(fil.begin(), fil.end(), 0);
          co_await ctx.charge(Bill{}.add(InstrClass::kWramStore8,
                                         static_cast<u64>(T) * B + B)
                                  .add(InstrClass::kAdd32, 8));  // group bookkeeping
        }
        co_await barrier(ctx);
        if (gn == 0) {
          if (t == 0)
            for (u32 b = 0; b < B; ++b) new_groups->push_back(glo);
          continue;
        }
        auto [slo, shi] = slice_of(gn, T, t);
        // Count.
        for (u64 pos = slo; pos < shi; pos += tile) {
          u64 m = std::min<u64>(tile, shi - pos);
          co_await ctx.dma_read(in_base + (glo + pos) * kKvBytes, tile_offs[t], m * kKvBytes);
          auto tl = wram_kv(dpu, tile_offs[t], m);
          for (u64 k = 0; k < m; ++k)
            ++counts[static_cast<u64>(t) * B + hash_field(tl[k].key, shift_consumed, bits)];
          Bill bill;
          charge_hash(bill, m);
          bill.add(InstrClass::kAdd32, 2 * m);  // shift + mask
          detail_part::charge_count_incr(bill, m);
          detail_part::charge_tile_loop(bill, m);
          co_await ctx.charge(bill);
        }
        co_await barrier(ctx);
        if (t == 0) {
          Bill bill;
          for (u32 b = 0; b < B; ++b) {
            u64 sum = 0;
            for (u32 tt = 0; tt < T; ++tt) sum += counts[static_cast<u64>(tt) * B + b];
            shared[b] = sum;
          }
          bill.add(InstrClass::kWramLoad8, static_cast<u64>(T) * B)
              .add(InstrClass::kAdd32, static_cast<u64>(T) * B)
              .add(InstrClass::kWramStore8, B)
              .add(InstrClass::kBranch, static_cast<u64>(T) * B);
          shared[B] = exclusive_prefix_wram(dpu, shared_off, B, bill);
          co_await ctx.charge(bill);
          for (u32 b = 0; b < B; ++b) new_groups->push_back(glo + shared[b]);
        }
        co_await barrier(ctx);
        // Scatter through the shared stage, one mutex per bucket.
        for (u64 pos = slo; pos < shi; pos += tile) {
          u64 m = std::min<u64>(tile, shi - pos);
          co_await ctx.dma_read(in_base + (glo + pos) * kKvBytes, tile_offs[t], m * kKvBytes);
          auto tl = wram_kv(dpu, tile_offs[t], m);
          co_await ctx.charge(Bill{}.add(InstrClass::kAdd32, m));
          for (u64 k = 0; k < m; ++k) {
            u32 b = hash_field(tl[k].key, shift_consumed, bits);
            Bill bill;
            charge_hash(bill, 1);
            bill.add(InstrClass::kAdd32, 2);
            co_await ctx.charge(bill);
            co_await ctx.lock(b);
            stage[static_cast<u64>(b) * stage_elems + fil[b]] = tl[k];
            ++fil[b];
            Bill inside;
            detail_part::charge_stage_append(inside, 1);
            co_await ctx.charge(inside);
            if (fil[b] == stage_elems) {
              co_await ctx.charge(Bill{}.add(InstrClass::kWramLoad8, 2)
                                      .add(InstrClass::kAdd32, 3)
                                      .add(InstrClass::kCmp, 1)
                                      .add(InstrClass::kBranch, 1)
                                      .add(InstrClass::kWramStore8, 1));
              co_await ctx.dma_write(out_base + (glo + shared[b]) * kKvBytes,
                                     stage_off + static_cast<u64>(b) * stage_elems * kKvBytes,
                                     stage_elems * kKvBytes);
              shared[b] += stage_elems;
              fil[b] = 0;
            }
            co_await ctx.unlock(b);
          }
        }
        co_await barrier(ctx);
        if (t == 0) {
          for (u32 b = 0; b < B; ++b) {
            if (fil[b] == 0) continue;
            co_await ctx.charge(Bill{}.add(InstrClass::kWramLoad8, 2)
                                    .add(InstrClass::kAdd32, 3)
                                    .add(InstrClass::kCmp, 1)
                                    .add(InstrClass::kBranch, 1));
            co_await ctx.dma_write(out_base + (glo + shared[b]) * kKvBytes,
                                   stage_off + static_cast<u64>(b) * stage_elems * kKvBytes,
                                   fil[b] * kKvBytes);
            shared[b] += fil[b];
            fil[b] = 0;
          }
        }
        co_await barrier(ctx);
      }
    };

    res.metrics += run_kernel(dpu, cfg, T, fn);
    new_groups->push_back(n);
    res.group_offsets = std::move(*new_groups);
    std::swap(res.result_off, other);
    consumed += bits;
    ++res.passes;
  }
  return res;
}

/// Samples `count` keys at a fixed stride (tasklet 0 only); used by the
/// multi-core sort to propose range splitters.
inline std::pair<std::vector<i64>, KernelMetrics> sample_keys(DpuState& dpu,
                                                              const MachineConfig& cfg,
                                                              u64 in_off, u64 n, u32 count,
                                                              const KernelConfig& kcfg) {
  dpu.wram_open(cfg, 1);
  u32 take = static_cast<u32>(std::min<u64>(count, n));
  auto out = std::make_shared<std::vector<i64>>();
  u64 buf = dpu.wram_alloc(std::max<u64>(take, 1) * kKvBytes);
  auto fn = [=, &dpu](TaskletCtx& ctx) -> TaskletProgram {
    if (take == 0) co_return;
    u64 stride = std::max<u64>(1, n / take);
    for (u32 s = 0; s < take; ++s) {
      u64 idx = std::min<u64>(n - 1, static_cast<u64>(s) * stride + stride / 2);
      co_await ctx.dma_read(in_off + idx * kKvBytes, buf + s * kKvBytes, kKvBytes);
      co_await ctx.charge(Bill{}.add(InstrClass::kAdd32, 3));
    }
    auto span = wram_kv(dpu, buf, take);
    Bill bill;
    charge_leaf_sort(bill, take);
    co_await ctx.charge(bill);
    std::sort(span.begin(), span.end(),
              [](const KeyValue& a, const KeyValue& b) { return a.key < b.key; });
    out->reserve(take);
    for (u32 s = 0; s < take; ++s) out->push_back(span[s].key);
  };
  KernelMetrics m = run_kernel(dpu, cfg, 1, fn);
  return {std::move(*out), m};
}

}  // namespace pimsim::kern
