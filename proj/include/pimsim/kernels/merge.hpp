#pragma once

#include "pimsim/kernels/quicksort.hpp"

namespace pimsim::kern {

namespace detail_merge {

// Compare-and-take path vs. drained-run copy path, per output element.
inline void charge_merge_out(Bill& b, u64 merged, u64 copied) {
  b.add(InstrClass::kWramLoad8, 2 * merged + 2 * copied)
      .add(InstrClass::kCmp, 2 * merged)
      .add(InstrClass::kBranch, 2 * merged + copied)
      .add(InstrClass::kWramStore8, 2 * merged + 2 * copied)
      .add(InstrClass::kAdd32, 3 * merged + 2 * copied);
}

}  // namespace detail_merge

/// Merges two sorted MRAM runs into `out` through three scratchpad buffers
/// of `tile` records each (two inputs, one output), always taking the
/// smaller head. Caller guarantees out is disjoint from both runs.
inline SubTask merge_runs(TaskletCtx& ctx, u64 buf_off, u32 tile, u64 a_off, u64 a_n, u64 b_off,
                          u64 b_n, u64 out_off) {
  DpuState& dpu = ctx.dpu();
  const u64 buf_a = buf_off;
  const u64 buf_b = buf_off + static_cast<u64>(tile) * kKvBytes;
  const u64 buf_o = buf_off + 2ull * tile * kKvBytes;
  auto A = wram_kv(dpu, buf_a, tile);
  auto B = wram_kv(dpu, buf_b, tile);
  auto O = wram_kv(dpu, buf_o, tile);

  u64 ai = 0, bi = 0, oi = 0;       // global consumed/produced counts
  u64 al = 0, bl = 0;               // loaded-tile sizes
  u64 au = 0, bu = 0, ou = 0;       // in-tile positions
  u64 merged = 0, copied = 0;

  auto load_a = [&]() -> TaskletCtx::StepAwait {
    al = std::min<u64>(tile, a_n - ai);
    au = 0;
    return ctx.dma_read(a_off + ai * kKvBytes, buf_a, al * kKvBytes);
  };
  auto load_b = [&]() -> TaskletCtx::StepAwait {
    bl = std::min<u64>(tile, b_n - bi);
    bu = 0;
    return ctx.dma_read(b_off + bi * kKvBytes, buf_b, bl * kKvBytes);
  };
  auto flush_charges = [&]() {
    Bill bill;
    detail_merge::charge_merge_out(bill, merged, copied);
    bill.add(InstrClass::kAdd32, 4);
    merged = copied = 0;
    return bill;
  };

  if (a_n > 0) co_await load_a();
  if (b_n > 0) co_await load_b();
  while (ai < a_n || bi < b_n) {
    bool take_a;
    if (ai < a_n && bi < b_n) {
      take_a = A[au].key <= B[bu].key;
      ++merged;
    } else {
      take_a = ai < a_n;
      ++copied;
    }
    if (take_a) {
      O[ou++] = A[au++];
      ++ai;
      if (au == al && ai < a_n) {
        co_await ctx.charge(flush_charges());
        co_await load_a();
      }
    } else {
      O[ou++] = B[bu++];
      ++bi;
      if (bu == bl && bi < b_n) {
        co_await ctx.charge(flush_charges());
        co_await load_b();
      }
    }
    if (ou == tile || (ai == a_n && bi == b_n)) {
      co_await ctx.charge(flush_charges());
      co_await ctx.dma_write(out_off + (oi) * kKvBytes, buf_o, ou * kKvBytes);
      oi += ou;
      ou = 0;
    }
  }
}

/// Single-pair merge kernel: one tasklet streams both runs once.
inline KernelMetrics merge_pass(DpuState& dpu, const MachineConfig& cfg, u64 a_off, u64 a_n,
                                u64 b_off, u64 b_n, u64 out_off, const KernelConfig& kcfg) {
  kcfg.validate();
  dpu.wram_open(cfg, 1);
  u32 tile = fit_tile_elems(dpu, cfg, 1, 0, 3, kcfg.buffer_elems);
  u64 buf = dpu.wram_alloc(3ull * tile * kKvBytes);
  auto fn = [=](TaskletCtx& ctx) -> TaskletProgram {
    co_await merge_runs(ctx, buf, tile, a_off, a_n, b_off, b_n, out_off);
  };
  return run_kernel(dpu, cfg, 1, fn);
}

struct MergesortResult {
  u64 result_off = 0;
  KernelMetrics metrics;
};

/// Mergesort over `n` records at `in_off` using `scratch_off` as the
/// ping-pong buffer: scratchpad-sized chunks are pre-sorted in place, then
/// log passes of pairwise run merges, pairs distributed round-robin over the
/// tasklets with a barrier between passes.
inline MergesortResult mergesort_mram(DpuState& dpu, const MachineConfig& cfg, u64 in_off,
                                      u64 scratch_off, u64 n, const KernelConfig& kcfg) {
  kcfg.validate();
  const u32 T = kcfg.tasklets;
  dpu.wram_open(cfg, T);
  u32 tile = fit_tile_elems(dpu, cfg, T, 0, 3, kcfg.buffer_elems);
  std::vector<u64> bufs(T);
  for (u32 t = 0; t < T; ++t) bufs[t] = dpu.wram_alloc(3ull * tile * kKvBytes);

  MergesortResult res;
  auto result_off = std::make_shared<u64>(in_off);
  auto fn = [=, &dpu](TaskletCtx& ctx) -> TaskletProgram {
    const u32 t = ctx.id();
    // Leaf phase: sort tile-sized chunks in scratchpad, round-robin.
    u64 chunks = n == 0 ? 0 : ceil_div(n, tile);
    for (u64 c = t; c < chunks; c += T) {
      u64 lo = c * tile, hi = std::min<u64>(n, lo + tile);
      co_await leaf_step(ctx, in_off, bufs[t], lo, hi);
    }
    co_await barrier(ctx);
    // Merge passes, ping-ponging between the regions.
    u64 run_len = tile;
    u64 src = in_off, dst = scratch_off;
    while (run_len < n) {
      u64 pairs = ceil_div(n, 2 * run_len);
      for (u64 p = t; p < pairs; p += T) {
        u64 lo = p * 2 * run_len;
        u64 mid = std::min<u64>(n, lo + run_len);
        u64 hi = std::min<u64>(n, lo + 2 * run_len);
        co_await merge_runs(ctx, bufs[t], tile, src + lo * kKvBytes, mid - lo,
                            src + mid * kKvBytes, hi - mid, dst + lo * kKvBytes);
      }
      co_await barrier(ctx);
      std::swap(src, dst);
      run_len *= 2;
      if (t == 0) *result_off = src;
    }
    if (t == 0 && n > 0) *result_off = src;
  };
  res.metrics = run_kernel(dpu, cfg, T, fn);
  res.result_off = *result_off;
  return res;
}

}  // namespace pimsim::kern
