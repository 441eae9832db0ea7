#pragma once

#include <algorithm>

#include "pimsim/kernels/keyvalue.hpp"

namespace pimsim::kern {

// Per-element instruction estimates for the compiled inner loops. One scan
// unit = test one key against the pivot (64-bit compare) and advance; one
// swap unit = exchange two 16-byte records between the buffers.
inline void charge_scan(Bill& b, u64 units) {
  b.add(InstrClass::kWramLoad8, units)
      .add(InstrClass::kCmp, 2 * units)
      .add(InstrClass::kBranch, 2 * units)
      .add(InstrClass::kAdd32, 2 * units);
}
inline void charge_swaps(Bill& b, u64 units) {
  b.add(InstrClass::kWramLoad8, 4 * units)
      .add(InstrClass::kWramStore8, 4 * units)
      .add(InstrClass::kAdd32, 2 * units);
}
/// In-scratchpad sort of n records: ~8 instructions per element per level.
inline void charge_leaf_sort(Bill& b, u64 n) {
  if (n < 2) return;
  u64 e = n * std::bit_width(n - 1);
  b.add(InstrClass::kWramLoad8, 2 * e)
      .add(InstrClass::kCmp, 2 * e)
      .add(InstrClass::kBranch, 2 * e)
      .add(InstrClass::kAdd32, 2 * e);
}

/// Bounded two-pointer partition of a scratchpad span by a pivot value.
/// Returns cut: [0, cut) keys <= pivot, [cut, n) keys >= pivot.
inline u64 partition_span(std::span<KeyValue> a, i64 pivot, u64& scanned, u64& swaps) {
  u64 li = 0, rj = a.size();
  while (li < rj) {
    if (a[li].key < pivot) {
      ++li;
      ++scanned;
    } else if (a[rj - 1].key > pivot) {
      --rj;
      ++scanned;
    } else {
      std::swap(a[li], a[rj - 1]);
      ++li;
      --rj;
      ++swaps;
      scanned += 2;
    }
  }
  return li;
}

namespace detail_qs {

/// Reads records lo, mid, hi-1, moves the median-of-three to position lo.
inline SubTask median_to_front(TaskletCtx& ctx, u64 base, u64 buf_off, u64 lo, u64 hi) {
  DpuState& dpu = ctx.dpu();
  u64 mid = lo + (hi - lo) / 2, last = hi - 1;
  co_await ctx.dma_read(base + lo * kKvBytes, buf_off, kKvBytes);
  co_await ctx.dma_read(base + mid * kKvBytes, buf_off + kKvBytes, kKvBytes);
  co_await ctx.dma_read(base + last * kKvBytes, buf_off + 2 * kKvBytes, kKvBytes);
  auto s = wram_kv(dpu, buf_off, 3);
  i64 a = s[0].key, b = s[1].key, c = s[2].key;
  u64 med;
  if ((a <= b) == (b <= c))
    med = mid;
  else if ((b <= a) == (a <= c))
    med = lo;
  else
    med = last;
  co_await ctx.charge(Bill{}.add(InstrClass::kCmp, 6).add(InstrClass::kBranch, 3).add(
      InstrClass::kAdd32, 2));
  if (med != lo) {
    u64 med_slot = med == mid ? 1 : 2;
    // Exchange the two records through the already-loaded copies.
    co_await ctx.dma_write(base + lo * kKvBytes, buf_off + med_slot * kKvBytes, kKvBytes);
    co_await ctx.dma_write(base + med * kKvBytes, buf_off, kKvBytes);
  }
}

/// Rare corner of the windowed partition: the whole range turned out to be
/// <= pivot with the maximum buried left of the scan frontier. Streams the
/// range, swaps the last maximum to the end, splits before it.
inline SubTask split_out_max(TaskletCtx& ctx, u64 base, u64 buf_off, u32 tile, u64 lo, u64 hi,
                             u64* split_out) {
  DpuState& dpu = ctx.dpu();
  i64 best = std::numeric_limits<i64>::min();
  u64 best_pos = lo;
  for (u64 pos = lo; pos < hi; pos += tile) {
    u64 n = std::min<u64>(tile, hi - pos);
    co_await ctx.dma_read(base + pos * kKvBytes, buf_off, n * kKvBytes);
    auto t = wram_kv(dpu, buf_off, n);
    for (u64 k = 0; k < n; ++k)
      if (t[k].key >= best) {
        best = t[k].key;
        best_pos = pos + k;
      }
    Bill bill;
    charge_scan(bill, n);
    co_await ctx.charge(bill);
  }
  u64 last = hi - 1;
  if (best_pos != last) {
    co_await ctx.dma_read(base + best_pos * kKvBytes, buf_off, kKvBytes);
    co_await ctx.dma_read(base + last * kKvBytes, buf_off + kKvBytes, kKvBytes);
    co_await ctx.dma_write(base + best_pos * kKvBytes, buf_off + kKvBytes, kKvBytes);
    co_await ctx.dma_write(base + last * kKvBytes, buf_off, kKvBytes);
  }
  *split_out = last;
}

}  // namespace detail_qs

/// One quicksort partition pass over MRAM records [lo, hi) around a
/// median-of-three pivot, using two scratchpad windows of `tile` records
/// that sweep inward from both ends and swap across (in place). `buf_off`
/// must hold 2 * tile records. Writes the split point: [lo, s) keys <=
/// pivot <= keys of [s, hi), both parts non-empty.
inline SubTask partition_step(TaskletCtx& ctx, u64 base, u64 buf_off, u32 tile, u64 lo, u64 hi,
                              u64* split_out) {
  DpuState& dpu = ctx.dpu();
  const u64 n = hi - lo;
  if (n < 2) throw InternalError("partition_step on a range of < 2 records");
  co_await detail_qs::median_to_front(ctx, base, buf_off, lo, hi);

  u64 scanned = 0, swaps = 0;
  auto flush_bill = [&]() {
    Bill b;
    charge_scan(b, scanned);
    charge_swaps(b, swaps);
    b.add(InstrClass::kAdd32, 6);  // window pointer arithmetic
    scanned = swaps = 0;
    return b;
  };

  if (n <= 2 * static_cast<u64>(tile)) {
    // The whole range fits the combined buffer.
    co_await ctx.dma_read(base + lo * kKvBytes, buf_off, n * kKvBytes);
    auto span = wram_kv(dpu, buf_off, n);
    i64 pivot = span[0].key;
    u64 cut = partition_span(span, pivot, scanned, swaps);
    if (cut == 0) cut = 1;  // pivot itself sits at the front
    if (cut == n) {
      // Pivot equals the range maximum: split the last maximum out.
      u64 best = 0;
      for (u64 k = 0; k < n; ++k)
        if (span[k].key >= span[best].key) best = k;
      std::swap(span[best], span[n - 1]);
      scanned += n;
      ++swaps;
      cut = n - 1;
    }
    co_await ctx.charge(flush_bill());
    co_await ctx.dma_write(base + lo * kKvBytes, buf_off, n * kKvBytes);
    *split_out = lo + cut;
    co_return;
  }

  const u64 buf_l = buf_off, buf_r = buf_off + static_cast<u64>(tile) * kKvBytes;
  u64 wl = lo;        // left window covers [wl, wl + tile)
  u64 wr = hi - tile;  // right window covers [wr, wr + tile)
  co_await ctx.dma_read(base + wl * kKvBytes, buf_l, tile * kKvBytes);
  co_await ctx.dma_read(base + wr * kKvBytes, buf_r, tile * kKvBytes);
  auto L = wram_kv(dpu, buf_l, tile);
  auto R = wram_kv(dpu, buf_r, tile);
  const i64 pivot = L[0].key;

  u64 gi = lo;      // forward scan position (next to test)
  u64 gj = hi - 1;  // backward scan position (next to test)
  bool endgame = false;
  bool left_dirty = true, right_dirty = true;
  for (;;) {
    // Forward: advance gi to the next key >= pivot.
    for (;;) {
      if (gi >= wl + tile) {
        co_await ctx.charge(flush_bill());
        co_await ctx.dma_write(base + wl * kKvBytes, buf_l, tile * kKvBytes);
        left_dirty = false;
        if (gi + tile > wr) {
          endgame = true;
          break;
        }
        wl = gi;
        left_dirty = true;
        co_await ctx.dma_read(base + wl * kKvBytes, buf_l, tile * kKvBytes);
      }
      ++scanned;
      if (L[gi - wl].key >= pivot) break;
      ++gi;
    }
    if (endgame) break;
    // Backward: advance gj to the next key <= pivot.
    for (;;) {
      if (gj < wr) {
        co_await ctx.charge(flush_bill());
        co_await ctx.dma_write(base + wr * kKvBytes, buf_r, tile * kKvBytes);
        right_dirty = false;
        if (wr < 2 * tile || wr - tile < wl + tile) {
          endgame = true;
          break;
        }
        wr -= tile;
        right_dirty = true;
        co_await ctx.dma_read(base + wr * kKvBytes, buf_r, tile * kKvBytes);
      }
      ++scanned;
      if (R[gj - wr].key <= pivot) break;
      --gj;
    }
    if (endgame) break;
    if (gi >= gj) {
      co_await ctx.charge(flush_bill());
      co_await ctx.dma_write(base + wl * kKvBytes, buf_l, tile * kKvBytes);
      co_await ctx.dma_write(base + wr * kKvBytes, buf_r, tile * kKvBytes);
      *split_out = gj + 1;
      if (*split_out <= lo || *split_out >= hi)
        throw InternalError("quicksort partition produced an empty side");
      co_return;
    }
    // Swap across the windows; both positions are resident.
    std::swap(L[gi - wl], R[gj - wr]);
    ++swaps;
    ++gi;
    --gj;
  }

  // Endgame: the windows would collide; write back whichever is still dirty
  // and finish the remainder in the combined buffer.
  co_await ctx.charge(flush_bill());
  if (left_dirty) co_await ctx.dma_write(base + wl * kKvBytes, buf_l, tile * kKvBytes);
  if (right_dirty) co_await ctx.dma_write(base + wr * kKvBytes, buf_r, tile * kKvBytes);
  u64 rem_lo = gi, rem_hi = gj + 1;
  if (rem_lo >= rem_hi) {
    *split_out = rem_hi;
    if (*split_out <= lo || *split_out >= hi)
      throw InternalError("quicksort endgame produced an empty side");
    co_return;
  }
  u64 rem_n = rem_hi - rem_lo;
  if (rem_n > 2 * static_cast<u64>(tile))
    throw InternalError("quicksort endgame remainder exceeds the combined buffer");
  co_await ctx.dma_read(base + rem_lo * kKvBytes, buf_off, rem_n * kKvBytes);
  auto span = wram_kv(dpu, buf_off, rem_n);
  u64 cut = partition_span(span, pivot, scanned, swaps);
  co_await ctx.charge(flush_bill());
  co_await ctx.dma_write(base + rem_lo * kKvBytes, buf_off, rem_n * kKvBytes);
  u64 split = rem_lo + cut;
  if (split == hi) {
    // Everything <= pivot and the maximum sits left of the remainder.
    co_await detail_qs::split_out_max(ctx, base, buf_off, 2 * tile, lo, hi, split_out);
    co_return;
  }
  if (split == lo) split = lo + 1;  // a[lo] == pivot, remainder all >= pivot
  *split_out = split;
}

/// Sorts MRAM records [lo, hi) entirely in scratchpad (range must fit one
/// tile): one read, in-buffer sort, one write.
inline SubTask leaf_step(TaskletCtx& ctx, u64 base, u64 buf_off, u64 lo, u64 hi) {
  u64 n = hi - lo;
  if (n < 2) co_return;
  co_await ctx.dma_read(base + lo * kKvBytes, buf_off, n * kKvBytes);
  auto span = wram_kv(ctx.dpu(), buf_off, n);
  std::sort(span.begin(), span.end(),
            [](const KeyValue& a, const KeyValue& b) { return a.key < b.key; });
  Bill bill;
  charge_leaf_sort(bill, n);
  co_await ctx.charge(bill);
  co_await ctx.dma_write(base + lo * kKvBytes, buf_off, n * kKvBytes);
}

inline void charge_stack_pop(Bill& b) {
  b.add(InstrClass::kWramLoad8, 2).add(InstrClass::kAdd32, 1).add(InstrClass::kCmp, 1).add(
      InstrClass::kBranch, 1);
}
inline void charge_stack_push(Bill& b) {
  b.add(InstrClass::kWramStore8, 2).add(InstrClass::kAdd32, 1);
}

/// Iterative quicksort of [lo, hi) run by one tasklet with a private
/// subrange stack (lives in the tasklet's stack reserve). `buf_off` holds
/// 2 * tile records. Subranges <= tile are sorted entirely in scratchpad.
inline SubTask sort_range(TaskletCtx& ctx, u64 base, u64 buf_off, u32 tile, u64 lo, u64 hi) {
  std::vector<std::pair<u64, u64>> stack;
  if (hi > lo) stack.emplace_back(lo, hi);
  while (!stack.empty()) {
    auto [a, b] = stack.back();
    stack.pop_back();
    Bill bill;
    charge_stack_pop(bill);
    co_await ctx.charge(bill);
    if (b - a <= tile) {
      co_await leaf_step(ctx, base, buf_off, a, b);
      continue;
    }
    u64 split = 0;
    co_await partition_step(ctx, base, buf_off, tile, a, b, &split);
    Bill push;
    charge_stack_push(push);
    charge_stack_push(push);
    co_await ctx.charge(push);
    // Larger side first so the stack depth stays logarithmic.
    if (split - a >= b - split) {
      stack.emplace_back(a, split);
      stack.emplace_back(split, b);
    } else {
      stack.emplace_back(split, b);
      stack.emplace_back(a, split);
    }
  }
}

/// In-place quicksort of `n` records at MRAM offset `base`, all tasklets
/// sharing one work stack of subranges. The stack and its bookkeeping live
/// in a reserved scratchpad region guarded by a mutex; idle tasklets poll
/// with exponential backoff.
inline KernelMetrics quicksort_mram(DpuState& dpu, const MachineConfig& cfg, u64 base, u64 n,
                                    const KernelConfig& kcfg) {
  kcfg.validate();
  struct Shared {
    std::vector<std::pair<u64, u64>> stack;
    u32 active = 0;
  };
  auto shared = std::make_shared<Shared>();
  if (n > 1) shared->stack.emplace_back(0, n);
  constexpr u32 kStackMutex = 0;
  const u32 tasklets = kcfg.tasklets;

  dpu.wram_open(cfg, tasklets);
  u64 stack_region = dpu.wram_alloc(1024);  // shared work stack (64 ranges)
  (void)stack_region;
  u32 tile = fit_tile_elems(dpu, cfg, tasklets, dpu.wram_used(), 2, kcfg.buffer_elems);
  std::vector<u64> bufs(tasklets);
  for (u32 t = 0; t < tasklets; ++t) bufs[t] = dpu.wram_alloc(2ull * tile * kKvBytes);

  auto fn = [=, &dpu](TaskletCtx& ctx) -> TaskletProgram {
    u64 buf = bufs[ctx.id()];
    bool finished_one = false;
    u64 backoff = 4;
    for (;;) {
      co_await ctx.lock(kStackMutex);
      Bill bill;
      charge_stack_pop(bill);
      if (finished_one) {
        --shared->active;
        finished_one = false;
        bill.add(InstrClass::kAdd32, 1);
      }
      bool have = false;
      u64 a = 0, b = 0;
      if (!shared->stack.empty()) {
        std::tie(a, b) = shared->stack.back();
        shared->stack.pop_back();
        ++shared->active;
        have = true;
      }
      bool all_done = !have && shared->active == 0;
      co_await ctx.charge(bill);
      co_await ctx.unlock(kStackMutex);
      if (all_done) break;
      if (!have) {
        co_await ctx.charge(InstrClass::kAdd32, backoff);  // poll backoff
        backoff = std::min<u64>(backoff * 2, 4096);
        continue;
      }
      backoff = 4;
      if (b - a <= tile) {
        co_await leaf_step(ctx, base, buf, a, b);
      } else {
        u64 split = 0;
        co_await partition_step(ctx, base, buf, tile, a, b, &split);
        co_await ctx.lock(kStackMutex);
        Bill push;
        charge_stack_push(push);
        charge_stack_push(push);
        shared->stack.emplace_back(a, split);
        shared->stack.emplace_back(split, b);
        co_await ctx.charge(push);
        co_await ctx.unlock(kStackMutex);
      }
      finished_one = true;
    }
  };
  return run_kernel(dpu, cfg, tasklets, fn);
}

}  // namespace pimsim::kern
