#pragma once

#include "pimsim/machine/scheduler.hpp"

namespace pimsim::kern {

/// Fixed 16-byte record moved through all kernels: sort/join/aggregation key
/// plus a row index (or payload). 8-byte aligned in MRAM and WRAM.
struct KeyValue {
  i64 key;
  u64 value;
};
static_assert(sizeof(KeyValue) == 16);

inline constexpr u64 kKvBytes = sizeof(KeyValue);

/// Reserved empty-slot sentinel for scratchpad hash tables; generators and
/// operators never produce it as a key.
inline constexpr i64 kEmptyKey = std::numeric_limits<i64>::min();

struct KernelConfig {
  u32 buffer_elems = 256;   // upper bound on elements per scratchpad tile
  u32 tasklets = 16;
  u32 radix_buckets = 32;   // buckets per radix partitioning pass
  u32 ht_fill_max_pct = 50; // scratchpad hash table load-factor cap

  void validate() const {
    if (buffer_elems < 2) throw ConfigError("buffer_elems must be >= 2");
    if (tasklets < 1) throw ConfigError("tasklets must be >= 1");
    if (!is_pow2(radix_buckets)) throw ConfigError("radix_buckets must be a power of two");
    if (ht_fill_max_pct < 1 || ht_fill_max_pct > 100)
      throw ConfigError("ht_fill_max_pct must be in [1, 100]");
  }
};

/// Largest tile size <= want_elems such that `buffers` KeyValue tiles per
/// tasklet plus `fixed_bytes` of shared regions fit the scratchpad budget.
/// The configured buffer size is a cap, not a promise: kernels shrink tiles
/// to respect the budget at any tasklet count.
inline u32 fit_tile_elems(const DpuState& dpu, const MachineConfig& cfg, u32 tasklets,
                          u64 fixed_bytes, u32 buffers, u32 want_elems) {
  u64 budget = dpu.wram_budget(cfg, tasklets);
  if (budget <= fixed_bytes)
    throw ScratchpadExhaustedError("shared regions alone exceed the scratchpad budget");
  u64 per_elem = static_cast<u64>(buffers) * tasklets * kKvBytes;
  u64 fit = (budget - fixed_bytes) / per_elem;
  if (fit < 2)
    throw ScratchpadExhaustedError("tile buffers do not fit the scratchpad budget");
  return static_cast<u32>(std::min<u64>(fit, want_elems));
}

inline std::span<KeyValue> mram_kv(DpuState& dpu, u64 off, u64 n) {
  return dpu.mram_span<KeyValue>(off, n);
}
inline std::span<KeyValue> wram_kv(DpuState& dpu, u64 off, u64 n) {
  return dpu.wram_span<KeyValue>(off, n);
}

/// All-tasklet barrier built from handshakes: everyone reports to tasklet 0,
/// tasklet 0 releases everyone.
inline SubTask barrier(TaskletCtx& ctx) {
  u32 n = ctx.tasklet_count();
  if (n == 1) co_return;
  if (ctx.id() == 0) {
    for (u32 t = 1; t < n; ++t) co_await ctx.wait_for(t);
    for (u32 t = 1; t < n; ++t) co_await ctx.notify(t);
  } else {
    co_await ctx.notify(0);
    co_await ctx.wait_for(0);
  }
}

/// Evenly slices [0, n) into `parts`; slice `i` gets the remainder spread.
inline std::pair<u64, u64> slice_of(u64 n, u32 parts, u32 i) {
  u64 base = n / parts, rem = n % parts;
  u64 lo = base * i + std::min<u64>(i, rem);
  u64 hi = lo + base + (i < rem ? 1 : 0);
  return {lo, hi};
}

}  // namespace pimsim::kern
