#pragma once

#include "pimsim/machine/scheduler.hpp"

namespace pimsim::bench {

/// Streaming MRAM microbenchmark: one tasklet moves `total_bytes` in
/// `chunk_bytes` DMA transfers. Returns effective MB/s (1e6 bytes/s).
inline double mram_stream_mbps(const MachineConfig& cfg, u64 chunk_bytes, bool write,
                               u64 total_bytes = 4 * kMiB) {
  DpuState dpu(0, cfg);
  dpu.wram_open(cfg, 1);
  u64 chunks = total_bytes / chunk_bytes;
  auto fn = [=](TaskletCtx& ctx) -> TaskletProgram {
    u64 buf = ctx.dpu().wram_alloc(chunk_bytes);
    u64 mram = ctx.dpu().mram_alloc(chunk_bytes, "stream");
    for (u64 i = 0; i < chunks; ++i) {
      if (write)
        co_await ctx.dma_write(mram, buf, chunk_bytes);
      else
        co_await ctx.dma_read(mram, buf, chunk_bytes);
    }
  };
  KernelMetrics m = run_kernel(dpu, cfg, 1, fn);
  double seconds = static_cast<double>(m.cycles) / static_cast<double>(cfg.clock_hz);
  return static_cast<double>(chunks * chunk_bytes) / seconds / 1e6;
}

/// Scratchpad bandwidth with 8-byte word accesses: enough tasklets to fill
/// the pipeline, each charging a long run of 8-byte loads.
inline double wram_stream_mbps(const MachineConfig& cfg, u32 tasklets = 16,
                               u64 words_per_tasklet = 200'000) {
  DpuState dpu(0, cfg);
  dpu.wram_open(cfg, tasklets);
  auto fn = [=](TaskletCtx& ctx) -> TaskletProgram {
    co_await ctx.charge(InstrClass::kWramLoad8, words_per_tasklet);
  };
  KernelMetrics m = run_kernel(dpu, cfg, tasklets, fn);
  double seconds = static_cast<double>(m.cycles) / static_cast<double>(cfg.clock_hz);
  u64 bytes = 8 * words_per_tasklet * tasklets;
  return static_cast<double>(bytes) / seconds / 1e6;
}

struct CalibrationReport {
  double mram_read_mbps;
  double mram_write_mbps;
  double wram_mbps;
  double small_vs_large_ratio;  // per-byte cost of 8 B vs 2 KiB transfers
};

inline CalibrationReport calibration_report(const MachineConfig& cfg) {
  CalibrationReport r{};
  r.mram_read_mbps = mram_stream_mbps(cfg, 2048, false);
  r.mram_write_mbps = mram_stream_mbps(cfg, 2048, true);
  r.wram_mbps = wram_stream_mbps(cfg);
  double small = mram_stream_mbps(cfg, 8, false, 64 * kKiB);
  r.small_vs_large_ratio = r.mram_read_mbps / small;
  return r;
}

}  // namespace pimsim::bench
