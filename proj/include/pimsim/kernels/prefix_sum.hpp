#pragma once

#include "pimsim/kernels/keyvalue.hpp"

namespace pimsim::kern {

struct PrefixSum {
  std::vector<u64> offsets;
  u64 total = 0;
};

/// offsets[0] = 0, offsets[i] = offsets[i-1] + counts[i-1]; exact integers.
inline PrefixSum exclusive_prefix_sum(std::span<const u64> counts) {
  PrefixSum r;
  r.offsets.resize(counts.size());
  u64 run = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    r.offsets[i] = run;
    run += counts[i];
  }
  r.total = run;
  return r;
}

/// In-place exclusive prefix sum over a WRAM array of u64 counts, charged as
/// the single-tasklet loop the partition kernels run (load, add, store per
/// cell). Returns the total.
inline u64 exclusive_prefix_wram(DpuState& dpu, u64 wram_off, u64 n, Bill& bill) {
  auto cells = dpu.wram_span<u64>(wram_off, n);
  u64 run = 0;
  for (u64 i = 0; i < n; ++i) {
    u64 c = cells[i];
    cells[i] = run;
    run += c;
  }
  bill.add(InstrClass::kWramLoad8, n)
      .add(InstrClass::kAdd32, 2 * n)
      .add(InstrClass::kWramStore8, n)
      .add(InstrClass::kBranch, n);
  return run;
}

}  // namespace pimsim::kern
