#pragma once

#include <array>
#include <vector>

#include "pimsim/machine/config.hpp"

namespace pimsim {

struct TaskletMetrics {
  u64 instructions = 0;
  u64 dma_read_bytes = 0;
  u64 dma_write_bytes = 0;
};

/// Per-DPU result of one kernel launch.
struct KernelMetrics {
  u64 instructions = 0;
  u64 cycles = 0;
  u64 dma_read_bytes = 0;
  u64 dma_write_bytes = 0;
  std::array<u64, kInstrClassCount> per_class{};
  std::vector<TaskletMetrics> tasklets;

  double ipc() const { return cycles == 0 ? 0.0 : static_cast<double>(instructions) / cycles; }

  u64 class_count(InstrClass c) const { return per_class[static_cast<std::size_t>(c)]; }

  KernelMetrics& operator+=(const KernelMetrics& o) {
    instructions += o.instructions;
    cycles += o.cycles;  // phases on one DPU run back to back
    dma_read_bytes += o.dma_read_bytes;
    dma_write_bytes += o.dma_write_bytes;
    for (std::size_t i = 0; i < kInstrClassCount; ++i) per_class[i] += o.per_class[i];
    if (tasklets.size() < o.tasklets.size()) tasklets.resize(o.tasklets.size());
    for (std::size_t i = 0; i < o.tasklets.size(); ++i) {
      tasklets[i].instructions += o.tasklets[i].instructions;
      tasklets[i].dma_read_bytes += o.tasklets[i].dma_read_bytes;
      tasklets[i].dma_write_bytes += o.tasklets[i].dma_write_bytes;
    }
    return *this;
  }
};

}  // namespace pimsim
