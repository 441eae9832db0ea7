#pragma once

#include <cstring>
#include <span>
#include <vector>

#include "pimsim/machine/config.hpp"

namespace pimsim {

/// One PIM core: bank memory (MRAM) and scratchpad (WRAM) images plus the
/// bump allocators used to budget them. Tasklet and DMA state live in the
/// scheduler for the duration of a kernel launch.
class DpuState {
 public:
  DpuState(u32 id, const MachineConfig& cfg)
      : id_(id),
        mram_capacity_(cfg.mram_bytes),
        wram_capacity_(cfg.wram_bytes),
        wram_(cfg.wram_bytes / 8, 0) {}

  u32 id() const { return id_; }
  u64 mram_capacity() const { return mram_capacity_; }
  u64 wram_capacity() const { return wram_capacity_; }

  // --- MRAM ----------------------------------------------------------------
  // The image grows on demand so a 64 MiB bank does not cost 64 MiB of host
  // memory per simulated DPU at desk scale.

  std::uint8_t* mram_ptr(u64 offset, u64 bytes) {
    check_mram(offset, bytes);
    ensure_mram(offset + bytes);
    return reinterpret_cast<std::uint8_t*>(mram_.data()) + offset;
  }
  const std::uint8_t* mram_cptr(u64 offset, u64 bytes) const {
    check_mram(offset, bytes);
    const_cast<DpuState*>(this)->ensure_mram(offset + bytes);
    return reinterpret_cast<const std::uint8_t*>(mram_.data()) + offset;
  }

  template <typename T>
  std::span<T> mram_span(u64 offset, u64 count) {
    return {reinterpret_cast<T*>(mram_ptr(offset, count * sizeof(T))), count};
  }
  template <typename T>
  std::span<const T> mram_cspan(u64 offset, u64 count) const {
    return {reinterpret_cast<const T*>(mram_cptr(offset, count * sizeof(T))), count};
  }

  /// Bump-allocates a bank-memory region (operator buffers, table columns).
  u64 mram_alloc(u64 bytes, const char* what = "buffer") {
    u64 off = mram_bump_;
    u64 sz = align_up(bytes, 8);
    if (off + sz > mram_capacity_)
      throw CapacityError(std::string("dpu ") + std::to_string(id_) + ": MRAM exhausted for " +
                          what + " (" + std::to_string(sz) + " B at " + std::to_string(off) + ")");
    mram_bump_ = off + sz;
    return off;
  }
  u64 mram_used() const { return mram_bump_; }
  void mram_reset(u64 watermark = 0) { mram_bump_ = watermark; }

  // --- WRAM ----------------------------------------------------------------

  std::uint8_t* wram_ptr(u64 offset, u64 bytes) {
    check_wram(offset, bytes);
    return reinterpret_cast<std::uint8_t*>(wram_.data()) + offset;
  }

  template <typename T>
  std::span<T> wram_span(u64 offset, u64 count) {
    return {reinterpret_cast<T*>(wram_ptr(offset, count * sizeof(T))), count};
  }

  /// Scratchpad budget for a launch with `tasklets` threads: capacity minus
  /// the per-tasklet stack reserve.
  u64 wram_budget(const MachineConfig& cfg, u32 tasklets) const {
    u64 reserve = cfg.stack_reserve_bytes * tasklets;
    return reserve >= wram_capacity_ ? 0 : wram_capacity_ - reserve;
  }

  /// Allocates a scratchpad region. Alignment must divide 8 (all WRAM data
  /// paths are 8-byte word based).
  u64 wram_alloc(u64 bytes, u64 align = 8) {
    if (bytes == 0) throw InvalidSizeError("wram_alloc of 0 bytes");
    if (align == 0 || 8 % align != 0)
      throw UnalignedAccessError("wram_alloc alignment must divide 8");
    u64 off = align_up(wram_bump_, align);
    if (off + bytes > wram_limit_)
      throw ScratchpadExhaustedError(
          std::string("dpu ") + std::to_string(id_) + ": request " + std::to_string(bytes) +
          " B at " + std::to_string(off) + ", budget " + std::to_string(wram_limit_) + " B");
    wram_bump_ = off + bytes;
    return off;
  }

  /// Resets the scratchpad allocator for a launch with `tasklets` threads.
  void wram_open(const MachineConfig& cfg, u32 tasklets) {
    wram_bump_ = 0;
    wram_limit_ = wram_budget(cfg, tasklets);
  }
  u64 wram_free() const { return wram_limit_ - wram_bump_; }
  u64 wram_used() const { return wram_bump_; }

  void check_mram(u64 offset, u64 bytes) const {
    if (offset + bytes > mram_capacity_ || offset + bytes < offset)
      throw OutOfBoundsError("MRAM access [" + std::to_string(offset) + ", +" +
                             std::to_string(bytes) + ") on dpu " + std::to_string(id_));
  }
  void check_wram(u64 offset, u64 bytes) const {
    // Valid accesses target the allocated prefix; the stack reserve and any
    // unallocated gap are off limits to kernel data paths.
    if (offset + bytes > wram_bump_ || offset + bytes < offset)
      throw OutOfBoundsError("WRAM access [" + std::to_string(offset) + ", +" +
                             std::to_string(bytes) + ") outside allocations on dpu " +
                             std::to_string(id_));
  }

 private:
  void ensure_mram(u64 bytes_needed) {
    u64 words = ceil_div(bytes_needed, 8);
    if (mram_.size() < words) {
      u64 grown = std::max(words, std::min(mram_.size() * 2, mram_capacity_ / 8));
      mram_.resize(std::max<u64>(grown, 1024), 0);
    }
  }

  u32 id_;
  u64 mram_capacity_;
  u64 wram_capacity_;
  std::vector<u64> mram_;  // grown on demand, 8-byte aligned backing
  std::vector<u64> wram_;
  u64 mram_bump_ = 0;
  u64 wram_bump_ = 0;
  u64 wram_limit_ = 0;
};

}  // namespace pimsim
