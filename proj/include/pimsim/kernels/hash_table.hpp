#pragma once

#include "pimsim/kernels/hash.hpp"

namespace pimsim::kern {

/// Linear-probing hash table living in scratchpad memory. Entries are a
/// 64-bit key followed by `payload_lanes` 64-bit payload words. Capacity is
/// a power of two; the empty slot sentinel is kEmptyKey. All probe and
/// mutation costs are appended to a caller-owned Bill, which the kernel
/// awaits batch-wise.
class SpmHashTable {
 public:
  enum class Outcome : u8 { kInserted, kFound, kFull };
  struct Ref {
    Outcome outcome;
    u32 slot;
  };

  static u64 bytes_for(u32 capacity, u32 payload_lanes) {
    return static_cast<u64>(capacity) * (1 + payload_lanes) * 8;
  }

  SpmHashTable(DpuState& dpu, u64 wram_off, u32 capacity, u32 payload_lanes,
               u32 max_fill = 0)
      : stride_(1 + payload_lanes),
        capacity_(capacity),
        max_fill_(max_fill == 0 ? capacity : max_fill),
        words_(dpu.wram_span<u64>(wram_off, static_cast<u64>(capacity) * (1 + payload_lanes))) {
    if (!is_pow2(capacity)) throw ConfigError("hash table capacity must be a power of two");
  }

  /// Writes the sentinel into every slot (one store per slot plus loop).
  void clear(Bill& bill) {
    for (u32 s = 0; s < capacity_; ++s)
      words_[static_cast<u64>(s) * stride_] = static_cast<u64>(kEmptyKey);
    count_ = 0;
    bill.add(InstrClass::kWramStore8, capacity_).add(InstrClass::kAdd32, capacity_);
  }

  /// Linear probe from the key's home slot: empty slot claims it, matching
  /// key reports kFound (caller combines payloads), kFull after probing the
  /// whole table or hitting the fill cap on a new key.
  Ref upsert(i64 key, Bill& bill) {
    u32 slot = home_slot(key, bill);
    for (u32 probes = 0; probes < capacity_; ++probes) {
      i64 k = key_at(slot);
      bill.add(InstrClass::kWramLoad8, 1).add(InstrClass::kCmp, 2).add(InstrClass::kBranch, 1);
      if (k == kEmptyKey) {
        if (count_ >= max_fill_) return {Outcome::kFull, slot};
        words_[static_cast<u64>(slot) * stride_] = static_cast<u64>(key);
        ++count_;
        bill.add(InstrClass::kWramStore8, 1).add(InstrClass::kAdd32, 1);
        return {Outcome::kInserted, slot};
      }
      if (k == key) return {Outcome::kFound, slot};
      slot = (slot + 1) & (capacity_ - 1);
      bill.add(InstrClass::kAdd32, 1);
    }
    return {Outcome::kFull, 0};
  }

  /// Probe sequence identical to upsert; miss at the first empty slot.
  std::optional<u32> find(i64 key, Bill& bill) const {
    u32 slot = home_slot(key, bill);
    for (u32 probes = 0; probes < capacity_; ++probes) {
      i64 k = key_at(slot);
      bill.add(InstrClass::kWramLoad8, 1).add(InstrClass::kCmp, 2).add(InstrClass::kBranch, 1);
      if (k == kEmptyKey) return std::nullopt;
      if (k == key) return slot;
      slot = (slot + 1) & (capacity_ - 1);
      bill.add(InstrClass::kAdd32, 1);
    }
    return std::nullopt;
  }

  i64 key_at(u32 slot) const {
    return static_cast<i64>(words_[static_cast<u64>(slot) * stride_]);
  }
  u64& payload(u32 slot, u32 lane) {
    return words_[static_cast<u64>(slot) * stride_ + 1 + lane];
  }
  u64 payload(u32 slot, u32 lane) const {
    return words_[static_cast<u64>(slot) * stride_ + 1 + lane];
  }

  u32 capacity() const { return capacity_; }
  u32 count() const { return count_; }
  u32 payload_lanes() const { return stride_ - 1; }
  u64 entry_words() const { return stride_; }

  /// Iterates occupied slots in slot order.
  template <typename Fn>
  void for_each(Fn&& fn) const {
    for (u32 s = 0; s < capacity_; ++s)
      if (key_at(s) != kEmptyKey) fn(s);
  }

 private:
  u32 home_slot(i64 key, Bill& bill) const {
    charge_hash(bill, 1);
    bill.add(InstrClass::kAdd32, 3);  // mask + slot address arithmetic
    return hash32(key) & (capacity_ - 1);
  }

  u32 stride_;
  u32 capacity_;
  u32 max_fill_;
  u32 count_ = 0;
  std::span<u64> words_;
};

}  // namespace pimsim::kern
