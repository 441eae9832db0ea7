#pragma once

#include "pimsim/kernels/keyvalue.hpp"

namespace pimsim::kern {

/// 32-bit mixer over the 64-bit key, composed of shift, add/subtract, and
/// xor only (no multiply or divide). Fold the halves, then a Wang-style
/// avalanche; constants fixed for reproducibility.
constexpr u32 hash32(i64 key) {
  u64 k = static_cast<u64>(key);
  u32 x = static_cast<u32>(k ^ (k >> 32));  // 2 ops: shift, xor
  x = ~x + (x << 15);                       // 3 ops
  x ^= x >> 12;                             // 2 ops
  x += x << 2;                              // 2 ops
  x ^= x >> 4;                              // 2 ops
  x = x + (x << 3) + (x << 11);             // 4 ops
  x ^= x >> 16;                             // 2 ops
  return x;
}

/// Instruction count of hash32: 17 single-cycle ALU ops (charged as add32;
/// shifts and xors dispatch like additions), zero mul32/div32.
inline constexpr u64 kHash32Ops = 17;

inline Bill& charge_hash(Bill& b, u64 n) { return b.add(InstrClass::kAdd32, kHash32Ops * n); }

/// Bucket index for single-level hash partitioning: low bits.
constexpr u32 hash_bucket(i64 key, u32 buckets) { return hash32(key) & (buckets - 1); }

/// Bit field extraction for multi-pass radix partitioning: consumes the hash
/// top-down so pass p refines the grouping of passes 0..p-1.
constexpr u32 hash_field(i64 key, u32 consumed_bits, u32 bits) {
  u32 h = hash32(key);
  return (h >> (32 - consumed_bits - bits)) & ((1u << bits) - 1);
}

}  // namespace pimsim::kern
