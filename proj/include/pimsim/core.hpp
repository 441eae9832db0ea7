#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace pimsim {

using u8 = std::uint8_t;
using u32 = std::uint32_t;
using u64 = std::uint64_t;
using i32 = std::int32_t;
using i64 = std::int64_t;

/// Base class for all simulation errors. `code()` is a stable identifier
/// (e.g. "scratchpad-exhausted") usable in tests and CLI diagnostics.
class SimError : public std::runtime_error {
 public:
  SimError(std::string code, const std::string& what)
      : std::runtime_error(code + ": " + what), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

struct ConfigError : SimError {
  explicit ConfigError(const std::string& w) : SimError("config-error", w) {}
};
struct InvalidSizeError : SimError {
  explicit InvalidSizeError(const std::string& w) : SimError("invalid-size", w) {}
};
struct UnalignedAccessError : SimError {
  explicit UnalignedAccessError(const std::string& w) : SimError("unaligned-access", w) {}
};
struct OutOfBoundsError : SimError {
  explicit OutOfBoundsError(const std::string& w) : SimError("out-of-bounds", w) {}
};
struct ScratchpadExhaustedError : SimError {
  explicit ScratchpadExhaustedError(const std::string& w) : SimError("scratchpad-exhausted", w) {}
};
struct DeadlockError : SimError {
  explicit DeadlockError(const std::string& w) : SimError("deadlock-detected", w) {}
};
struct SyncError : SimError {
  explicit SyncError(const std::string& w) : SimError("sync-error", w) {}
};
struct CapacityError : SimError {
  explicit CapacityError(const std::string& w) : SimError("capacity-overflow", w) {}
};
struct SkewError : SimError {
  explicit SkewError(const std::string& w) : SimError("skew-overflow", w) {}
};
struct InternalError : SimError {
  explicit InternalError(const std::string& w) : SimError("internal-bug", w) {}
};

inline constexpr u64 kKiB = 1024;
inline constexpr u64 kMiB = 1024 * 1024;

constexpr u64 align_up(u64 v, u64 a) { return (v + a - 1) / a * a; }
constexpr bool is_pow2(u64 v) { return v != 0 && (v & (v - 1)) == 0; }

constexpr u64 ceil_div(u64 a, u64 b) { return (a + b - 1) / b; }

/// bytes * 1e9 / per_second without intermediate overflow.
inline u64 ns_for_bytes(u64 bytes, u64 bytes_per_second) {
  return static_cast<u64>((static_cast<unsigned __int128>(bytes) * 1'000'000'000u) /
                          bytes_per_second);
}

inline u64 cycles_to_ns(u64 cycles, u64 clock_hz) {
  return static_cast<u64>((static_cast<unsigned __int128>(cycles) * 1'000'000'000u) / clock_hz);
}

/// splitmix64: deterministic across platforms, used for data generation and
/// randomized tests (std distributions are implementation-defined).
class Rng {
 public:
  explicit Rng(u64 seed) : state_(seed) {}

  u64 next() {
    u64 z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, n). n must be > 0.
  u64 below(u64 n) {
    // Lemire's multiply-shift with rejection.
    u64 x = next();
    unsigned __int128 m = static_cast<unsigned __int128>(x) * n;
    u64 lo = static_cast<u64>(m);
    if (lo < n) {
      u64 threshold = (0 - n) % n;
      while (lo < threshold) {
        x = next();
        m = static_cast<unsigned __int128>(x) * n;
        lo = static_cast<u64>(m);
      }
    }
    return static_cast<u64>(m >> 64);
  }

  u64 range(u64 lo, u64 hi) { return lo + below(hi - lo + 1); }

  i64 irange(i64 lo, i64 hi) { return lo + static_cast<i64>(below(static_cast<u64>(hi - lo + 1))); }

  /// Fork a derived, independent stream (stable regardless of call order).
  Rng fork(u64 salt) const {
    Rng r(state_ ^ (salt * 0xd1342543de82ef95ull + 0x2545f4914f6cdd1dull));
    r.next();
    return r;
  }

 private:
  u64 state_;
};

/// Runs fn(i) for i in [0, n). Items must be independent; results must not
/// depend on execution order (the simulator's determinism contract).
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  unsigned hw = std::thread::hardware_concurrency();
  if (hw <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  unsigned workers = static_cast<unsigned>(std::min<std::size_t>(hw, n));
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::exception_ptr error;
  std::mutex error_mu;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> g(error_mu);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace pimsim
