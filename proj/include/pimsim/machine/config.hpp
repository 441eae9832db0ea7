#pragma once

#include <array>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include "pimsim/core.hpp"

namespace pimsim {

/// Instruction classes the cost model distinguishes. Logic ops (shift, xor,
/// and/or, not) dispatch like additions and are charged as Add32. The last
/// two classes are charged implicitly by the scheduler (one instruction per
/// DMA issue / sync operation) and cannot be passed to charge().
enum class InstrClass : u8 {
  kAdd32 = 0,
  kAdd64,
  kMul32,
  kDiv32,
  kCmp,
  kWramLoad8,
  kWramStore8,
  kBranch,
  kDmaIssue,
  kSync,
};
inline constexpr std::size_t kChargeClassCount = 8;
inline constexpr std::size_t kInstrClassCount = 10;

inline const char* instr_class_name(InstrClass c) {
  static constexpr const char* kNames[kInstrClassCount] = {
      "add32", "add64",      "mul32",       "div32",  "cmp",
      "wram_load8", "wram_store8", "branch", "dma_issue", "sync"};
  return kNames[static_cast<std::size_t>(c)];
}

/// Host-side cost parameters. All integral so timelines are exactly
/// reproducible. Values are calibration knobs, not hardware measurements.
struct HostCostModel {
  u64 rank_bw_bytes_per_s = 2'500'000'000;   // host<->PIM copies, per rank
  u64 memcpy_bw_bytes_per_s = 10'000'000'000;  // host-side reorder
  u64 alloc_base_ns = 100'000;               // naive allocator
  u64 alloc_per_byte_ps = 60;
  u64 pooled_alloc_base_ns = 5'000;          // pool allocator
  u64 pooled_per_byte_ps = 6;
  u32 host_threads = 4;                      // concurrently serviceable ranks
  u64 sg_fragment_overhead_ns = 200;         // per scatter/gather fragment

  u64 alloc_ns(u64 bytes, bool pooled) const {
    u64 base = pooled ? pooled_alloc_base_ns : alloc_base_ns;
    u64 per = pooled ? pooled_per_byte_ps : alloc_per_byte_ps;
    return base + static_cast<u64>((static_cast<unsigned __int128>(bytes) * per) / 1000u);
  }

  void validate() const {
    if (rank_bw_bytes_per_s == 0 || memcpy_bw_bytes_per_s == 0)
      throw ConfigError("host bandwidths must be positive");
    if (host_threads == 0) throw ConfigError("host_threads must be positive");
    if (pooled_alloc_base_ns >= alloc_base_ns || pooled_per_byte_ps >= alloc_per_byte_ps)
      throw ConfigError("pooled allocation costs must be strictly below naive costs");
  }
};

/// All simulated-hardware parameters of the DPU set.
struct MachineConfig {
  u32 dpu_count = 32;
  u32 dpus_per_rank = 64;  // dpu_count < dpus_per_rank means one partial rank
  u64 clock_hz = 350'000'000;
  u64 mram_bytes = 64 * kMiB;
  u64 wram_bytes = 64 * kKiB;
  u32 dispatch_gap = 11;
  u32 tasklet_max = 24;
  u64 stack_reserve_bytes = 2 * kKiB;  // per launched tasklet

  // MRAM DMA latency: beta + ceil(alpha * bytes), alpha in milli-cycles/byte.
  u64 dma_alpha_milli = 545;
  u64 dma_beta = 24;

  std::array<u32, kChargeClassCount> instr_cost = {
      1,   // add32
      2,   // add64 (two 32-bit additions)
      32,  // mul32 (software shift-add emulation, worst case)
      64,  // div32
      1,   // cmp
      1,   // wram_load8
      1,   // wram_store8
      1,   // branch
  };

  HostCostModel host;

  u32 cost(InstrClass c) const { return instr_cost[static_cast<std::size_t>(c)]; }

  u64 dma_cycles(u64 bytes) const {
    return dma_beta + ceil_div(bytes * dma_alpha_milli, 1000);
  }

  u32 rank_count() const { return static_cast<u32>(ceil_div(dpu_count, dpus_per_rank)); }
  u32 rank_of(u32 dpu_id) const { return dpu_id / dpus_per_rank; }

  void validate() const {
    if (dpu_count == 0) throw ConfigError("dpu_count must be positive");
    if (dpus_per_rank == 0) throw ConfigError("dpus_per_rank must be positive");
    if (dpu_count > dpus_per_rank && dpu_count % dpus_per_rank != 0)
      throw ConfigError("dpu_count must be a multiple of dpus_per_rank");
    if (clock_hz == 0) throw ConfigError("clock_hz must be positive");
    if (mram_bytes % 8 != 0 || wram_bytes % 8 != 0)
      throw ConfigError("mram_bytes and wram_bytes must be multiples of 8");
    if (dispatch_gap < 1) throw ConfigError("dispatch_gap must be >= 1");
    if (dma_alpha_milli == 0) throw ConfigError("dma_alpha must be > 0");
    if (tasklet_max < 1) throw ConfigError("tasklet_max must be >= 1");
    for (u32 c : instr_cost)
      if (c == 0) throw ConfigError("instruction costs must be >= 1");
    host.validate();
  }
};

namespace detail {

inline u64 parse_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    u64 r = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw ConfigError("bad integer for key '" + key + "': " + v);
  }
}

/// Parses a decimal with up to 3 fraction digits into milli-units.
inline u64 parse_milli(const std::string& key, const std::string& v) {
  auto dot = v.find('.');
  std::string whole = dot == std::string::npos ? v : v.substr(0, dot);
  std::string frac = dot == std::string::npos ? "" : v.substr(dot + 1);
  if (frac.size() > 3) throw ConfigError("key '" + key + "': at most 3 decimal places");
  while (frac.size() < 3) frac.push_back('0');
  u64 w = whole.empty() ? 0 : parse_u64(key, whole);
  u64 f = frac.empty() ? 0 : parse_u64(key, frac);
  return w * 1000 + f;
}

}  // namespace detail

/// Applies `key = value` pairs onto a config. Unknown keys are errors so
/// typos do not silently fall back to defaults.
inline void apply_config_entry(MachineConfig& cfg, const std::string& key,
                               const std::string& value) {
  using detail::parse_milli;
  using detail::parse_u64;
  if (key == "dpu_count") cfg.dpu_count = static_cast<u32>(parse_u64(key, value));
  else if (key == "dpus_per_rank") cfg.dpus_per_rank = static_cast<u32>(parse_u64(key, value));
  else if (key == "clock_hz") cfg.clock_hz = parse_u64(key, value);
  else if (key == "mram_bytes") cfg.mram_bytes = parse_u64(key, value);
  else if (key == "wram_bytes") cfg.wram_bytes = parse_u64(key, value);
  else if (key == "dispatch_gap") cfg.dispatch_gap = static_cast<u32>(parse_u64(key, value));
  else if (key == "tasklet_max") cfg.tasklet_max = static_cast<u32>(parse_u64(key, value));
  else if (key == "stack_reserve_bytes") cfg.stack_reserve_bytes = parse_u64(key, value);
  else if (key == "dma_alpha") cfg.dma_alpha_milli = parse_milli(key, value);
  else if (key == "dma_beta") cfg.dma_beta = parse_u64(key, value);
  else if (key == "host.rank_bw") cfg.host.rank_bw_bytes_per_s = parse_u64(key, value);
  else if (key == "host.memcpy_bw") cfg.host.memcpy_bw_bytes_per_s = parse_u64(key, value);
  else if (key == "host.alloc_base_ns") cfg.host.alloc_base_ns = parse_u64(key, value);
  else if (key == "host.alloc_per_byte_ps") cfg.host.alloc_per_byte_ps = parse_u64(key, value);
  else if (key == "host.pooled_alloc_base_ns") cfg.host.pooled_alloc_base_ns = parse_u64(key, value);
  else if (key == "host.pooled_per_byte_ps") cfg.host.pooled_per_byte_ps = parse_u64(key, value);
  else if (key == "host.threads") cfg.host.host_threads = static_cast<u32>(parse_u64(key, value));
  else if (key == "host.sg_fragment_overhead_ns")
    cfg.host.sg_fragment_overhead_ns = parse_u64(key, value);
  else {
    bool matched = false;
    for (std::size_t i = 0; i < kChargeClassCount; ++i) {
      if (key == std::string("instr.") + instr_class_name(static_cast<InstrClass>(i))) {
        cfg.instr_cost[i] = static_cast<u32>(parse_u64(key, value));
        matched = true;
        break;
      }
    }
    if (!matched) throw ConfigError("unknown config key: " + key);
  }
}

inline MachineConfig parse_config(std::istream& in) {
  MachineConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    auto trim = [](std::string s) {
      auto b = s.find_first_not_of(" \t\r");
      auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    apply_config_entry(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  cfg.validate();
  return cfg;
}

inline MachineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  return parse_config(in);
}

inline void write_config(const MachineConfig& cfg, std::ostream& out) {
  out << "# pimsim machine config\n";
  out << "dpu_count = " << cfg.dpu_count << "\n";
  out << "dpus_per_rank = " << cfg.dpus_per_rank << "\n";
  out << "clock_hz = " << cfg.clock_hz << "\n";
  out << "mram_bytes = " << cfg.mram_bytes << "\n";
  out << "wram_bytes = " << cfg.wram_bytes << "\n";
  out << "dispatch_gap = " << cfg.dispatch_gap << "\n";
  out << "tasklet_max = " << cfg.tasklet_max << "\n";
  out << "stack_reserve_bytes = " << cfg.stack_reserve_bytes << "\n";
  out << "dma_alpha = " << cfg.dma_alpha_milli / 1000 << "." << std::setw(3) << std::setfill('0')
      << cfg.dma_alpha_milli % 1000 << std::setfill(' ') << "\n";
  out << "dma_beta = " << cfg.dma_beta << "\n";
  for (std::size_t i = 0; i < kChargeClassCount; ++i)
    out << "instr." << instr_class_name(static_cast<InstrClass>(i)) << " = " << cfg.instr_cost[i]
        << "\n";
  out << "host.rank_bw = " << cfg.host.rank_bw_bytes_per_s << "\n";
  out << "host.memcpy_bw = " << cfg.host.memcpy_bw_bytes_per_s << "\n";
  out << "host.alloc_base_ns = " << cfg.host.alloc_base_ns << "\n";
  out << "host.alloc_per_byte_ps = " << cfg.host.alloc_per_byte_ps << "\n";
  out << "host.pooled_alloc_base_ns = " << cfg.host.pooled_alloc_base_ns << "\n";
  out << "host.pooled_per_byte_ps = " << cfg.host.pooled_per_byte_ps << "\n";
  out << "host.threads = " << cfg.host.host_threads << "\n";
  out << "host.sg_fragment_overhead_ns = " << cfg.host.sg_fragment_overhead_ns << "\n";
}

}  // namespace pimsim
