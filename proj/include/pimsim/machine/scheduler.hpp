#pragma once

#include <bit>
#include <coroutine>
#include <cstring>
#include <deque>
#include <functional>
#include <limits>
#include <optional>
#include <utility>

#include "pimsim/machine/dpu.hpp"
#include "pimsim/machine/metrics.hpp"

namespace pimsim {

/// Aggregated instruction charges for one kernel step. Kernels batch their
/// per-tile instruction accounting into one bill and await it once.
struct Bill {
  std::array<u64, kChargeClassCount> counts{};

  Bill& add(InstrClass c, u64 n) {
    counts.at(static_cast<std::size_t>(c)) += n;
    return *this;
  }
  u64 total_ops() const {
    u64 t = 0;
    for (u64 c : counts) t += c;
    return t;
  }
};

class DpuScheduler;

/// Coroutine type for tasklet programs. A program runs native C++ between
/// awaits; every await hands one step (charge, DMA, sync) to the scheduler.
struct TaskletProgram {
  struct promise_type {
    TaskletProgram get_return_object() {
      return TaskletProgram{std::coroutine_handle<promise_type>::from_promise(*this)};
    }
    std::suspend_always initial_suspend() noexcept { return {}; }
    std::suspend_always final_suspend() noexcept { return {}; }
    void return_void() {}
    void unhandled_exception() { error = std::current_exception(); }
    std::exception_ptr error;
  };
  using Handle = std::coroutine_handle<promise_type>;

  explicit TaskletProgram(Handle h) : handle(h) {}
  TaskletProgram(TaskletProgram&& o) noexcept : handle(std::exchange(o.handle, {})) {}
  TaskletProgram& operator=(TaskletProgram&& o) noexcept {
    if (handle) handle.destroy();
    handle = std::exchange(o.handle, {});
    return *this;
  }
  TaskletProgram(const TaskletProgram&) = delete;
  TaskletProgram& operator=(const TaskletProgram&) = delete;
  ~TaskletProgram() {
    if (handle) handle.destroy();
  }

  Handle handle;
};

/// Awaitable sub-program for composing kernels: a TaskletProgram can
/// co_await a SubTask, which itself awaits scheduler steps. Completion
/// resumes the awaiting coroutine via symmetric transfer.
struct SubTask {
  struct promise_type {
    SubTask get_return_object() {
      return SubTask{std::coroutine_handle<promise_type>::from_promise(*this)};
    }
    std::suspend_always initial_suspend() noexcept { return {}; }
    struct FinalAwait {
      bool await_ready() const noexcept { return false; }
      std::coroutine_handle<> await_suspend(std::coroutine_handle<promise_type> h) const noexcept {
        auto cont = h.promise().continuation;
        return cont ? cont : std::noop_coroutine();
      }
      void await_resume() const noexcept {}
    };
    FinalAwait final_suspend() noexcept { return {}; }
    void return_void() {}
    void unhandled_exception() { error = std::current_exception(); }
    std::coroutine_handle<> continuation;
    std::exception_ptr error;
  };
  using Handle = std::coroutine_handle<promise_type>;

  explicit SubTask(Handle h) : handle(h) {}
  SubTask(SubTask&& o) noexcept : handle(std::exchange(o.handle, {})) {}
  SubTask(const SubTask&) = delete;
  SubTask& operator=(const SubTask&) = delete;
  SubTask& operator=(SubTask&&) = delete;
  ~SubTask() {
    if (handle) handle.destroy();
  }

  bool await_ready() const noexcept { return false; }
  std::coroutine_handle<> await_suspend(std::coroutine_handle<> caller) const noexcept {
    handle.promise().continuation = caller;
    return handle;
  }
  void await_resume() const {
    if (handle.promise().error) std::rethrow_exception(handle.promise().error);
  }

  Handle handle;
};

namespace detail {

enum class StepKind : u8 { kCharge, kDmaRead, kDmaWrite, kLock, kUnlock, kNotify, kWaitFor };

struct StepRequest {
  StepKind kind = StepKind::kCharge;
  Bill bill;          // kCharge only
  u64 mram_addr = 0;  // DMA
  u64 wram_addr = 0;
  u64 bytes = 0;
  u32 peer = 0;  // mutex id or partner tasklet
};

}  // namespace detail

/// Per-tasklet interface handed to kernel programs. All methods returning
/// StepAwait must be co_awaited.
class TaskletCtx {
 public:
  struct StepAwait {
    TaskletCtx* ctx;
    detail::StepRequest req;
    bool skip;
    bool await_ready() const noexcept { return skip; }
    void await_suspend(std::coroutine_handle<> h) const;  // defined after DpuScheduler
    void await_resume() const noexcept {}
  };

  StepAwait charge(InstrClass c, u64 n) {
    Bill b;
    b.add(c, n);
    return charge(b);
  }
  StepAwait charge(const Bill& bill) {
    detail::StepRequest r;
    r.kind = detail::StepKind::kCharge;
    r.bill = bill;
    return {this, r, bill.total_ops() == 0};
  }
  StepAwait dma_read(u64 mram_addr, u64 wram_addr, u64 bytes) {
    return dma(detail::StepKind::kDmaRead, mram_addr, wram_addr, bytes);
  }
  StepAwait dma_write(u64 mram_addr, u64 wram_addr, u64 bytes) {
    return dma(detail::StepKind::kDmaWrite, mram_addr, wram_addr, bytes);
  }
  StepAwait lock(u32 mutex_id) { return sync(detail::StepKind::kLock, mutex_id); }
  StepAwait unlock(u32 mutex_id) { return sync(detail::StepKind::kUnlock, mutex_id); }
  /// Rendezvous with `partner`, this side notifying. Both sides proceed only
  /// after notify and wait_for have both been issued.
  StepAwait notify(u32 partner) { return sync(detail::StepKind::kNotify, partner); }
  StepAwait wait_for(u32 partner) { return sync(detail::StepKind::kWaitFor, partner); }

  DpuState& dpu() const { return *dpu_; }
  const MachineConfig& config() const { return *cfg_; }
  u32 id() const { return id_; }
  u32 tasklet_count() const { return count_; }

 private:
  friend class DpuScheduler;

  StepAwait dma(detail::StepKind k, u64 mram_addr, u64 wram_addr, u64 bytes) {
    detail::StepRequest r;
    r.kind = k;
    r.mram_addr = mram_addr;
    r.wram_addr = wram_addr;
    r.bytes = bytes;
    return {this, r, false};
  }
  StepAwait sync(detail::StepKind k, u32 peer) {
    detail::StepRequest r;
    r.kind = k;
    r.peer = peer;
    return {this, r, false};
  }

  DpuScheduler* sched_ = nullptr;
  DpuState* dpu_ = nullptr;
  const MachineConfig* cfg_ = nullptr;
  u32 id_ = 0;
  u32 count_ = 0;
};

using TaskletFn = std::function<TaskletProgram(TaskletCtx&)>;

/// Event loop for one DPU and one kernel launch. Dispatches at most one
/// instruction per cycle, round-robin over ready tasklets, instructions of
/// one tasklet at least dispatch_gap cycles apart. A single FIFO DMA engine
/// services all tasklets of the DPU, so concurrent DMA serializes.
class DpuScheduler {
 public:
  DpuScheduler(DpuState& dpu, const MachineConfig& cfg, u32 tasklet_count, bool fast_path = true)
      : dpu_(dpu), cfg_(cfg), count_(tasklet_count), fast_path_(fast_path && tasklet_count < kRing) {
    if (tasklet_count < 1 || tasklet_count > cfg.tasklet_max)
      throw ConfigError("tasklet_count must be in [1, " + std::to_string(cfg.tasklet_max) + "]");
    tasks_.reserve(count_);
    rendezvous_.assign(static_cast<std::size_t>(count_) * count_, Rendezvous{});
  }

  /// Debug hook: records every dispatch as (cycle, tasklet); bulk dispatches
  /// are expanded so fast- and slow-path traces are directly comparable.
  void set_trace(std::vector<std::pair<u64, u32>>* trace) { trace_ = trace; }

  KernelMetrics run(const TaskletFn& fn) {
    metrics_ = KernelMetrics{};
    metrics_.tasklets.resize(count_);
    for (u32 i = 0; i < count_; ++i) {
      Task& t = tasks_.emplace_back();
      t.ctx.sched_ = this;
      t.ctx.dpu_ = &dpu_;
      t.ctx.cfg_ = &cfg_;
      t.ctx.id_ = i;
      t.ctx.count_ = count_;
    }
    // Contexts are referenced by the coroutines; tasks_ was reserved above so
    // the addresses stay stable.
    for (u32 i = 0; i < count_; ++i) tasks_[i].prog.emplace(fn(tasks_[i].ctx));
    for (u32 i = 0; i < count_; ++i) resume(tasks_[i], 0);
    loop();
    metrics_.cycles = end_cycle_;
    return metrics_;
  }

 private:
  friend struct TaskletCtx::StepAwait;

  enum class State : u8 { kReady, kBlockedDma, kBlockedSync, kDone };

  struct RunPair {
    u8 cls;
    u64 left;
  };

  struct Task {
    std::optional<TaskletProgram> prog;
    std::coroutine_handle<> resume_point;  // leaf coroutine to resume next
    TaskletCtx ctx;
    State state = State::kReady;
    u64 next_ok = 0;  // earliest cycle of the next dispatch
    detail::StepRequest pending;
    bool has_pending = false;
    // Current dispatch stream: instruction runs per class, consumed in order.
    std::array<RunPair, kInstrClassCount> run{};
    u32 run_pairs = 0;
    u32 run_cursor = 0;
    u64 run_left = 0;
  };

  struct DmaJob {
    u64 end;
    u32 task;
  };

  struct Mutex {
    i32 holder = -1;
    std::deque<u32> waiters;
  };

  struct Rendezvous {
    i64 notify_cycle = -1;
    i64 wait_cycle = -1;
  };

  static constexpr u64 kInf = std::numeric_limits<u64>::max();

  // --- request intake --------------------------------------------------------

  void post(u32 id, const detail::StepRequest& req, std::coroutine_handle<> resume_point) {
    Task& t = tasks_[id];
    t.resume_point = resume_point;
    if (req.kind == detail::StepKind::kDmaRead || req.kind == detail::StepKind::kDmaWrite) {
      validate_dma(req);
    } else if (req.kind == detail::StepKind::kNotify || req.kind == detail::StepKind::kWaitFor) {
      if (req.peer >= count_ || req.peer == id)
        throw SyncError("handshake requires a distinct tasklet on the same DPU");
    } else if (req.kind == detail::StepKind::kCharge) {
      // checked below
    }
    t.pending = req;
    t.has_pending = true;
    t.run_pairs = 0;
    t.run_cursor = 0;
    t.run_left = 0;
    if (req.kind == detail::StepKind::kCharge) {
      for (std::size_t c = 0; c < kChargeClassCount; ++c) {
        u64 ops = req.bill.counts[c];
        if (ops == 0) continue;
        u64 instrs = ops * cfg_.instr_cost[c];
        t.run[t.run_pairs++] = {static_cast<u8>(c), instrs};
        t.run_left += instrs;
      }
      if (t.run_left == 0)
        throw InternalError("zero-instruction charge reached the scheduler");
    } else {
      // DMA issue and sync operations each dispatch one instruction.
      bool is_dma =
          req.kind == detail::StepKind::kDmaRead || req.kind == detail::StepKind::kDmaWrite;
      u8 cls = static_cast<u8>(is_dma ? InstrClass::kDmaIssue : InstrClass::kSync);
      t.run[t.run_pairs++] = {cls, 1};
      t.run_left = 1;
    }
  }

  void validate_dma(const detail::StepRequest& req) const {
    if (req.bytes == 0) throw InvalidSizeError("DMA of 0 bytes");
    if (req.mram_addr % 8 != 0 || req.bytes % 8 != 0 || req.wram_addr % 8 != 0)
      throw UnalignedAccessError("DMA addresses and size must be 8-byte multiples");
    dpu_.check_mram(req.mram_addr, req.bytes);
    dpu_.check_wram(req.wram_addr, req.bytes);
  }

  // --- event loop ------------------------------------------------------------

  void loop() {
    while (done_ < count_) {
      u64 c = next_dispatch_cycle();
      if (c == kInf) {
        if (!dma_q_.empty()) {
          wake_dma_until(dma_q_.front().end);
          continue;
        }
        report_deadlock();
      }
      if (!dma_q_.empty() && dma_q_.front().end <= c) {
        wake_dma_until(c);
        continue;  // a woken tasklet may dispatch earlier than c
      }
      dispatch(c);
    }
  }

  u64 next_dispatch_cycle() const {
    u64 best = kInf;
    for (const Task& t : tasks_)
      if (t.state == State::kReady) best = std::min(best, t.next_ok);
    if (best == kInf) return kInf;
    return std::max(best, last_dispatch_ + 1);
  }

  void wake_dma_until(u64 cycle) {
    while (!dma_q_.empty() && dma_q_.front().end <= cycle) {
      DmaJob j = dma_q_.front();
      dma_q_.pop_front();
      Task& t = tasks_[j.task];
      t.state = State::kReady;
      t.next_ok = std::max(t.next_ok, j.end);
      break_pattern();
      resume(t, j.end);
    }
  }

  [[noreturn]] void report_deadlock() const {
    u32 blocked = 0;
    for (const Task& t : tasks_)
      if (t.state == State::kBlockedSync) ++blocked;
    throw DeadlockError(std::to_string(blocked) +
                        " tasklet(s) blocked on sync with no runnable tasklet on dpu " +
                        std::to_string(dpu_.id()));
  }

  void dispatch(u64 cycle) {
    u32 chosen = count_;
    u32 ready_n = 0;
    for (u32 i = 1; i <= count_; ++i) {
      u32 id = (rr_cursor_ + i) % count_;
      Task& t = tasks_[id];
      if (t.state != State::kReady) continue;
      ++ready_n;
      if (chosen == count_ && t.next_ok <= cycle) chosen = id;
    }
    if (chosen == count_) throw InternalError("dispatch cycle with no eligible tasklet");
    Task& t = tasks_[chosen];

    RunPair& rp = t.run[t.run_cursor];
    account(chosen, static_cast<InstrClass>(rp.cls), 1);
    if (--rp.left == 0) ++t.run_cursor;
    --t.run_left;
    t.next_ok = cycle + cfg_.dispatch_gap;
    last_dispatch_ = cycle;
    end_cycle_ = std::max(end_cycle_, cycle + 1);
    rr_cursor_ = chosen;
    if (trace_) trace_->push_back({cycle, chosen});
    if (fast_path_) note_pattern(chosen, cycle, ready_n);
    if (t.run_left == 0) {
      break_pattern();  // any state change invalidates the periodic pattern
      complete_step(t, chosen, cycle);
    } else if (fast_path_) {
      try_bulk(ready_n);
    }
  }

  void account(u32 id, InstrClass cls, u64 n) {
    metrics_.instructions += n;
    metrics_.per_class[static_cast<std::size_t>(cls)] += n;
    metrics_.tasklets[id].instructions += n;
  }

  // --- steady-state bulk dispatch ---------------------------------------------
  // Once the last R dispatches (R = ready tasklets) repeat the previous R with
  // a fixed cycle shift, the schedule is periodic until the next run boundary
  // or DMA completion: the scheduler state (next_ok offsets, cursor) recurs
  // shifted by the period. Whole periods are applied in one step; results are
  // bit-identical to single-stepping (covered by a property test).

  void break_pattern() {
    streak_ = 0;
    pattern_barrier_ = ring_pos_;
  }

  void note_pattern(u32 id, u64 cycle, u32 ready_n) {
    u32 slot = static_cast<u32>(ring_pos_ % kRing);
    // The compared predecessor must lie after the last state change, so a
    // validated pattern window never spans a DMA wake or step boundary.
    bool have_prev = ring_pos_ >= ready_n && ring_pos_ - ready_n >= pattern_barrier_;
    if (have_prev) {
      u32 prev_slot = static_cast<u32>((ring_pos_ - ready_n) % kRing);
      if (ring_task_[prev_slot] == id) {
        u64 period = cycle - ring_cycle_[prev_slot];
        if (streak_ > 0 && period == streak_period_) {
          ++streak_;
        } else {
          streak_ = 1;
          streak_period_ = period;
        }
      } else {
        streak_ = 0;
      }
    } else {
      streak_ = 0;
    }
    ring_task_[slot] = id;
    ring_cycle_[slot] = cycle;
    ++ring_pos_;
  }

  void try_bulk(u32 ready_n) {
    if (streak_ < ready_n || streak_period_ == 0 || ready_n == 0) return;
    u32 ready_mask = 0;
    u64 min_left = kInf;
    for (u32 i = 0; i < count_; ++i) {
      const Task& t = tasks_[i];
      if (t.state == State::kReady) {
        ready_mask |= 1u << i;
        min_left = std::min(min_left, t.run_left);
      }
    }
    u32 window_mask = 0;
    for (u32 k = 0; k < ready_n; ++k) {
      u32 slot = static_cast<u32>((ring_pos_ - 1 - k) % kRing);
      window_mask |= 1u << ring_task_[slot];
    }
    if (window_mask != ready_mask ||
        static_cast<u32>(std::popcount(window_mask)) != ready_n)
      return;

    u64 rounds = min_left == 0 ? 0 : min_left - 1;  // keep every run unfinished
    u64 last_cycle = ring_cycle_[static_cast<u32>((ring_pos_ - 1) % kRing)];
    if (!dma_q_.empty()) {
      u64 wake = dma_q_.front().end;
      if (wake <= last_cycle + streak_period_) return;
      rounds = std::min(rounds, (wake - 1 - last_cycle) / streak_period_);
    }
    if (rounds == 0) return;

    if (trace_) {
      for (u64 r = 1; r <= rounds; ++r)
        for (u32 k = ready_n; k-- > 0;) {
          u32 slot = static_cast<u32>((ring_pos_ - 1 - k) % kRing);
          trace_->push_back({ring_cycle_[slot] + r * streak_period_, ring_task_[slot]});
        }
    }
    for (u32 k = 0; k < ready_n; ++k) {
      u32 slot = static_cast<u32>((ring_pos_ - 1 - k) % kRing);
      u32 id = ring_task_[slot];
      Task& t = tasks_[id];
      u64 last = ring_cycle_[slot] + rounds * streak_period_;
      bulk_consume(t, id, rounds);
      t.next_ok = last + cfg_.dispatch_gap;
      ring_cycle_[slot] = last;
    }
    last_dispatch_ += rounds * streak_period_;
    end_cycle_ = std::max(end_cycle_, last_dispatch_ + 1);
  }

  void bulk_consume(Task& t, u32 id, u64 n) {
    t.run_left -= n;
    while (n > 0) {
      RunPair& rp = t.run[t.run_cursor];
      u64 take = std::min(rp.left, n);
      account(id, static_cast<InstrClass>(rp.cls), take);
      rp.left -= take;
      n -= take;
      if (rp.left == 0) ++t.run_cursor;
    }
  }

  // --- step completion ---------------------------------------------------------

  void complete_step(Task& t, u32 id, u64 cycle) {
    detail::StepRequest req = t.pending;
    t.has_pending = false;
    switch (req.kind) {
      case detail::StepKind::kCharge:
        resume(t, cycle);
        break;
      case detail::StepKind::kDmaRead:
      case detail::StepKind::kDmaWrite: {
        bool read = req.kind == detail::StepKind::kDmaRead;
        if (read)
          std::memcpy(dpu_.wram_ptr(req.wram_addr, req.bytes),
                      dpu_.mram_ptr(req.mram_addr, req.bytes), req.bytes);
        else
          std::memcpy(dpu_.mram_ptr(req.mram_addr, req.bytes),
                      dpu_.wram_ptr(req.wram_addr, req.bytes), req.bytes);
        u64 start = std::max(cycle + 1, dma_engine_free_);
        u64 end = start + cfg_.dma_cycles(req.bytes);
        dma_engine_free_ = end;
        dma_q_.push_back({end, id});
        t.state = State::kBlockedDma;
        (read ? metrics_.dma_read_bytes : metrics_.dma_write_bytes) += req.bytes;
        auto& tm = metrics_.tasklets[id];
        (read ? tm.dma_read_bytes : tm.dma_write_bytes) += req.bytes;
        end_cycle_ = std::max(end_cycle_, end);
        break;
      }
      case detail::StepKind::kLock: {
        Mutex& m = mutex(req.peer);
        if (m.holder < 0) {
          m.holder = static_cast<i32>(id);
          resume(t, cycle);
        } else {
          m.waiters.push_back(id);
          t.state = State::kBlockedSync;
        }
        break;
      }
      case detail::StepKind::kUnlock: {
        Mutex& m = mutex(req.peer);
        if (m.holder != static_cast<i32>(id))
          throw SyncError("unlock of mutex " + std::to_string(req.peer) +
                          " not held by tasklet " + std::to_string(id));
        m.holder = -1;
        resume(t, cycle);
        if (m.holder < 0 && !m.waiters.empty()) {
          u32 next = m.waiters.front();
          m.waiters.pop_front();
          m.holder = static_cast<i32>(next);
          Task& w = tasks_[next];
          w.state = State::kReady;
          w.next_ok = std::max(w.next_ok, cycle + 1);
          end_cycle_ = std::max(end_cycle_, cycle + 1);
          resume(w, cycle + 1);
        }
        break;
      }
      case detail::StepKind::kNotify: {
        Rendezvous& rv = rendezvous_[static_cast<std::size_t>(id) * count_ + req.peer];
        if (rv.wait_cycle >= 0) {
          u64 wait_at = static_cast<u64>(rv.wait_cycle);
          rv = Rendezvous{};
          release_rendezvous(id, req.peer, cycle, wait_at);
        } else {
          rv.notify_cycle = static_cast<i64>(cycle);
          t.state = State::kBlockedSync;
        }
        break;
      }
      case detail::StepKind::kWaitFor: {
        Rendezvous& rv = rendezvous_[static_cast<std::size_t>(req.peer) * count_ + id];
        if (rv.notify_cycle >= 0) {
          u64 notify_at = static_cast<u64>(rv.notify_cycle);
          rv = Rendezvous{};
          release_rendezvous(req.peer, id, notify_at, cycle);
        } else {
          rv.wait_cycle = static_cast<i64>(cycle);
          t.state = State::kBlockedSync;
        }
        break;
      }
    }
  }

  /// Both sides proceed after the rendezvous at max(notify, wait) + 1.
  void release_rendezvous(u32 notifier, u32 waiter, u64 notify_cycle, u64 wait_cycle) {
    u64 r = std::max(notify_cycle, wait_cycle) + 1;
    end_cycle_ = std::max(end_cycle_, r);
    Task& n = tasks_[notifier];
    Task& w = tasks_[waiter];
    n.state = State::kReady;
    w.state = State::kReady;
    n.next_ok = std::max(notify_cycle + cfg_.dispatch_gap, r);
    w.next_ok = std::max(wait_cycle + cfg_.dispatch_gap, r);
    resume(n, r);
    resume(w, r);
  }

  Mutex& mutex(u32 id) {
    if (mutexes_.size() <= id) mutexes_.resize(id + 1);
    return mutexes_[id];
  }

  void resume(Task& t, u64 cycle) {
    if (!t.resume_point) t.resume_point = t.prog->handle;
    t.resume_point.resume();
    if (t.prog->handle.done()) {
      if (t.prog->handle.promise().error)
        std::rethrow_exception(t.prog->handle.promise().error);
      t.state = State::kDone;
      t.run_left = 0;
      ++done_;
      end_cycle_ = std::max(end_cycle_, cycle);
      return;
    }
    if (!t.has_pending) throw InternalError("tasklet suspended without posting a step");
    t.state = State::kReady;
  }

  DpuState& dpu_;
  const MachineConfig& cfg_;
  u32 count_;
  bool fast_path_;
  std::vector<Task> tasks_;
  std::deque<DmaJob> dma_q_;
  u64 dma_engine_free_ = 0;
  std::vector<Mutex> mutexes_;
  std::vector<Rendezvous> rendezvous_;
  u64 last_dispatch_ = static_cast<u64>(-1);  // +1 wraps to 0 for the first dispatch
  u64 end_cycle_ = 0;
  u32 rr_cursor_ = 0;
  u32 done_ = 0;
  KernelMetrics metrics_;

  // Pattern ring for the bulk fast path.
  static constexpr u32 kRing = 32;  // power of two > tasklet count
  std::array<u32, kRing> ring_task_{};
  std::array<u64, kRing> ring_cycle_{};
  u64 ring_pos_ = 0;
  u64 streak_ = 0;
  u64 streak_period_ = 0;
  u64 pattern_barrier_ = 0;
  std::vector<std::pair<u64, u32>>* trace_ = nullptr;
};

inline void TaskletCtx::StepAwait::await_suspend(std::coroutine_handle<> h) const {
  ctx->sched_->post(ctx->id_, req, h);
}

/// Runs one kernel on one DPU. `fn` is invoked once per tasklet; the programs
/// share the kernel's captured arguments and coordinate through WRAM, locks,
/// and handshakes.
inline KernelMetrics run_kernel(DpuState& dpu, const MachineConfig& cfg, u32 tasklet_count,
                                const TaskletFn& fn, bool fast_path = true) {
  DpuScheduler sched(dpu, cfg, tasklet_count, fast_path);
  return sched.run(fn);
}

}  // namespace pimsim
