/*
 * Copyright 2026 The pgtune authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "pgtune/transport.hpp"

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include "pgtune/error.hpp"

namespace pgtune {
namespace detail {

namespace {

// Thrown into rank programs to unwind them when the run is being torn down
// (deadlock or another rank's failure).  Never escapes run_spmd.
struct AbortRun {};

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

class Engine {
 public:
  Engine(int p, const CostModel& m, Mode mode) : p_(p), model_(m), mode_(mode) {}
  virtual ~Engine() = default;

  int nprocs() const noexcept { return p_; }
  const CostModel& model() const noexcept { return model_; }
  Mode mode() const noexcept { return mode_; }

  virtual void send(int me, int dst, std::span<const std::byte> payload) = 0;
  virtual std::vector<std::byte> recv(int me, int src) = 0;
  virtual Nanos now(int me) = 0;
  virtual void charge(int me, Nanos cost) = 0;
  virtual std::vector<std::int64_t> fence(int me, std::int64_t value,
                                          bool align) = 0;
  virtual RunStats run(const RankProgram& program) = 0;

 protected:
  // Only the Engine base is befriended by RankHandle; derived engines mint
  // handles through here.
  RankHandle make_handle(int rank) { return RankHandle(this, rank); }

  void check_peer(int peer, const char* what) const {
    if (peer < 0 || peer >= p_) {
      std::ostringstream os;
      os << what << " peer " << peer << " outside group of size " << p_;
      fail(Errc::UnknownRank, os.str());
    }
  }

  int p_;
  CostModel model_;
  Mode mode_;
};

// ---------------------------------------------------------------------------
// Virtual-time engine.
//
// Rank programs live on their own threads purely so that a blocking recv has
// a stack to sleep on; execution is logically single-threaded.  Exactly one
// rank runs at any instant, and the coordinator (the run_spmd caller thread)
// decides every resumption with deterministic rules:
//
//   * runnable ranks are scheduled round-robin by rank id;
//   * a rank blocked on recv becomes runnable only when its message is
//     already in the mailbox, and among satisfiable ranks the one whose
//     head message has the smallest arrival time (ties: lowest rank) is
//     woken first — the globally minimal feasible event;
//   * a fence fires only when every live rank has entered it.
//
// Together with jitter that is a pure per-message hash, the full run is a
// deterministic function of (p, model, program): identical clocks, message
// orders and results on every execution.
// ---------------------------------------------------------------------------
class VirtualEngine final : public Engine {
  enum class St { Runnable, Running, BlockedRecv, InFence, Finished };

  struct Msg {
    std::vector<std::byte> bytes;
    Nanos arrival;
  };

  struct Rank {
    St status = St::Runnable;
    int wait_src = -1;
    Nanos clock = 0;
    Nanos port_free = 0;
    std::exception_ptr error;
    std::condition_variable cv;
  };

 public:
  VirtualEngine(int p, const CostModel& m)
      : Engine(p, m, Mode::Virtual),
        ranks_(static_cast<std::size_t>(p)),
        boxes_(static_cast<std::size_t>(p) * static_cast<std::size_t>(p)),
        ordinals_(boxes_.size(), 0),
        fence_vals_(static_cast<std::size_t>(p), 0),
        fence_result_(static_cast<std::size_t>(p), 0) {}

  void send(int me, int dst, std::span<const std::byte> payload) override {
    check_peer(dst, "send");
    std::lock_guard lk(mu_);
    if (aborting_) throw AbortRun{};
    Rank& r = ranks_[static_cast<std::size_t>(me)];
    const std::size_t pair =
        static_cast<std::size_t>(me) * static_cast<std::size_t>(p_) +
        static_cast<std::size_t>(dst);
    double u = 0.0;
    if (model_.jitter_fraction > 0.0)
      u = jitter_unit(model_.seed, me, dst, ordinals_[pair]);
    ordinals_[pair]++;
    const Nanos cost = hop_cost_jittered_ns(
        model_, static_cast<std::int64_t>(payload.size()), u);
    const Nanos depart = std::max(r.clock, r.port_free);
    const Nanos arrival = depart + cost;
    r.port_free = arrival;
    boxes_[pair].push_back(
        Msg{std::vector<std::byte>(payload.begin(), payload.end()), arrival});
    ++messages_;
  }

  std::vector<std::byte> recv(int me, int src) override {
    check_peer(src, "recv");
    std::unique_lock lk(mu_);
    Rank& r = ranks_[static_cast<std::size_t>(me)];
    auto& box = boxes_[static_cast<std::size_t>(src) *
                           static_cast<std::size_t>(p_) +
                       static_cast<std::size_t>(me)];
    while (box.empty()) {
      if (aborting_) throw AbortRun{};
      r.status = St::BlockedRecv;
      r.wait_src = src;
      coord_cv_.notify_one();
      r.cv.wait(lk, [&] { return r.status == St::Running || aborting_; });
      if (aborting_) throw AbortRun{};
    }
    Msg m = std::move(box.front());
    box.pop_front();
    r.clock = std::max(r.clock, m.arrival);
    return std::move(m.bytes);
  }

  Nanos now(int me) override {
    std::lock_guard lk(mu_);
    return ranks_[static_cast<std::size_t>(me)].clock;
  }

  void charge(int me, Nanos cost) override {
    std::lock_guard lk(mu_);
    ranks_[static_cast<std::size_t>(me)].clock += cost;
  }

  std::vector<std::int64_t> fence(int me, std::int64_t value,
                                  bool align) override {
    std::unique_lock lk(mu_);
    if (aborting_) throw AbortRun{};
    Rank& r = ranks_[static_cast<std::size_t>(me)];
    fence_vals_[static_cast<std::size_t>(me)] = value;
    fence_align_ |= align;
    r.status = St::InFence;
    coord_cv_.notify_one();
    r.cv.wait(lk, [&] { return r.status == St::Running || aborting_; });
    if (aborting_) throw AbortRun{};
    return fence_result_;
  }

  RunStats run(const RankProgram& program) override {
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(p_));
    for (int i = 0; i < p_; ++i)
      threads.emplace_back([this, i, &program] { rank_main(i, program); });

    coordinate();

    for (auto& t : threads) t.join();

    if (abort_error_) rethrow_first_error();

    RunStats stats;
    stats.elapsed_ns.reserve(static_cast<std::size_t>(p_));
    for (const Rank& r : ranks_) stats.elapsed_ns.push_back(r.clock);
    stats.messages_sent = messages_;
    return stats;
  }

 private:
  void rank_main(int me, const RankProgram& program) {
    Rank& r = ranks_[static_cast<std::size_t>(me)];
    {
      std::unique_lock lk(mu_);
      r.cv.wait(lk, [&] { return r.status == St::Running || aborting_; });
      if (aborting_) {
        r.status = St::Finished;
        coord_cv_.notify_one();
        return;
      }
    }
    try {
      RankHandle handle = make_handle(me);
      program(handle);
    } catch (const AbortRun&) {
      // run torn down; nothing to record
    } catch (...) {
      std::lock_guard lk(mu_);
      r.error = std::current_exception();
      if (first_error_rank_ < 0) first_error_rank_ = me;
    }
    std::lock_guard lk(mu_);
    r.status = St::Finished;
    coord_cv_.notify_one();
  }

  void coordinate() {
    std::unique_lock lk(mu_);
    for (;;) {
      if (first_error_rank_ >= 0) {
        abort_error_ = ranks_[static_cast<std::size_t>(first_error_rank_)].error;
        break;
      }

      // Schedule the next runnable rank, round-robin.
      int pick = -1;
      for (int k = 0; k < p_; ++k) {
        const int cand = (rr_ + k) % p_;
        if (ranks_[static_cast<std::size_t>(cand)].status == St::Runnable) {
          pick = cand;
          break;
        }
      }
      if (pick >= 0) {
        rr_ = (pick + 1) % p_;
        Rank& r = ranks_[static_cast<std::size_t>(pick)];
        r.status = St::Running;
        r.cv.notify_one();
        coord_cv_.wait(lk, [&] { return r.status != St::Running; });
        continue;
      }

      int finished = 0, infence = 0;
      for (const Rank& r : ranks_) {
        finished += r.status == St::Finished;
        infence += r.status == St::InFence;
      }
      if (finished == p_) break;

      if (infence > 0 && infence + finished == p_) {
        if (finished > 0) {
          begin_abort(deadlock_error(
              "collective fence entered while some ranks already finished"));
          break;
        }
        fire_fence();
        continue;
      }

      // Wake the blocked receiver whose pending message arrives earliest.
      int best = -1;
      Nanos best_arrival = 0;
      for (int i = 0; i < p_; ++i) {
        const Rank& r = ranks_[static_cast<std::size_t>(i)];
        if (r.status != St::BlockedRecv) continue;
        const auto& box = boxes_[static_cast<std::size_t>(r.wait_src) *
                                     static_cast<std::size_t>(p_) +
                                 static_cast<std::size_t>(i)];
        if (box.empty()) continue;
        if (best < 0 || box.front().arrival < best_arrival) {
          best = i;
          best_arrival = box.front().arrival;
        }
      }
      if (best >= 0) {
        ranks_[static_cast<std::size_t>(best)].status = St::Runnable;
        continue;
      }

      begin_abort(blocked_deadlock_error());
      break;
    }

    // Tear down: wake every parked rank so its thread can unwind and finish.
    if (abort_error_ || first_error_rank_ >= 0) {
      if (!abort_error_ && first_error_rank_ >= 0)
        abort_error_ = ranks_[static_cast<std::size_t>(first_error_rank_)].error;
      aborting_ = true;
      for (Rank& r : ranks_) r.cv.notify_one();
      coord_cv_.wait(lk, [&] {
        return std::all_of(ranks_.begin(), ranks_.end(), [](const Rank& r) {
          return r.status == St::Finished;
        });
      });
    }
  }

  void begin_abort(std::exception_ptr error) { abort_error_ = error; }

  std::exception_ptr deadlock_error(const std::string& msg) {
    return std::make_exception_ptr(Error(Errc::Deadlock, msg));
  }

  std::exception_ptr blocked_deadlock_error() {
    std::ostringstream os;
    os << "no rank can make progress;";
    for (int i = 0; i < p_; ++i) {
      const Rank& r = ranks_[static_cast<std::size_t>(i)];
      if (r.status == St::BlockedRecv)
        os << " rank " << i << " awaits " << r.wait_src << ";";
      else if (r.status == St::InFence)
        os << " rank " << i << " in fence;";
    }
    return deadlock_error(os.str());
  }

  void fire_fence() {
    fence_result_ = fence_vals_;
    if (fence_align_) {
      Nanos maxc = 0;
      for (const Rank& r : ranks_) maxc = std::max(maxc, r.clock);
      for (Rank& r : ranks_) r.clock = maxc;
    }
    fence_align_ = false;
    for (Rank& r : ranks_) r.status = St::Runnable;
  }

  void rethrow_first_error() {
    try {
      std::rethrow_exception(abort_error_);
    } catch (const Error&) {
      throw;
    } catch (const std::exception& e) {
      std::ostringstream os;
      os << "rank " << first_error_rank_ << " failed: " << e.what();
      fail(Errc::RankPanic, os.str());
    } catch (...) {
      std::ostringstream os;
      os << "rank " << first_error_rank_ << " failed with a foreign exception";
      fail(Errc::RankPanic, os.str());
    }
  }

  std::mutex mu_;
  std::condition_variable coord_cv_;
  std::vector<Rank> ranks_;
  std::vector<std::deque<Msg>> boxes_;  // indexed src * p + dst
  std::vector<std::uint64_t> ordinals_;
  std::uint64_t messages_ = 0;
  int rr_ = 0;
  bool aborting_ = false;
  int first_error_rank_ = -1;
  std::exception_ptr abort_error_;
  bool fence_align_ = false;
  std::vector<std::int64_t> fence_vals_;
  std::vector<std::int64_t> fence_result_;
};

// ---------------------------------------------------------------------------
// Wallclock engine: one free-running OS thread per rank, mailboxes guarded
// by a single mutex, latencies measured on the monotonic clock.  Virtual
// arrival stamps do not exist here; FIFO order per pair is preserved by the
// queues themselves.  Deadlock is declared when every live rank is parked
// (recv or fence) and no awaited mailbox has data.
// ---------------------------------------------------------------------------
class WallclockEngine final : public Engine {
 public:
  WallclockEngine(int p, const CostModel& m)
      : Engine(p, m, Mode::Wallclock),
        boxes_(static_cast<std::size_t>(p) * static_cast<std::size_t>(p)),
        rank_cv_(static_cast<std::size_t>(p)),
        wait_src_(static_cast<std::size_t>(p), -1),
        fence_vals_(static_cast<std::size_t>(p), 0),
        fence_result_(static_cast<std::size_t>(p), 0),
        elapsed_(static_cast<std::size_t>(p), 0),
        errors_(static_cast<std::size_t>(p)) {}

  void send(int me, int dst, std::span<const std::byte> payload) override {
    check_peer(dst, "send");
    std::lock_guard lk(mu_);
    if (aborting_) throw AbortRun{};
    boxes_[static_cast<std::size_t>(me) * static_cast<std::size_t>(p_) +
           static_cast<std::size_t>(dst)]
        .emplace_back(payload.begin(), payload.end());
    ++messages_;
    rank_cv_[static_cast<std::size_t>(dst)].notify_all();
  }

  std::vector<std::byte> recv(int me, int src) override {
    check_peer(src, "recv");
    std::unique_lock lk(mu_);
    auto& box = boxes_[static_cast<std::size_t>(src) *
                           static_cast<std::size_t>(p_) +
                       static_cast<std::size_t>(me)];
    if (box.empty()) {
      ++recv_waiting_;
      wait_src_[static_cast<std::size_t>(me)] = src;
      maybe_declare_deadlock();
      rank_cv_[static_cast<std::size_t>(me)].wait(
          lk, [&] { return !box.empty() || aborting_; });
      --recv_waiting_;
      wait_src_[static_cast<std::size_t>(me)] = -1;
    }
    if (aborting_) throw AbortRun{};
    std::vector<std::byte> bytes = std::move(box.front());
    box.pop_front();
    return bytes;
  }

  Nanos now(int me) override {
    (void)me;
    return std::chrono::duration_cast<std::chrono::nanoseconds>(
               std::chrono::steady_clock::now() - t0_)
        .count();
  }

  void charge(int me, Nanos cost) override {
    // Real compute already takes real time in wallclock mode.
    (void)me;
    (void)cost;
  }

  std::vector<std::int64_t> fence(int me, std::int64_t value,
                                  bool align) override {
    (void)align;
    std::unique_lock lk(mu_);
    if (aborting_) throw AbortRun{};
    fence_vals_[static_cast<std::size_t>(me)] = value;
    const std::uint64_t my_gen = fence_gen_;
    ++fence_entered_;
    if (fence_entered_ == p_ - finished_) {
      if (finished_ > 0) {
        declare_abort(std::make_exception_ptr(Error(
            Errc::Deadlock,
            "collective fence entered while some ranks already finished")));
        throw AbortRun{};
      }
      fence_result_ = fence_vals_;
      ++fence_gen_;
      fence_entered_ = 0;
      fence_cv_.notify_all();
    } else {
      maybe_declare_deadlock();
      fence_cv_.wait(lk, [&] { return fence_gen_ != my_gen || aborting_; });
      if (aborting_) throw AbortRun{};
    }
    return fence_result_;
  }

  RunStats run(const RankProgram& program) override {
    t0_ = std::chrono::steady_clock::now();
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(p_));
    for (int i = 0; i < p_; ++i)
      threads.emplace_back([this, i, &program] { rank_main(i, program); });
    for (auto& t : threads) t.join();

    if (abort_error_) rethrow_first_error();

    RunStats stats;
    stats.elapsed_ns = elapsed_;
    stats.messages_sent = messages_;
    return stats;
  }

 private:
  void rank_main(int me, const RankProgram& program) {
    const auto start = std::chrono::steady_clock::now();
    try {
      RankHandle handle = make_handle(me);
      program(handle);
    } catch (const AbortRun&) {
    } catch (...) {
      std::lock_guard lk(mu_);
      errors_[static_cast<std::size_t>(me)] = std::current_exception();
      if (first_error_rank_ < 0) first_error_rank_ = me;
      declare_abort(errors_[static_cast<std::size_t>(me)]);
    }
    elapsed_[static_cast<std::size_t>(me)] =
        std::chrono::duration_cast<std::chrono::nanoseconds>(
            std::chrono::steady_clock::now() - start)
            .count();
    std::lock_guard lk(mu_);
    ++finished_;
    // A finishing rank can complete a pending deadlock (peers waiting on it)
    // or leave a fence unfillable; re-examine both.
    if (fence_entered_ > 0 && fence_entered_ == p_ - finished_) {
      declare_abort(std::make_exception_ptr(Error(
          Errc::Deadlock,
          "collective fence entered while some ranks already finished")));
    }
    maybe_declare_deadlock();
  }

  // Caller holds mu_.  Declares deadlock when every live rank is parked and
  // no awaited mailbox holds a message (a parked rank with data is merely
  // waking up, not stuck).
  void maybe_declare_deadlock() {
    if (aborting_) return;
    if (recv_waiting_ + fence_entered_ + finished_ != p_) return;
    if (recv_waiting_ == 0) return;  // pure fence case handled at entry
    for (int i = 0; i < p_; ++i) {
      const int src = wait_src_[static_cast<std::size_t>(i)];
      if (src < 0) continue;
      if (!boxes_[static_cast<std::size_t>(src) * static_cast<std::size_t>(p_) +
                  static_cast<std::size_t>(i)]
               .empty())
        return;
    }
    std::ostringstream os;
    os << "no rank can make progress;";
    for (int i = 0; i < p_; ++i)
      if (wait_src_[static_cast<std::size_t>(i)] >= 0)
        os << " rank " << i << " awaits "
           << wait_src_[static_cast<std::size_t>(i)] << ";";
    declare_abort(std::make_exception_ptr(Error(Errc::Deadlock, os.str())));
  }

  // Caller holds mu_.
  void declare_abort(std::exception_ptr error) {
    if (aborting_) return;
    aborting_ = true;
    if (!abort_error_) abort_error_ = error;
    for (auto& cv : rank_cv_) cv.notify_all();
    fence_cv_.notify_all();
  }

  void rethrow_first_error() {
    try {
      std::rethrow_exception(abort_error_);
    } catch (const Error&) {
      throw;
    } catch (const std::exception& e) {
      std::ostringstream os;
      os << "rank " << first_error_rank_ << " failed: " << e.what();
      fail(Errc::RankPanic, os.str());
    } catch (...) {
      std::ostringstream os;
      os << "rank " << first_error_rank_ << " failed with a foreign exception";
      fail(Errc::RankPanic, os.str());
    }
  }

  std::mutex mu_;
  std::vector<std::deque<std::vector<std::byte>>> boxes_;
  std::vector<std::condition_variable> rank_cv_;
  std::vector<int> wait_src_;
  std::condition_variable fence_cv_;
  int recv_waiting_ = 0;
  int fence_entered_ = 0;
  int finished_ = 0;
  std::uint64_t fence_gen_ = 0;
  std::vector<std::int64_t> fence_vals_;
  std::vector<std::int64_t> fence_result_;
  std::vector<Nanos> elapsed_;
  std::vector<std::exception_ptr> errors_;
  bool aborting_ = false;
  int first_error_rank_ = -1;
  std::exception_ptr abort_error_;
  std::uint64_t messages_ = 0;
  std::chrono::steady_clock::time_point t0_;
};

}  // namespace detail

double jitter_unit(std::uint64_t seed, int src, int dst,
                   std::uint64_t ordinal) {
  std::uint64_t h = detail::splitmix64(seed ^ 0x706774756E65ULL);
  h = detail::splitmix64(h ^ static_cast<std::uint64_t>(src));
  h = detail::splitmix64(h ^ static_cast<std::uint64_t>(dst));
  h = detail::splitmix64(h ^ ordinal);
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

int RankHandle::nprocs() const noexcept { return engine_->nprocs(); }
const CostModel& RankHandle::model() const noexcept { return engine_->model(); }
Mode RankHandle::mode() const noexcept { return engine_->mode(); }

void RankHandle::send(int dst, std::span<const std::byte> payload) {
  engine_->send(rank_, dst, payload);
}

std::vector<std::byte> RankHandle::recv(int src) {
  return engine_->recv(rank_, src);
}

Nanos RankHandle::now_ns() const { return engine_->now(rank_); }

void RankHandle::charge_ns(Nanos cost) { engine_->charge(rank_, cost); }

std::vector<std::int64_t> RankHandle::fence_exchange(std::int64_t value) {
  return engine_->fence(rank_, value, /*align=*/false);
}

void RankHandle::sync_clocks() { engine_->fence(rank_, 0, /*align=*/true); }

RunStats run_spmd(int nprocs, const CostModel& model, Mode mode,
                  const RankProgram& program) {
  if (nprocs < 1) fail(Errc::ConfigError, "nprocs must be at least 1");
  if (model.jitter_fraction < 0.0)
    fail(Errc::ConfigError, "jitter_fraction must be non-negative");
  if (mode == Mode::Virtual) {
    detail::VirtualEngine engine(nprocs, model);
    return engine.run(program);
  }
  detail::WallclockEngine engine(nprocs, model);
  return engine.run(program);
}

}  // namespace pgtune
