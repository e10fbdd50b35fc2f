#pragma once

#include <deque>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "covsteer/coverage.hpp"
#include "covsteer/sim_types.hpp"

namespace covsteer {

// Cache routing: index mod num_caches.
int route_to_cache(const Address& addr, int num_caches);

// Two transactions conflict iff they target the same cache and the same index.
bool txns_conflict(const Transaction& a, const Transaction& b, int num_caches);

struct CollisionResult {
  std::vector<Transaction> granted;
  std::vector<Transaction> deferred;
};

// One-shot arbitration over candidates from distinct ports. Candidates are
// considered in round-robin order starting at rr_start; a candidate is
// granted iff it conflicts with no already-granted transaction and its
// target cache still has grant budget this cycle.
CollisionResult check_collision(std::span<const Transaction> candidates, const DutConfig& cfg,
                                int rr_start = 0);

// Cycle-accurate model of the cache controller front end: per-port
// collision FIFOs feeding a round-robin arbiter over up to four caches.
// Deterministic; all randomness lives in the stimulus stream.
class CacheSim {
 public:
  explicit CacheSim(const DutConfig& cfg);

  // Advances one cycle. arrivals[p] is the optional new transaction on
  // port p. FIFO heads arbitrate first (in round-robin port order), then
  // new arrivals; losing arrivals enqueue into their port FIFO, and an
  // arrival that must enqueue into a full FIFO is dropped and recorded as
  // a stall. The round-robin pointer advances one port per cycle.
  CycleStats step_cycle(std::span<const std::optional<Transaction>> arrivals);

  const DutConfig& config() const { return cfg_; }
  const std::deque<Transaction>& fifo(int port) const { return fifos_[port]; }
  int rr_pointer() const { return rr_; }
  uint64_t cycle() const { return cycle_; }

  // Conservation counters: injected == granted + in_fifos + dropped holds
  // at every cycle boundary.
  uint64_t total_injected() const { return injected_; }
  uint64_t total_granted() const { return granted_; }
  uint64_t total_dropped() const { return dropped_; }
  uint64_t total_in_fifos() const;

 private:
  DutConfig cfg_;
  std::vector<std::deque<Transaction>> fifos_;
  int rr_ = 0;
  uint64_t cycle_ = 0;
  uint64_t injected_ = 0;
  uint64_t granted_ = 0;
  uint64_t dropped_ = 0;
};

using TraceSink = std::function<void(const CycleStats&)>;

// Plays the per-port streams against the DUT for num_cycles cycles,
// evaluating coverage statements every cycle. Deterministic: identical
// (config, streams, num_cycles) give an identical SimResult. In SeededBug
// mode the run terminates at the cycle the bug fires, with failed = true.
SimResult run_simulation(const DutConfig& cfg, const PortStreams& streams, uint64_t num_cycles,
                         std::span<const CoverageStatement> statements,
                         const TraceSink& trace = nullptr);

}  // namespace covsteer
