#include "covsteer/dut.hpp"

#include <algorithm>

namespace covsteer {

void DutConfig::validate() const {
  if (num_ports < 1 || num_ports > 4) throw ConfigError("dut.num_ports must be in [1,4]");
  if (num_caches < 1 || num_caches > 4) throw ConfigError("dut.num_caches must be in [1,4]");
  if (fifo_capacity < 1) throw ConfigError("dut.fifo_capacity must be >= 1");
  if (grants_per_cache_per_cycle < 1) throw ConfigError("dut.grants_per_cache_per_cycle must be >= 1");
  if (tag_bits < 1 || tag_bits > 16) throw ConfigError("dut.tag_bits must be in [1,16]");
  if (index_bits < 1 || index_bits > 16) throw ConfigError("dut.index_bits must be in [1,16]");
  if (offset_bits < 1 || offset_bits > 16) throw ConfigError("dut.offset_bits must be in [1,16]");
}

int route_to_cache(const Address& addr, int num_caches) {
  return static_cast<int>(addr.index % static_cast<uint32_t>(num_caches));
}

bool txns_conflict(const Transaction& a, const Transaction& b, int num_caches) {
  return route_to_cache(a.addr, num_caches) == route_to_cache(b.addr, num_caches) &&
         a.addr.index == b.addr.index;
}

namespace {

// Shared grant kernel: walks candidates in the given order, granting each
// one that conflicts with no prior grant and whose cache has budget left.
// Returns per-candidate grant flags.
std::vector<bool> grant_in_order(std::span<const Transaction> ordered, const DutConfig& cfg) {
  std::vector<bool> granted(ordered.size(), false);
  std::vector<int> budget(static_cast<size_t>(cfg.num_caches), cfg.grants_per_cache_per_cycle);
  std::vector<size_t> winners;
  for (size_t i = 0; i < ordered.size(); ++i) {
    const Transaction& cand = ordered[i];
    int cache = route_to_cache(cand.addr, cfg.num_caches);
    bool conflict = false;
    for (size_t w : winners) {
      if (txns_conflict(cand, ordered[w], cfg.num_caches)) {
        conflict = true;
        break;
      }
    }
    if (conflict || budget[static_cast<size_t>(cache)] <= 0) continue;
    --budget[static_cast<size_t>(cache)];
    granted[i] = true;
    winners.push_back(i);
  }
  return granted;
}

}  // namespace

CollisionResult check_collision(std::span<const Transaction> candidates, const DutConfig& cfg,
                                int rr_start) {
  // Order by round-robin priority starting at rr_start.
  std::vector<Transaction> ordered(candidates.begin(), candidates.end());
  std::sort(ordered.begin(), ordered.end(), [&](const Transaction& a, const Transaction& b) {
    int pa = (a.port - rr_start + cfg.num_ports) % cfg.num_ports;
    int pb = (b.port - rr_start + cfg.num_ports) % cfg.num_ports;
    return pa < pb;
  });
  std::vector<bool> flags = grant_in_order(ordered, cfg);
  CollisionResult out;
  for (size_t i = 0; i < ordered.size(); ++i) {
    (flags[i] ? out.granted : out.deferred).push_back(ordered[i]);
  }
  return out;
}

CacheSim::CacheSim(const DutConfig& cfg) : cfg_(cfg), fifos_(static_cast<size_t>(cfg.num_ports)) {
  cfg_.validate();
}

uint64_t CacheSim::total_in_fifos() const {
  uint64_t n = 0;
  for (const auto& f : fifos_) n += f.size();
  return n;
}

CycleStats CacheSim::step_cycle(std::span<const std::optional<Transaction>> arrivals) {
  const int P = cfg_.num_ports;
  CycleStats cs;
  cs.cycle = cycle_;
  cs.arrival_kind.assign(static_cast<size_t>(P), -1);

  // Candidate list in arbitration priority order: FIFO heads in round-robin
  // port order, then new arrivals in the same order.
  struct Cand {
    Transaction txn;
    int port;
    bool is_head;
  };
  std::vector<Cand> cands;
  cands.reserve(static_cast<size_t>(2 * P));
  for (int i = 0; i < P; ++i) {
    int p = (rr_ + i) % P;
    if (!fifos_[static_cast<size_t>(p)].empty())
      cands.push_back({fifos_[static_cast<size_t>(p)].front(), p, true});
  }
  for (int i = 0; i < P; ++i) {
    int p = (rr_ + i) % P;
    if (arrivals[static_cast<size_t>(p)].has_value()) {
      cands.push_back({*arrivals[static_cast<size_t>(p)], p, false});
      cs.arrival_kind[static_cast<size_t>(p)] = static_cast<int>(arrivals[static_cast<size_t>(p)]->kind);
      ++injected_;
    }
  }

  std::vector<Transaction> ordered;
  ordered.reserve(cands.size());
  for (const Cand& c : cands) ordered.push_back(c.txn);
  std::vector<bool> flags = grant_in_order(ordered, cfg_);

  for (size_t i = 0; i < cands.size(); ++i) {
    const Cand& c = cands[i];
    auto& fifo = fifos_[static_cast<size_t>(c.port)];
    if (flags[i]) {
      cs.grants.push_back({c.port, route_to_cache(c.txn.addr, cfg_.num_caches), c.txn.addr.index});
      ++granted_;
      if (c.is_head) fifo.pop_front();
    } else if (!c.is_head) {
      // Losing arrival: enqueue, or drop with a stall record on overflow.
      if (static_cast<int>(fifo.size()) >= cfg_.fifo_capacity) {
        cs.stalls.push_back(c.port);
        ++dropped_;
      } else {
        fifo.push_back(c.txn);
      }
    }
  }

  cs.fifo_depth.resize(static_cast<size_t>(P));
  for (int p = 0; p < P; ++p) cs.fifo_depth[static_cast<size_t>(p)] = static_cast<int>(fifos_[static_cast<size_t>(p)].size());

  if (cfg_.bug_mode == BugMode::SeededBug) {
    // Seeded bug: a Write arrival on a port whose FIFO sits at capacity at
    // the end of the same cycle.
    for (int p = 0; p < P; ++p) {
      if (cs.arrival_kind[static_cast<size_t>(p)] == static_cast<int>(TxnKind::Write) &&
          cs.fifo_depth[static_cast<size_t>(p)] == cfg_.fifo_capacity) {
        cs.bug_fired = true;
        break;
      }
    }
  }

  rr_ = (rr_ + 1) % P;
  ++cycle_;
  return cs;
}

SimResult run_simulation(const DutConfig& cfg, const PortStreams& streams, uint64_t num_cycles,
                         std::span<const CoverageStatement> statements, const TraceSink& trace) {
  cfg.validate();
  if (num_cycles < 1) throw ConfigError("num_cycles must be >= 1");
  if (streams.size() != static_cast<size_t>(cfg.num_ports))
    throw ConfigError("stream count must equal num_ports");

  CacheSim sim(cfg);
  StatementEvaluator eval(statements, cfg);

  const int P = cfg.num_ports;
  std::vector<size_t> cursor(static_cast<size_t>(P), 0);
  std::vector<std::optional<Transaction>> arrivals(static_cast<size_t>(P));

  SimResult result;
  double depth_sum = 0.0;
  uint64_t any_full_cycles = 0;
  std::vector<uint64_t> port_full(static_cast<size_t>(P), 0);

  for (uint64_t t = 0; t < num_cycles; ++t) {
    for (int p = 0; p < P; ++p) {
      arrivals[static_cast<size_t>(p)].reset();
      size_t& c = cursor[static_cast<size_t>(p)];
      const auto& s = streams[static_cast<size_t>(p)];
      if (c < s.size() && s[c].issue_cycle == t) {
        arrivals[static_cast<size_t>(p)] = s[c];
        ++c;
      }
    }
    CycleStats cs = sim.step_cycle(arrivals);
    eval.accumulate(cs);
    if (trace) trace(cs);

    bool any_full = false;
    for (int p = 0; p < P; ++p) {
      int d = cs.fifo_depth[static_cast<size_t>(p)];
      depth_sum += d;
      if (d == cfg.fifo_capacity) {
        any_full = true;
        ++port_full[static_cast<size_t>(p)];
      }
    }
    if (any_full) ++any_full_cycles;

    if (cs.bug_fired) {
      result.failed = true;
      break;
    }
  }

  result.cycles_run = sim.cycle();
  const double cycles = static_cast<double>(result.cycles_run);
  result.avg_fifo_depth = depth_sum / (cycles * P);
  result.pct_full_cycles = 100.0 * static_cast<double>(any_full_cycles) / cycles;
  result.per_port_pct_full.resize(static_cast<size_t>(P));
  for (int p = 0; p < P; ++p)
    result.per_port_pct_full[static_cast<size_t>(p)] =
        100.0 * static_cast<double>(port_full[static_cast<size_t>(p)]) / cycles;
  eval.finish(result);
  return result;
}

}  // namespace covsteer
