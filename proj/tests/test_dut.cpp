#include <doctest.h>

#include <optional>

#include "covsteer/dut.hpp"
#include "covsteer/rng.hpp"
#include "oracles.hpp"

using namespace covsteer;
using namespace covsteer::testing;

namespace {

DutConfig small_cfg(int ports = 4, int capacity = 8) {
  DutConfig cfg;
  cfg.num_ports = ports;
  cfg.fifo_capacity = capacity;
  return cfg;
}

std::vector<std::optional<Transaction>> no_arrivals(int ports) {
  return std::vector<std::optional<Transaction>>(static_cast<size_t>(ports));
}

}  // namespace

TEST_CASE("route_to_cache is index mod num_caches") {
  CHECK(route_to_cache(Address{0, 0, 0}, 4) == 0);
  CHECK(route_to_cache(Address{0, 5, 0}, 4) == 1);
  CHECK(route_to_cache(Address{0, 7, 0}, 1) == 0);
}

TEST_CASE("check_collision: empty input") {
  DutConfig cfg = small_cfg();
  CollisionResult r = check_collision({}, cfg);
  CHECK(r.granted.empty());
  CHECK(r.deferred.empty());
}

TEST_CASE("check_collision: same index pair defers one") {
  DutConfig cfg = small_cfg();
  std::vector<Transaction> cands = {make_txn(0, 5), make_txn(1, 5)};
  CollisionResult r = check_collision(cands, cfg, 0);
  REQUIRE(r.granted.size() == 1);
  REQUIRE(r.deferred.size() == 1);
  CHECK(oracle_grants_feasible(r.granted, cfg));
  CHECK(oracle_deferral_justified(r.deferred[0], r.granted, cfg));
  // Round-robin at port 0: port 0 wins.
  CHECK(r.granted[0].port == 0);

  // Round-robin at port 1 flips the winner.
  CollisionResult r1 = check_collision(cands, cfg, 1);
  CHECK(r1.granted[0].port == 1);
}

TEST_CASE("check_collision: four distinct indices to distinct caches all granted") {
  DutConfig cfg = small_cfg();
  std::vector<Transaction> cands = {make_txn(0, 0), make_txn(1, 1), make_txn(2, 2), make_txn(3, 3)};
  CollisionResult r = check_collision(cands, cfg, 2);
  CHECK(r.granted.size() == 4);
  CHECK(r.deferred.empty());
  CHECK(oracle_grants_feasible(r.granted, cfg));
}

TEST_CASE("check_collision: same cache, different index defers on grant budget") {
  DutConfig cfg = small_cfg();
  // Indices 0 and 4 both route to cache 0 but do not pairwise conflict.
  std::vector<Transaction> cands = {make_txn(0, 0), make_txn(1, 4)};
  CollisionResult r = check_collision(cands, cfg, 0);
  REQUIRE(r.granted.size() == 1);
  CHECK(r.granted[0].port == 0);
  CHECK(oracle_deferral_justified(r.deferred[0], r.granted, cfg));

  // With a budget of two the cache absorbs both.
  cfg.grants_per_cache_per_cycle = 2;
  CollisionResult r2 = check_collision(cands, cfg, 0);
  CHECK(r2.granted.size() == 2);
  CHECK(oracle_grants_feasible(r2.granted, cfg));
}

TEST_CASE("arbitrate: exhaustive two-port oracle over head/arrival combinations") {
  DutConfig cfg = small_cfg(2, 8);
  // Index choices cover conflict, shared-cache and independent cases.
  const uint32_t idx[] = {0, 4, 1};
  int checked = 0;
  for (int h0 = -1; h0 < 3; ++h0) {
    for (int h1 = -1; h1 < 3; ++h1) {
      for (int a0 = -1; a0 < 3; ++a0) {
        for (int a1 = -1; a1 < 3; ++a1) {
          for (int rr = 0; rr < 2; ++rr) {
            CacheSim sim(cfg);
            // Bring the round-robin pointer and FIFO heads into position.
            // Heads are planted by injecting conflicting pairs first; to keep
            // the setup independent we drive a fresh sim only for the rr=0,
            // no-head cases and use the oracle for the general combination.
            std::optional<Transaction> head0, head1, arr0, arr1;
            if (h0 >= 0) head0 = make_txn(0, idx[h0]);
            if (h1 >= 0) head1 = make_txn(1, idx[h1]);
            if (a0 >= 0) arr0 = make_txn(0, idx[a0]);
            if (a1 >= 0) arr1 = make_txn(1, idx[a1]);

            TwoPortOutcome expect = oracle_two_port_cycle(head0, head1, arr0, arr1, cfg, rr);

            // Mirror the same candidate set through check_collision to pin
            // the shared grant kernel against the oracle.
            std::vector<Transaction> heads, all;
            if (head0) all.push_back(*head0);
            if (head1) all.push_back(*head1);
            CollisionResult hr = check_collision(all, cfg, rr);
            CHECK(oracle_grants_feasible(hr.granted, cfg));
            for (const auto& d : hr.deferred)
              CHECK(oracle_deferral_justified(d, hr.granted, cfg));

            // Full kernel check via a staged sim when the heads can be
            // planted exactly: no heads at all.
            if (!head0 && !head1) {
              // Align the sim's round-robin pointer.
              for (int k = 0; k < rr; ++k) (void)sim.step_cycle(no_arrivals(2));
              std::vector<std::optional<Transaction>> arrivals = {arr0, arr1};
              CycleStats cs = sim.step_cycle(arrivals);
              bool g0 = false, g1 = false;
              for (const auto& g : cs.grants) {
                if (g.port == 0) g0 = true;
                if (g.port == 1) g1 = true;
              }
              CHECK(g0 == expect.arrival_granted[0]);
              CHECK(g1 == expect.arrival_granted[1]);
            }
            ++checked;
          }
        }
      }
    }
  }
  CHECK(checked == 4 * 4 * 4 * 4 * 2);
}

TEST_CASE("arbitrate: head plus same-port arrival can both be granted") {
  DutConfig cfg = small_cfg(2, 8);
  CacheSim sim(cfg);
  // Plant a head on port 1: ports 0 and 1 both send index 5; rr=0 so port 0
  // wins and port 1 enqueues.
  std::vector<std::optional<Transaction>> c0 = {make_txn(0, 5), make_txn(1, 5)};
  (void)sim.step_cycle(c0);
  REQUIRE(sim.fifo(1).size() == 1);

  // rr=1: port 1's head (index 5, cache 1) and a port-1 arrival to a
  // different cache (index 6, cache 2) are both granted.
  std::vector<std::optional<Transaction>> c1 = {std::nullopt, make_txn(1, 6)};
  CycleStats cs = sim.step_cycle(c1);
  CHECK(cs.grants.size() == 2);
  CHECK(sim.fifo(1).empty());

  // Same setup but the arrival conflicts with the head: head wins, arrival
  // enqueues behind it.
  CacheSim sim2(cfg);
  (void)sim2.step_cycle(c0);
  std::vector<std::optional<Transaction>> c2 = {std::nullopt, make_txn(1, 5)};
  CycleStats cs2 = sim2.step_cycle(c2);
  CHECK(cs2.grants.size() == 1);
  CHECK(cs2.grants[0].port == 1);
  CHECK(sim2.fifo(1).size() == 1);
}

TEST_CASE("arbitrate: all-port conflict honors the round-robin pointer") {
  DutConfig cfg = small_cfg();
  CacheSim sim(cfg);
  // Advance the pointer to port 2.
  for (int k = 0; k < 2; ++k) (void)sim.step_cycle(no_arrivals(4));
  std::vector<std::optional<Transaction>> arr = {make_txn(0, 9), make_txn(1, 9), make_txn(2, 9),
                                                 make_txn(3, 9)};
  CycleStats cs = sim.step_cycle(arr);
  REQUIRE(cs.grants.size() == 1);
  CHECK(cs.grants[0].port == 2);
  CHECK(sim.fifo(0).size() == 1);
  CHECK(sim.fifo(1).size() == 1);
  CHECK(sim.fifo(2).empty());
  CHECK(sim.fifo(3).size() == 1);
}

TEST_CASE("step_cycle: idle cycle leaves everything empty") {
  DutConfig cfg = small_cfg();
  CacheSim sim(cfg);
  CycleStats cs = sim.step_cycle(no_arrivals(4));
  for (int d : cs.fifo_depth) CHECK(d == 0);
  CHECK(cs.grants.empty());
  CHECK(cs.stalls.empty());
}

TEST_CASE("step_cycle: colliding stream follows the hand queueing ledger") {
  // All four ports push index-5 transactions every cycle: one grant per
  // cycle, four arrivals, so total depth grows by 3 per cycle until the
  // FIFOs saturate near cycle 4*capacity/3.
  DutConfig cfg = small_cfg();
  CacheSim sim(cfg);
  for (int t = 0; t < 10; ++t) {
    std::vector<std::optional<Transaction>> arr = {make_txn(0, 5), make_txn(1, 5), make_txn(2, 5),
                                                   make_txn(3, 5)};
    CycleStats cs = sim.step_cycle(arr);
    CHECK(cs.grants.size() == 1);
    CHECK(cs.stalls.empty());
    int total = 0;
    for (int d : cs.fifo_depth) total += d;
    CHECK(total == 3 * (t + 1));
  }
  // Cycle 10: one FIFO is at capacity and its arrival is dropped.
  std::vector<std::optional<Transaction>> arr = {make_txn(0, 5), make_txn(1, 5), make_txn(2, 5),
                                                 make_txn(3, 5)};
  CycleStats cs = sim.step_cycle(arr);
  CHECK(cs.stalls.size() == 1);
  for (int d : cs.fifo_depth) CHECK(d == cfg.fifo_capacity);
}

TEST_CASE("step_cycle: single active port never queues") {
  DutConfig cfg = small_cfg();
  CacheSim sim(cfg);
  Rng rng(5);
  for (int t = 0; t < 200; ++t) {
    std::vector<std::optional<Transaction>> arr = no_arrivals(4);
    arr[2] = make_txn(2, static_cast<uint32_t>(rng.uniform_int(0, 63)));
    CycleStats cs = sim.step_cycle(arr);
    for (int d : cs.fifo_depth) CHECK(d == 0);
    CHECK(cs.grants.size() == 1);
  }
}

TEST_CASE("run_simulation: empty streams give a zero result") {
  DutConfig cfg = small_cfg();
  PortStreams streams(4);
  auto stmts = default_statements(cfg);
  SimResult r = run_simulation(cfg, streams, 100, stmts);
  CHECK(r.avg_fifo_depth == 0.0);
  CHECK(r.pct_full_cycles == 0.0);
  CHECK(r.cycles_run == 100);
  CHECK_FALSE(r.failed);
  for (const auto& [id, hits] : r.coverage_hits) {
    INFO("statement ", id);
    CHECK(hits == 0);
  }
  CHECK(r.per_port_pct_full.size() == 4);
}

TEST_CASE("run_simulation: adversarial same-index stream saturates") {
  DutConfig cfg = small_cfg();
  PortStreams streams(4);
  for (int p = 0; p < 4; ++p) {
    for (uint64_t t = 0; t < 1000; ++t) {
      Transaction txn = make_txn(p, 7);
      txn.issue_cycle = t;
      streams[static_cast<size_t>(p)].push_back(txn);
    }
  }
  auto stmts = default_statements(cfg);
  SimResult r = run_simulation(cfg, streams, 1000, stmts);
  CHECK(r.pct_full_cycles > 0.0);
  CHECK(r.avg_fifo_depth > 5.0);
  CHECK(r.coverage_hits.at("all_fifos_full") > 0);
}

TEST_CASE("run_simulation is deterministic") {
  DutConfig cfg = small_cfg();
  PortStreams streams(4);
  Rng rng(11);
  for (int p = 0; p < 4; ++p) {
    for (uint64_t t = 0; t < 500; ++t) {
      if (!rng.bernoulli(0.6)) continue;
      Transaction txn = make_txn(p, static_cast<uint32_t>(rng.uniform_int(0, 7)));
      txn.issue_cycle = t;
      streams[static_cast<size_t>(p)].push_back(txn);
    }
  }
  auto stmts = default_statements(cfg);
  SimResult a = run_simulation(cfg, streams, 500, stmts);
  SimResult b = run_simulation(cfg, streams, 500, stmts);
  CHECK(a.avg_fifo_depth == b.avg_fifo_depth);
  CHECK(a.pct_full_cycles == b.pct_full_cycles);
  CHECK(a.per_port_pct_full == b.per_port_pct_full);
  CHECK(a.coverage_hits == b.coverage_hits);
  CHECK(a.component_hits == b.component_hits);
  CHECK(a.failed == b.failed);
  CHECK(a.cycles_run == b.cycles_run);
}

TEST_CASE("seeded bug: write into a full FIFO fails the run, reads do not") {
  DutConfig cfg = small_cfg();
  cfg.fifo_capacity = 1;

  auto build = [](TxnKind kind) {
    PortStreams streams(4);
    for (int p = 0; p < 4; ++p) {
      for (uint64_t t = 0; t < 50; ++t) {
        Transaction txn = make_txn(p, 3, kind);
        txn.issue_cycle = t;
        streams[static_cast<size_t>(p)].push_back(txn);
      }
    }
    return streams;
  };

  SUBCASE("bug mode off never fails") {
    auto stmts = default_statements(cfg);
    SimResult r = run_simulation(cfg, build(TxnKind::Write), 50, stmts);
    CHECK_FALSE(r.failed);
    CHECK(r.cycles_run == 50);
  }
  SUBCASE("reads never trigger") {
    cfg.bug_mode = BugMode::SeededBug;
    auto stmts = default_statements(cfg);
    SimResult r = run_simulation(cfg, build(TxnKind::Read), 50, stmts);
    CHECK_FALSE(r.failed);
    CHECK(r.coverage_hits.at("BUG0") == 0);
  }
  SUBCASE("writes trigger, terminate the run and hit BUG0") {
    cfg.bug_mode = BugMode::SeededBug;
    auto stmts = default_statements(cfg);
    SimResult r = run_simulation(cfg, build(TxnKind::Write), 50, stmts);
    CHECK(r.failed);
    CHECK(r.cycles_run < 50);
    CHECK(r.coverage_hits.at("BUG0") == 1);
  }
}

TEST_CASE("property fuzz: bounds, conservation, conflict-free grants, starvation") {
  DutConfig cfg = small_cfg();
  CacheSim sim(cfg);
  Rng rng(99);

  // Track head ages: same head observed at consecutive end-of-cycle
  // snapshots. Under rotating round-robin a head is granted within
  // num_ports cycles of becoming head.
  std::vector<uint64_t> head_id(4, 0);
  std::vector<int> head_age(4, 0);
  uint64_t next_txn_id = 1;

  for (int t = 0; t < 20000; ++t) {
    std::vector<std::optional<Transaction>> arr = no_arrivals(4);
    for (int p = 0; p < 4; ++p) {
      if (!rng.bernoulli(0.55)) continue;
      Transaction txn = make_txn(p, static_cast<uint32_t>(rng.uniform_int(0, 5)),
                                 rng.bernoulli(0.5) ? TxnKind::Read : TxnKind::Write);
      // Unique id smuggled through the tag field so heads are identifiable.
      txn.addr.tag = static_cast<uint32_t>(next_txn_id++ & 0xFF);
      txn.issue_cycle = static_cast<uint64_t>(t);
      arr[static_cast<size_t>(p)] = txn;
    }
    CycleStats cs = sim.step_cycle(arr);

    // FIFO bounds.
    for (int d : cs.fifo_depth) {
      CHECK(d >= 0);
      CHECK(d <= cfg.fifo_capacity);
    }

    // Conservation at the cycle boundary.
    CHECK(sim.total_injected() ==
          sim.total_granted() + sim.total_in_fifos() + sim.total_dropped());

    // Granted set is conflict-free and within budget (brute-force pairwise
    // oracle over the granted indices).
    std::vector<Transaction> granted;
    for (const auto& g : cs.grants) {
      CHECK(g.cache == route_to_cache(Address{0, g.index, 0}, cfg.num_caches));
      granted.push_back(make_txn(g.port, g.index));
    }
    CHECK(oracle_grants_feasible(granted, cfg));

    // A port appears in at most one of grants/stalls.
    for (const auto& g : cs.grants)
      for (int s : cs.stalls) CHECK(g.port != s);

    // Starvation bound.
    for (int p = 0; p < 4; ++p) {
      const auto& fifo = sim.fifo(p);
      if (fifo.empty()) {
        head_id[static_cast<size_t>(p)] = 0;
        head_age[static_cast<size_t>(p)] = 0;
        continue;
      }
      uint64_t id = (static_cast<uint64_t>(fifo.front().addr.tag) << 32) ^ fifo.front().issue_cycle;
      if (id == head_id[static_cast<size_t>(p)]) {
        ++head_age[static_cast<size_t>(p)];
      } else {
        head_id[static_cast<size_t>(p)] = id;
        head_age[static_cast<size_t>(p)] = 1;
      }
      CHECK(head_age[static_cast<size_t>(p)] <= cfg.num_ports);
    }
  }
}
