#include <doctest.h>

#include <sstream>

#include "covsteer/coverage.hpp"
#include "covsteer/dut.hpp"
#include "oracles.hpp"

using namespace covsteer;
using namespace covsteer::testing;

namespace {

CycleStats stats_with_depths(std::vector<int> depths) {
  CycleStats cs;
  cs.fifo_depth = std::move(depths);
  cs.arrival_kind.assign(cs.fifo_depth.size(), -1);
  return cs;
}

SimResult result_with_hits(std::map<std::string, uint64_t> hits, uint64_t cycles = 100) {
  SimResult r;
  r.coverage_hits = std::move(hits);
  r.cycles_run = cycles;
  return r;
}

}  // namespace

TEST_CASE("predicate parsing round-trips the catalog") {
  CHECK(parse_predicate("fifo_full(2)").kind == PredKind::FifoFull);
  CHECK(parse_predicate("fifo_full(2)").a == 2);
  CHECK(parse_predicate("fifo_depth_ge(1,4)").b == 4);
  CHECK(parse_predicate("any_fifo_full").kind == PredKind::AnyFifoFull);
  CHECK(parse_predicate("all_ports_active").kind == PredKind::AllPortsActive);
  CHECK(parse_predicate("grant_count_ge(2)").a == 2);
  CHECK(parse_predicate("write_arrival(0)").kind == PredKind::WriteArrival);
  CHECK(parse_predicate("stall(3)").kind == PredKind::Stall);
  CHECK(parse_predicate("always").kind == PredKind::Always);
  CHECK_THROWS_AS(parse_predicate("bogus(1)"), ConfigError);
  CHECK_THROWS_AS(parse_predicate("fifo_full"), ConfigError);
  CHECK_THROWS_AS(parse_predicate("fifo_full(a)"), ConfigError);
}

TEST_CASE("evaluate_statements: single always-true statement hits every cycle") {
  DutConfig cfg;
  auto st = make_statement("triv", {"always"});
  CycleStats cs = stats_with_depths({0, 0, 0, 0});
  auto hits = evaluate_statements(cs, cfg, std::vector<CoverageStatement>{st});
  CHECK(hits == std::vector<std::string>{"triv"});
}

TEST_CASE("evaluate_statements: AND of four fulls with three full is a near miss") {
  DutConfig cfg;
  auto st = make_statement("all_full",
                           {"fifo_full(0)", "fifo_full(1)", "fifo_full(2)", "fifo_full(3)"});
  CycleStats cs = stats_with_depths({8, 8, 8, 3});
  auto hits = evaluate_statements(cs, cfg, std::vector<CoverageStatement>{st});
  CHECK(hits.empty());
  for (int p = 0; p < 3; ++p)
    CHECK(eval_predicate(st.components[static_cast<size_t>(p)], cs, cfg));
  CHECK_FALSE(eval_predicate(st.components[3], cs, cfg));

  CycleStats all = stats_with_depths({8, 8, 8, 8});
  CHECK(evaluate_statements(all, cfg, std::vector<CoverageStatement>{st}).size() == 1);
}

TEST_CASE("evaluate_statements: idle cycle hits nothing activity-dependent") {
  DutConfig cfg;
  std::vector<CoverageStatement> sts = {make_statement("act", {"all_ports_active"}),
                                        make_statement("grant", {"grant_count_ge(1)"}),
                                        make_statement("stall", {"any_stall"})};
  CycleStats cs = stats_with_depths({0, 0, 0, 0});
  CHECK(evaluate_statements(cs, cfg, sts).empty());
}

TEST_CASE("statement evaluator accumulates component hits for AND statements") {
  DutConfig cfg;
  std::vector<CoverageStatement> sts = {
      make_statement("pair", {"fifo_full(0)", "fifo_full(1)"}),
      make_statement("solo", {"fifo_full(0)"}),
  };
  StatementEvaluator eval(sts, cfg);
  eval.accumulate(stats_with_depths({8, 0, 0, 0}));  // comp0 only
  eval.accumulate(stats_with_depths({8, 8, 0, 0}));  // both -> hit
  eval.accumulate(stats_with_depths({0, 8, 0, 0}));  // comp1 only
  SimResult r;
  r.cycles_run = 3;
  eval.finish(r);
  CHECK(r.coverage_hits.at("pair") == 1);
  CHECK(r.coverage_hits.at("solo") == 2);
  REQUIRE(r.component_hits.count("pair") == 1);
  CHECK(r.component_hits.at("pair") == std::vector<uint64_t>{2, 2});
  CHECK(r.component_hits.count("solo") == 0);

  // AND dominance: statement hits <= min component hits.
  uint64_t min_comp = std::min(r.component_hits.at("pair")[0], r.component_hits.at("pair")[1]);
  CHECK(r.coverage_hits.at("pair") <= min_comp);
}

TEST_CASE("ledger rates and filter_frequent ordering") {
  CoverageLedger ledger(1.0);
  ledger.record_run(result_with_hits({{"A", 0}, {"B", 50}}));
  ledger.record_run(result_with_hits({{"A", 1}, {"B", 50}}));
  ledger.record_run(result_with_hits({{"A", 0}, {"B", 50}}));
  ledger.record_run(result_with_hits({{"A", 0}, {"B", 50}}));
  ledger.record_run(result_with_hits({{"A", 0}, {"B", 50}}));
  ledger.record_run(result_with_hits({{"A", 0}, {"B", 50}}));
  ledger.record_run(result_with_hits({{"A", 0}, {"B", 50}}));
  ledger.record_run(result_with_hits({{"A", 0}, {"B", 50}}));
  ledger.record_run(result_with_hits({{"A", 0}, {"B", 50}}));
  ledger.record_run(result_with_hits({{"A", 0}, {"B", 50}}));
  CHECK(ledger.entry("A")->hits_per_run() == doctest::Approx(0.1));
  CHECK(ledger.entry("B")->hits_per_run() == doctest::Approx(50.0));

  CHECK(filter_frequent(ledger, 1.0) == std::vector<std::string>{"A"});
  CHECK(filter_frequent(ledger, 1e18) == std::vector<std::string>{"A", "B"});
  CHECK(filter_frequent(ledger, 0.0).empty());

  CoverageLedger with_zero(1.0);
  with_zero.record_run(result_with_hits({{"never", 0}, {"often", 3}}));
  CHECK(filter_frequent(with_zero, 0.0) == std::vector<std::string>{"never"});
}

TEST_CASE("expand_near_miss adds components of rare AND statements once") {
  DutConfig cfg;
  std::vector<CoverageStatement> sts = {
      make_statement("rare", {"fifo_full(0)", "fifo_full(1)", "fifo_full(2)", "fifo_full(3)"}),
      make_statement("common", {"grant_count_ge(1)", "grant_count_ge(2)"}),
  };
  CoverageLedger ledger(1.0);
  ledger.record_run(result_with_hits({{"rare", 0}, {"common", 80}}));

  auto expanded = expand_near_miss(ledger, sts);
  CHECK(expanded.size() == sts.size() + 4);
  for (int p = 0; p < 4; ++p) {
    std::string id = "fifo_full(" + std::to_string(p) + ")";
    bool found = false;
    for (const auto& st : expanded)
      if (st.id == id && st.components.size() == 1) found = true;
    CHECK(found);
  }

  // Idempotent.
  auto twice = expand_near_miss(ledger, expanded);
  CHECK(twice.size() == expanded.size());

  // Frequently hit statements are left alone.
  CoverageLedger calm(1.0);
  calm.record_run(result_with_hits({{"rare", 500}, {"common", 80}}));
  CHECK(expand_near_miss(calm, sts).size() == sts.size());
}

TEST_CASE("compute_reward: objectives and blending") {
  DutConfig cfg;
  std::vector<CoverageStatement> sts = {
      make_statement("pair", {"fifo_full(0)", "fifo_full(1)"}),
  };
  SimResult r;
  r.avg_fifo_depth = 2.5;
  r.pct_full_cycles = 40.0;
  r.cycles_run = 100;
  r.coverage_hits["pair"] = 10;
  r.component_hits["pair"] = {100, 0};  // half the components hit every cycle
  r.failed = false;

  CHECK(compute_reward(r, RewardSpec::single(Objective::AvgFifoDepth), sts) == 2.5);
  CHECK(compute_reward(r, RewardSpec::single(Objective::PctFullCycles), sts) == 40.0);
  CHECK(compute_reward(r, RewardSpec::single(Objective::StatementHits, "pair"), sts) == 10.0);
  CHECK(compute_reward(r, RewardSpec::single(Objective::NearMissScore, "pair"), sts) ==
        doctest::Approx(0.5));
  CHECK(compute_reward(r, RewardSpec::single(Objective::BugFound), sts) == 0.0);
  r.failed = true;
  CHECK(compute_reward(r, RewardSpec::single(Objective::BugFound), sts) == 1.0);

  RewardSpec blend;
  blend.terms.push_back({Objective::AvgFifoDepth, "", 2.0});
  blend.terms.push_back({Objective::BugFound, "", 10.0});
  CHECK(compute_reward(r, blend, sts) == doctest::Approx(2.0 * 2.5 + 10.0));

  CHECK_THROWS_AS((void)compute_reward(r, RewardSpec::single(Objective::StatementHits, "nope"), sts),
                  UnknownStatement);
  CHECK_THROWS_AS((void)compute_reward(r, RewardSpec::single(Objective::NearMissScore, "nope"), sts),
                  UnknownStatement);
}

TEST_CASE("near-miss score is 1 exactly when the statement held every cycle") {
  DutConfig cfg;
  std::vector<CoverageStatement> sts = {make_statement("pair", {"fifo_full(0)", "fifo_full(1)"})};
  StatementEvaluator eval(sts, cfg);
  for (int t = 0; t < 5; ++t) eval.accumulate(stats_with_depths({8, 8, 0, 0}));
  SimResult r;
  r.cycles_run = 5;
  eval.finish(r);
  CHECK(compute_reward(r, RewardSpec::single(Objective::NearMissScore, "pair"), sts) == 1.0);
  CHECK(r.coverage_hits.at("pair") == r.cycles_run);
}

TEST_CASE("reward is monotone in the underlying metric") {
  DutConfig cfg;
  std::vector<CoverageStatement> sts;
  SimResult lo, hi;
  lo.pct_full_cycles = 10.0;
  hi.pct_full_cycles = 11.0;
  auto spec = RewardSpec::single(Objective::PctFullCycles);
  CHECK(compute_reward(hi, spec, sts) > compute_reward(lo, spec, sts));
}

TEST_CASE("ledger CSV export") {
  CoverageLedger ledger(1.0);
  ledger.record_run(result_with_hits({{"A", 2}}));
  std::ostringstream os;
  ledger.export_csv(os);
  CHECK(os.str() == "statement,runs,hits,hits_per_run\nA,1,2,2\n");
}

TEST_CASE("default statements cover the shipped catalog") {
  DutConfig cfg;
  auto sts = default_statements(cfg);
  // 4 per-port fulls + all_fifos_full + 12 depth thresholds + dual_grant + BUG0.
  CHECK(sts.size() == 4 + 1 + 12 + 1 + 1);
  bool flagship = false;
  for (const auto& st : sts)
    if (st.id == "all_fifos_full" && st.components.size() == 4) flagship = true;
  CHECK(flagship);
}
