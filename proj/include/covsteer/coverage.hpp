#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "covsteer/sim_types.hpp"

namespace covsteer {

class UnknownStatement : public Error {
 public:
  using Error::Error;
};

// Predicate catalog. Every predicate is a pure boolean function of one
// cycle's instrumentation record. Textual names (as written in config
// files) are parsed by parse_predicate:
//
//   fifo_full(p)         port p FIFO at capacity
//   fifo_depth_ge(p,k)   port p FIFO depth >= k
//   any_fifo_full        some FIFO at capacity
//   all_ports_active     every port issued an arrival this cycle
//   arrival(p)           port p issued an arrival
//   write_arrival(p)     port p issued a Write arrival
//   grant_count_ge(n)    at least n grants this cycle
//   stall(p)             port p arrival dropped on a full FIFO
//   any_stall            some arrival dropped
//   bug_triggered        the seeded bug fired this cycle
//   always               constant true
enum class PredKind : uint8_t {
  FifoFull,
  FifoDepthGe,
  AnyFifoFull,
  AllPortsActive,
  Arrival,
  WriteArrival,
  GrantCountGe,
  Stall,
  AnyStall,
  BugTriggered,
  Always,
};

struct SignalPredicate {
  std::string id;
  PredKind kind = PredKind::Always;
  int a = 0;
  int b = 0;
};

SignalPredicate parse_predicate(const std::string& name);
bool eval_predicate(const SignalPredicate& p, const CycleStats& cs, const DutConfig& cfg);

// A functional coverage statement: the AND of its components, all in the
// same cycle.
struct CoverageStatement {
  std::string id;
  std::vector<SignalPredicate> components;
};

CoverageStatement make_statement(const std::string& id, const std::vector<std::string>& component_names);

// The statement set shipped by default for the cache-controller DUT:
// per-port fifo_full, the all-FIFOs-full-same-cycle AND statement,
// per-port depth thresholds {2,4,8}, dual-grant, and BUG0.
std::vector<CoverageStatement> default_statements(const DutConfig& cfg);

// Returns ids of statements hit this cycle. Exposed for unit tests;
// run_simulation uses the indexed accumulator below.
std::vector<std::string> evaluate_statements(const CycleStats& cs, const DutConfig& cfg,
                                             std::span<const CoverageStatement> statements);

// Per-run accumulator over an indexed statement set; avoids string lookups
// in the cycle loop.
class StatementEvaluator {
 public:
  StatementEvaluator(std::span<const CoverageStatement> statements, const DutConfig& cfg);

  void accumulate(const CycleStats& cs);
  // Writes coverage_hits / component_hits into `result`.
  void finish(SimResult& result) const;

 private:
  const DutConfig cfg_;
  std::vector<CoverageStatement> statements_;
  std::vector<uint64_t> hits_;
  std::vector<std::vector<uint64_t>> comp_hits_;
};

struct LedgerEntry {
  uint64_t runs = 0;
  uint64_t hits = 0;
  double hits_per_run() const { return runs == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(runs); }
};

// Cross-run hit accounting. Statements are attributed one "run" each time a
// SimResult tracking them is recorded, so statements added by near-miss
// expansion mid-experiment get rates relative to the runs that tracked them.
class CoverageLedger {
 public:
  explicit CoverageLedger(double rarity_threshold = 1.0) : rarity_threshold_(rarity_threshold) {}

  void record_run(const SimResult& result);

  double rarity_threshold() const { return rarity_threshold_; }
  const std::map<std::string, LedgerEntry>& entries() const { return entries_; }
  std::optional<LedgerEntry> entry(const std::string& id) const;
  uint64_t total_runs() const { return total_runs_; }

  // CSV export: statement id, runs, hits, hits-per-run.
  void export_csv(std::ostream& os) const;

 private:
  double rarity_threshold_;
  uint64_t total_runs_ = 0;
  std::map<std::string, LedgerEntry> entries_;
};

// Near-miss expansion: every multi-component statement whose hits-per-run is
// below the ledger's rarity threshold gets its components added as
// individually tracked single-component statements (id = predicate id).
// Idempotent: components already tracked under that id are skipped.
std::vector<CoverageStatement> expand_near_miss(const CoverageLedger& ledger,
                                                const std::vector<CoverageStatement>& statements);

// Ids with mean hits-per-run <= threshold, ascending by hit rate (ties by id).
std::vector<std::string> filter_frequent(const CoverageLedger& ledger, double threshold);

enum class Objective : uint8_t {
  AvgFifoDepth,
  PctFullCycles,
  StatementHits,
  NearMissScore,
  BugFound,
};

struct RewardTerm {
  Objective objective = Objective::AvgFifoDepth;
  std::string statement_id;  // StatementHits / NearMissScore only
  double weight = 1.0;
};

struct RewardSpec {
  std::vector<RewardTerm> terms;

  static RewardSpec single(Objective obj, const std::string& statement_id = "");
  void validate() const;
};

// Scalar reward for one run. NearMissScore(id) is the mean per-cycle
// fraction of id's components that held, in [0,1]; it equals 1 only when
// the full statement held every cycle.
double compute_reward(const SimResult& result, const RewardSpec& spec,
                      std::span<const CoverageStatement> statements);

}  // namespace covsteer
