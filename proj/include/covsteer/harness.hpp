#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "covsteer/coverage.hpp"
#include "covsteer/dqn.hpp"
#include "covsteer/dut.hpp"
#include "covsteer/stimulus.hpp"
#include "covsteer/surrogate.hpp"

namespace covsteer {

class ConfigMismatch : public Error {
 public:
  using Error::Error;
};

enum class Strategy : uint8_t { Random, Surrogate, Dqn };

std::string strategy_name(Strategy s);
Strategy strategy_from_name(const std::string& name);

struct ExperimentConfig {
  DutConfig dut;
  KnobSchema schema;  // defaults to KnobSchema::defaults(dut)
  std::vector<CoverageStatement> statements;
  RewardSpec reward = RewardSpec::single(Objective::AvgFifoDepth);
  Strategy strategy = Strategy::Random;
  int batch_size = 32;
  int iterations = 10;
  uint64_t cycles_per_run = 10000;
  uint64_t master_seed = 1;
  // Fraction of each post-bootstrap surrogate batch kept uniformly random.
  double explore_fraction = 0.25;
  bool near_miss_expansion = true;
  double rarity_threshold = 1.0;
  TrainConfig train;
  SearchConfig search;
  AgentConfig agent;
  int workers = 0;  // 0 = hardware concurrency

  void validate() const;
};

struct RunRow {
  KnobVector knobs;
  uint64_t stream_seed = 0;
  SimResult result;
  double reward = 0.0;
};

struct IterationRecord {
  int iteration = 0;
  std::vector<RunRow> runs;
  double mean_reward = 0.0;
  double max_reward = 0.0;
  std::optional<double> proposal_entropy;  // surrogate iterations >= 1
  std::optional<double> epsilon;           // dqn
  std::vector<std::pair<std::string, LedgerEntry>> ledger;  // snapshot after this iteration
  bool valid = true;
  std::string error;
};

struct RunLogHeader {
  int format_version = 1;
  std::string tool_version;
  ExperimentConfig config;
};

struct RunLog {
  RunLogHeader header;
  std::vector<IterationRecord> iterations;
  std::optional<std::string> stop_reason;
};

using ProgressFn = std::function<void(const std::string& line)>;

// Seed-derivation streams; a RunLog replays from its header alone because
// every random draw descends from master_seed through these tags.
namespace seed_stream {
inline constexpr uint64_t kKnobs = 1;
inline constexpr uint64_t kSim = 2;
inline constexpr uint64_t kFit = 3;
inline constexpr uint64_t kSearch = 4;
inline uint64_t tag(uint64_t stream, int iteration) {
  return (stream << 32) | static_cast<uint64_t>(iteration);
}
}  // namespace seed_stream

// Simulates one batch: proposals[i] against stream seeds[i], concurrently,
// reduced in index order. A simulation error flags the record invalid and
// keeps the rows completed so far.
IterationRecord run_iteration(const ExperimentConfig& cfg,
                              const std::vector<CoverageStatement>& statements,
                              const std::vector<KnobVector>& proposals,
                              const std::vector<uint64_t>& seeds, int iteration,
                              const std::string& trace_dir = "");

// The full loop: iteration 0 is uniform random bootstrap; later iterations
// use the configured strategy's proposals. Surrogate runs may stop early on
// the entropy/no-gain termination rule.
RunLog run_experiment(const ExperimentConfig& cfg, const ProgressFn& progress = nullptr,
                      const std::string& trace_dir = "");

}  // namespace covsteer
