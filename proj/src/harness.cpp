#include "covsteer/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>

#include "covsteer/rng.hpp"
#include "covsteer/version.hpp"

namespace covsteer {

std::string strategy_name(Strategy s) {
  switch (s) {
    case Strategy::Random: return "random";
    case Strategy::Surrogate: return "surrogate";
    case Strategy::Dqn: return "dqn";
  }
  return "random";
}

Strategy strategy_from_name(const std::string& name) {
  if (name == "random") return Strategy::Random;
  if (name == "surrogate") return Strategy::Surrogate;
  if (name == "dqn") return Strategy::Dqn;
  throw ConfigError("unknown strategy '" + name + "' (expected random|surrogate|dqn)");
}

void ExperimentConfig::validate() const {
  dut.validate();
  schema.validate();
  if (schema.num_ports() != dut.num_ports)
    throw ConfigError("schema num_ports does not match dut.num_ports");
  reward.validate();
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (iterations < 1) throw ConfigError("iterations must be >= 1");
  if (cycles_per_run < 1) throw ConfigError("cycles_per_run must be >= 1");
  if (explore_fraction < 0 || explore_fraction > 1)
    throw ConfigError("explore_fraction must be in [0,1]");
  if (rarity_threshold < 0) throw ConfigError("rarity_threshold must be >= 0");
  if (workers < 0) throw ConfigError("workers must be >= 0");
  train.validate();
  search.validate();
  agent.validate();
  // Reward statements must be resolvable against the statement set.
  for (const auto& t : reward.terms) {
    if (t.statement_id.empty()) continue;
    bool found = false;
    for (const auto& st : statements)
      if (st.id == t.statement_id) found = true;
    if (!found)
      throw ConfigError("reward references statement '" + t.statement_id +
                        "' which is not in the statement set");
  }
}

namespace {

void write_trace_file(const std::string& trace_dir, int iteration, int run_idx,
                      const std::vector<CycleStats>& trace) {
  std::filesystem::create_directories(trace_dir);
  std::ostringstream name;
  name << trace_dir << "/iter" << iteration << "_run" << run_idx << ".trace";
  std::ofstream f(name.str());
  if (!f) throw IoError("cannot open trace file '" + name.str() + "'");
  for (const auto& cs : trace) {
    f << "cycle=" << cs.cycle << " depth=";
    for (size_t p = 0; p < cs.fifo_depth.size(); ++p) {
      if (p) f << ',';
      f << cs.fifo_depth[p];
    }
    f << " grants=";
    for (size_t g = 0; g < cs.grants.size(); ++g) {
      if (g) f << ',';
      f << cs.grants[g].port << ':' << cs.grants[g].cache;
    }
    f << '\n';
  }
}

}  // namespace

IterationRecord run_iteration(const ExperimentConfig& cfg,
                              const std::vector<CoverageStatement>& statements,
                              const std::vector<KnobVector>& proposals,
                              const std::vector<uint64_t>& seeds, int iteration,
                              const std::string& trace_dir) {
  if (proposals.size() != seeds.size() || proposals.size() != static_cast<size_t>(cfg.batch_size))
    throw ConfigError("run_iteration: |proposals| and |seeds| must equal batch_size");

  IterationRecord rec;
  rec.iteration = iteration;
  rec.runs.resize(proposals.size());

  std::vector<char> done(proposals.size(), 0);
  std::atomic<size_t> next{0};
  std::atomic<bool> failed{false};
  std::string first_error;
  std::mutex err_mu;

  auto worker = [&]() {
    for (;;) {
      size_t i = next.fetch_add(1);
      if (i >= proposals.size() || failed.load()) return;
      try {
        RunRow row;
        row.knobs = proposals[i];
        row.stream_seed = seeds[i];
        PortStreams streams = generate_stream(row.knobs, row.stream_seed, cfg.cycles_per_run);
        if (trace_dir.empty()) {
          row.result = run_simulation(cfg.dut, streams, cfg.cycles_per_run, statements);
        } else {
          std::vector<CycleStats> trace;
          row.result = run_simulation(cfg.dut, streams, cfg.cycles_per_run, statements,
                                      [&trace](const CycleStats& cs) { trace.push_back(cs); });
          write_trace_file(trace_dir, iteration, static_cast<int>(i), trace);
        }
        row.reward = compute_reward(row.result, cfg.reward, statements);
        rec.runs[i] = std::move(row);
        done[i] = 1;
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lk(err_mu);
        if (first_error.empty()) first_error = e.what();
        failed.store(true);
        return;
      }
    }
  };

  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  size_t n_workers = std::min<size_t>(cfg.workers > 0 ? static_cast<size_t>(cfg.workers) : hw,
                                      proposals.size());
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_workers);
    for (size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  if (failed.load()) {
    // Keep completed rows, in order, and flag the record.
    std::vector<RunRow> partial;
    for (size_t i = 0; i < rec.runs.size(); ++i)
      if (done[i]) partial.push_back(std::move(rec.runs[i]));
    rec.runs = std::move(partial);
    rec.valid = false;
    rec.error = first_error;
  }

  double sum = 0.0, best = 0.0;
  for (size_t i = 0; i < rec.runs.size(); ++i) {
    sum += rec.runs[i].reward;
    best = i == 0 ? rec.runs[i].reward : std::max(best, rec.runs[i].reward);
  }
  rec.mean_reward = rec.runs.empty() ? 0.0 : sum / static_cast<double>(rec.runs.size());
  rec.max_reward = best;
  return rec;
}

namespace {

std::vector<uint64_t> batch_seeds(const ExperimentConfig& cfg, uint64_t stream, int iteration) {
  std::vector<uint64_t> seeds(static_cast<size_t>(cfg.batch_size));
  for (int i = 0; i < cfg.batch_size; ++i)
    seeds[static_cast<size_t>(i)] =
        derive_seed(cfg.master_seed, seed_stream::tag(stream, iteration), static_cast<uint64_t>(i));
  return seeds;
}

std::vector<KnobVector> random_batch(const ExperimentConfig& cfg, int iteration, int count,
                                     int offset = 0) {
  std::vector<KnobVector> out;
  out.reserve(static_cast<size_t>(count));
  for (int i = 0; i < count; ++i) {
    uint64_t s = derive_seed(cfg.master_seed, seed_stream::tag(seed_stream::kKnobs, iteration),
                             static_cast<uint64_t>(offset + i));
    out.push_back(cfg.schema.sample(s));
  }
  return out;
}

std::string iteration_line(const IterationRecord& rec, Strategy strategy) {
  std::ostringstream os;
  os << "iter " << rec.iteration << "  mean_reward=" << rec.mean_reward
     << "  max_reward=" << rec.max_reward;
  if (rec.proposal_entropy) os << "  entropy=" << *rec.proposal_entropy;
  if (rec.epsilon) os << "  epsilon=" << *rec.epsilon;
  if (!rec.valid) os << "  INVALID: " << rec.error;
  os << "  [" << strategy_name(strategy) << "]";
  return os.str();
}

}  // namespace

RunLog run_experiment(const ExperimentConfig& cfg, const ProgressFn& progress,
                      const std::string& trace_dir) {
  cfg.validate();

  RunLog log;
  log.header.format_version = 1;
  log.header.tool_version = kToolVersion;
  log.header.config = cfg;

  std::vector<CoverageStatement> statements = cfg.statements;
  CoverageLedger ledger(cfg.rarity_threshold);
  SurrogateDataset dataset;
  std::vector<IterationSummary> history;
  double best_observed = 0.0;
  bool any_observed = false;

  std::unique_ptr<DqnAgent> agent;
  if (cfg.strategy == Strategy::Dqn) {
    AgentConfig acfg = cfg.agent;
    acfg.seed = derive_seed(cfg.master_seed, seed_stream::tag(seed_stream::kFit, 0));
    agent = std::make_unique<DqnAgent>(cfg.schema, acfg);
  }

  const int explore_n =
      static_cast<int>(std::floor(cfg.explore_fraction * static_cast<double>(cfg.batch_size)));

  for (int iter = 0; iter < cfg.iterations; ++iter) {
    std::vector<KnobVector> proposals;
    std::optional<double> entropy;

    if (iter == 0 || cfg.strategy == Strategy::Random ||
        (cfg.strategy == Strategy::Surrogate &&
         dataset.rows.size() < 2 * cfg.schema.dimension())) {
      // Bootstrap (and the whole Random baseline): uniform draws. The
      // surrogate also keeps bootstrapping until it has the 2*d rows its
      // fit precondition requires.
      proposals = random_batch(cfg, iter, cfg.batch_size);
    } else if (cfg.strategy == Strategy::Surrogate) {
      TrainConfig tc = cfg.train;
      tc.seed = derive_seed(cfg.master_seed, seed_stream::tag(seed_stream::kFit, iter));
      FitResult fit = fit_surrogate(dataset, tc, cfg.search.hidden);
      SearchConfig sc = cfg.search;
      sc.seed = derive_seed(cfg.master_seed, seed_stream::tag(seed_stream::kSearch, iter));
      int exploit_n = cfg.batch_size - explore_n;
      std::vector<KnobVector> exploit = propose_knobs(fit.model, cfg.schema, sc, exploit_n);

      std::vector<std::vector<double>> encoded;
      encoded.reserve(exploit.size());
      for (const auto& kv : exploit) encoded.push_back(cfg.schema.encode(kv));
      entropy = proposal_entropy(encoded, cfg.search.entropy_bins);
      history.push_back(IterationSummary{best_observed, std::move(encoded)});

      proposals = std::move(exploit);
      std::vector<KnobVector> explore = random_batch(cfg, iter, explore_n, exploit_n);
      proposals.insert(proposals.end(), explore.begin(), explore.end());
    } else {
      proposals = agent->propose(cfg.batch_size);
    }

    std::vector<uint64_t> seeds = batch_seeds(cfg, seed_stream::kSim, iter);
    IterationRecord rec = run_iteration(cfg, statements, proposals, seeds, iter, trace_dir);
    rec.proposal_entropy = entropy;
    if (cfg.strategy == Strategy::Dqn) rec.epsilon = agent->epsilon();

    for (const auto& row : rec.runs) {
      ledger.record_run(row.result);
      if (!any_observed || row.reward > best_observed) {
        best_observed = row.reward;
        any_observed = true;
      }
    }
    for (const auto& [id, e] : ledger.entries()) rec.ledger.emplace_back(id, e);

    if (!rec.valid) {
      log.iterations.push_back(std::move(rec));
      log.stop_reason = "iteration " + std::to_string(iter) + " aborted: " + log.iterations.back().error;
      if (progress) progress(iteration_line(log.iterations.back(), cfg.strategy));
      break;
    }

    // Feed the learners.
    if (cfg.strategy == Strategy::Surrogate) {
      for (const auto& row : rec.runs)
        dataset.add(cfg.schema.encode(row.knobs), row.reward, iter, row.stream_seed);
      if (!history.empty()) history.back().best_reward = best_observed;
    } else if (cfg.strategy == Strategy::Dqn) {
      for (const auto& row : rec.runs) {
        Experience e;
        e.state = agent->zero_state();
        e.action = static_cast<uint32_t>(agent->actions().knobs_to_action(row.knobs));
        e.reward = row.reward;
        e.next_state = e.state;
        e.terminal = true;
        agent->store(e);
      }
      if (agent->buffer().size() >= static_cast<size_t>(cfg.agent.batch_size)) {
        for (int s = 0; s < cfg.agent.train_steps_per_iteration; ++s) agent->train_step();
      }
    }

    if (cfg.near_miss_expansion) statements = expand_near_miss(ledger, statements);

    log.iterations.push_back(std::move(rec));
    if (progress) progress(iteration_line(log.iterations.back(), cfg.strategy));

    if (cfg.strategy == Strategy::Surrogate && iter + 1 < cfg.iterations) {
      Termination t = check_termination(history, cfg.search);
      if (t.stop) {
        log.stop_reason = t.reason;
        break;
      }
    }
  }
  return log;
}

}  // namespace covsteer
