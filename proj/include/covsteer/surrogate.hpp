#pragma once

#include <span>
#include <string>
#include <vector>

#include "covsteer/mlp.hpp"
#include "covsteer/stimulus.hpp"

namespace covsteer {

struct DatasetRow {
  std::vector<double> features;  // encoded knobs
  double reward = 0.0;
  int iteration = 0;
  uint64_t seed = 0;
};

struct SurrogateDataset {
  std::vector<DatasetRow> rows;

  size_t dimension() const { return rows.empty() ? 0 : rows.front().features.size(); }
  void add(std::vector<double> features, double reward, int iteration, uint64_t seed);
};

struct SearchConfig {
  int num_candidates = 10000;
  int top_k = 16;
  uint64_t seed = 0;
  std::vector<int> hidden = {32, 32};
  // Termination: stop when proposal entropy stays below entropy_eps (nats,
  // summed over per-knob histograms) and relative best-reward improvement
  // stays below reward_eps across a window of `window` iterations.
  int entropy_bins = 8;
  double entropy_eps = 0.5;
  double reward_eps = 0.01;
  int window = 3;

  void validate() const;
};

struct FitResult {
  MlpModel model;
  double final_loss = 0.0;
};

// Regresses reward on encoded knobs. Requires at least 2*d rows.
FitResult fit_surrogate(const SurrogateDataset& data, const TrainConfig& train_cfg,
                        const std::vector<int>& hidden);

// Random search over the surrogate: scores num_candidates uniform samples
// and returns the k best by predicted reward, descending, ties broken by
// sample order. k defaults to cfg.top_k.
std::vector<KnobVector> propose_knobs(const MlpModel& model, const KnobSchema& schema,
                                      const SearchConfig& cfg, int k = -1);

// Summed per-knob Shannon entropy (nats) of encoded proposals, each knob
// histogrammed over `bins` equal cells of [0,1].
double proposal_entropy(const std::vector<std::vector<double>>& encoded_proposals, int bins);

struct IterationSummary {
  double best_reward = 0.0;                          // best observed so far
  std::vector<std::vector<double>> proposals;        // encoded exploit proposals
};

struct Termination {
  bool stop = false;
  std::string reason;
};

Termination check_termination(std::span<const IterationSummary> history, const SearchConfig& cfg);

}  // namespace covsteer
