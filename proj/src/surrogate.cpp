#include "covsteer/surrogate.hpp"

#include <algorithm>
#include <cmath>

#include "covsteer/rng.hpp"

namespace covsteer {

void SurrogateDataset::add(std::vector<double> features, double reward, int iteration, uint64_t seed) {
  if (!rows.empty() && features.size() != rows.front().features.size())
    throw DimensionMismatch("dataset row dimension mismatch");
  if (!std::isfinite(reward)) throw Error("dataset reward not finite");
  rows.push_back(DatasetRow{std::move(features), reward, iteration, seed});
}

void SearchConfig::validate() const {
  if (top_k < 1) throw ConfigError("search.top_k must be >= 1");
  if (num_candidates < top_k) throw ConfigError("search.num_candidates must be >= top_k");
  if (entropy_bins < 2) throw ConfigError("search.entropy_bins must be >= 2");
  if (window < 1) throw ConfigError("search.window must be >= 1");
  if (entropy_eps < 0 || reward_eps < 0) throw ConfigError("search thresholds must be >= 0");
  if (hidden.empty()) throw ConfigError("search.hidden must name at least one layer");
}

FitResult fit_surrogate(const SurrogateDataset& data, const TrainConfig& train_cfg,
                        const std::vector<int>& hidden) {
  const size_t d = data.dimension();
  if (d == 0 || data.rows.size() < 2 * d)
    throw Error("fit_surrogate needs at least 2*d rows (d=" + std::to_string(d) + ", have " +
                std::to_string(data.rows.size()) + ")");

  std::vector<int> sizes;
  sizes.push_back(static_cast<int>(d));
  for (int h : hidden) sizes.push_back(h);
  sizes.push_back(1);

  // Standardized targets train better-conditioned; the affine transform is
  // folded back into the linear output layer afterwards, so the returned
  // model predicts raw rewards.
  double mean = 0.0;
  for (const auto& r : data.rows) mean += r.reward;
  mean /= static_cast<double>(data.rows.size());
  double var = 0.0;
  for (const auto& r : data.rows) var += (r.reward - mean) * (r.reward - mean);
  double scale = std::sqrt(var / static_cast<double>(data.rows.size()));
  if (scale < 1e-9) scale = 1.0;

  std::vector<std::vector<double>> X, Y;
  X.reserve(data.rows.size());
  Y.reserve(data.rows.size());
  for (const auto& r : data.rows) {
    X.push_back(r.features);
    Y.push_back({(r.reward - mean) / scale});
  }

  FitResult out;
  out.model = mlp_init(sizes, train_cfg.seed);
  // Zero output head: with centered targets the fit starts at the dataset
  // mean, so a constant reward is reproduced exactly.
  for (double& w : out.model.weights.back()) w = 0.0;
  for (double& b : out.model.biases.back()) b = 0.0;
  std::vector<double> losses = mlp_train(out.model, X, Y, train_cfg);
  out.final_loss = losses.back() * scale * scale;

  for (double& w : out.model.weights.back()) w *= scale;
  for (double& b : out.model.biases.back()) b = b * scale + mean;
  return out;
}

std::vector<KnobVector> propose_knobs(const MlpModel& model, const KnobSchema& schema,
                                      const SearchConfig& cfg, int k) {
  cfg.validate();
  if (k < 0) k = cfg.top_k;
  if (k == 0) return {};
  if (k > cfg.num_candidates) throw ConfigError("propose_knobs: k exceeds num_candidates");

  struct Scored {
    double pred;
    int order;
  };
  std::vector<Scored> scored(static_cast<size_t>(cfg.num_candidates));
  std::vector<KnobVector> candidates(static_cast<size_t>(cfg.num_candidates));
  for (int i = 0; i < cfg.num_candidates; ++i) {
    uint64_t s = derive_seed(cfg.seed, 0x5EA3C4ull, static_cast<uint64_t>(i));
    candidates[static_cast<size_t>(i)] = schema.sample(s);
    std::vector<double> f = schema.encode(candidates[static_cast<size_t>(i)]);
    scored[static_cast<size_t>(i)] = {mlp_forward(model, f)[0], i};
  }
  // Descending by prediction, ties by sample order.
  std::vector<int> idx(static_cast<size_t>(cfg.num_candidates));
  for (int i = 0; i < cfg.num_candidates; ++i) idx[static_cast<size_t>(i)] = i;
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
    return scored[static_cast<size_t>(a)].pred > scored[static_cast<size_t>(b)].pred;
  });

  std::vector<KnobVector> out;
  out.reserve(static_cast<size_t>(k));
  for (int i = 0; i < k; ++i) out.push_back(candidates[static_cast<size_t>(idx[static_cast<size_t>(i)])]);
  return out;
}

double proposal_entropy(const std::vector<std::vector<double>>& encoded_proposals, int bins) {
  if (encoded_proposals.empty()) return 0.0;
  const size_t d = encoded_proposals.front().size();
  const double n = static_cast<double>(encoded_proposals.size());
  double total = 0.0;
  std::vector<int> hist(static_cast<size_t>(bins));
  for (size_t knob = 0; knob < d; ++knob) {
    std::fill(hist.begin(), hist.end(), 0);
    for (const auto& row : encoded_proposals) {
      int b = static_cast<int>(row[knob] * bins);
      b = std::clamp(b, 0, bins - 1);
      ++hist[static_cast<size_t>(b)];
    }
    for (int c : hist) {
      if (c == 0) continue;
      double p = c / n;
      total -= p * std::log(p);
    }
  }
  return total;
}

Termination check_termination(std::span<const IterationSummary> history, const SearchConfig& cfg) {
  cfg.validate();
  Termination t;
  if (history.size() < static_cast<size_t>(cfg.window)) return t;

  const size_t n = history.size();
  const size_t first = n - static_cast<size_t>(cfg.window);
  double max_entropy = 0.0;
  for (size_t i = first; i < n; ++i)
    max_entropy = std::max(max_entropy, proposal_entropy(history[i].proposals, cfg.entropy_bins));
  if (max_entropy >= cfg.entropy_eps) return t;

  double base = history[first].best_reward;
  double last = history[n - 1].best_reward;
  double rel_gain = (last - base) / std::max(std::abs(base), 1e-12);
  if (rel_gain >= cfg.reward_eps) return t;

  t.stop = true;
  t.reason = "entropy " + std::to_string(max_entropy) + " < " + std::to_string(cfg.entropy_eps) +
             " and relative reward gain " + std::to_string(rel_gain) + " < " +
             std::to_string(cfg.reward_eps) + " over " + std::to_string(cfg.window) + " iterations";
  return t;
}

}  // namespace covsteer
