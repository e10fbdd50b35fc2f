#pragma once

#include <span>
#include <string>
#include <vector>

#include "covsteer/harness.hpp"

namespace covsteer {

// One-sided Mann-Whitney U (H1: a stochastically greater than b), normal
// approximation with tie correction. Degenerate pooled samples give p = 0.5.
struct MannWhitneyResult {
  double u = 0.0;
  double z = 0.0;
  double p_one_sided = 0.5;
};

MannWhitneyResult mann_whitney_u(std::span<const double> a, std::span<const double> b);

struct Histogram {
  double lo = 0.0;
  double hi = 1.0;
  std::vector<uint64_t> counts;

  double bin_lo(size_t i) const;
  double bin_hi(size_t i) const;
};

Histogram make_histogram(std::span<const double> values, double lo, double hi, int bins);

// Fixed-width terminal rendering, one row per bin.
std::string text_histogram(const Histogram& h, int width = 40);

struct SeriesPoint {
  int iteration = 0;
  double mean_reward = 0.0;
  double max_reward = 0.0;
  double mean_pct_full = 0.0;
};

std::vector<SeriesPoint> reward_series(const RunLog& log);

struct ComparisonReport {
  std::vector<SeriesPoint> series_a;
  std::vector<SeriesPoint> series_b;
  double final_mean_a = 0.0;
  double final_mean_b = 0.0;
  double mean_ratio = 0.0;  // final_mean_a / final_mean_b; +inf when b == 0 < a
  MannWhitneyResult mw;     // final-iteration per-run rewards, H1: a > b
  // Histograms share fixed bin edges across both logs (rewards pooled range;
  // pct-full over [0,100]).
  std::vector<Histogram> reward_hist_a, reward_hist_b;      // per iteration
  std::vector<Histogram> pct_full_hist_a, pct_full_hist_b;  // per iteration
};

// Requires both logs to share DUT config and reward spec; ConfigMismatch otherwise.
ComparisonReport compare(const RunLog& a, const RunLog& b);

// CSV emitters. Comparison: series.csv, hist_reward.csv, hist_pct_full.csv,
// summary.txt. Report: series.csv, hist_reward.csv, hist_pct_full.csv,
// coverage.csv.
void write_comparison(const ComparisonReport& rep, const std::string& out_dir);
std::string comparison_summary(const ComparisonReport& rep);
void write_report(const RunLog& log, const std::string& out_dir);

}  // namespace covsteer
