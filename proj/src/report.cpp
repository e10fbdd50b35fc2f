#include "covsteer/report.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace covsteer {

MannWhitneyResult mann_whitney_u(std::span<const double> a, std::span<const double> b) {
  MannWhitneyResult r;
  const size_t na = a.size(), nb = b.size();
  if (na == 0 || nb == 0) throw Error("mann_whitney_u: empty sample");

  double u = 0.0;
  for (double x : a) {
    for (double y : b) {
      if (x > y)
        u += 1.0;
      else if (x == y)
        u += 0.5;
    }
  }
  r.u = u;

  // Tie correction over the pooled sample.
  std::map<double, size_t> tie_groups;
  for (double x : a) ++tie_groups[x];
  for (double y : b) ++tie_groups[y];
  const double n = static_cast<double>(na + nb);
  double tie_term = 0.0;
  for (const auto& [v, t] : tie_groups) {
    double td = static_cast<double>(t);
    tie_term += td * td * td - td;
  }

  double mean_u = static_cast<double>(na) * static_cast<double>(nb) / 2.0;
  double var_u = (static_cast<double>(na) * static_cast<double>(nb) / 12.0) *
                 ((n + 1.0) - tie_term / (n * (n - 1.0)));
  if (var_u <= 0.0) {
    r.z = 0.0;
    r.p_one_sided = 0.5;
    return r;
  }
  r.z = (u - mean_u) / std::sqrt(var_u);
  r.p_one_sided = 0.5 * std::erfc(r.z / std::sqrt(2.0));
  return r;
}

double Histogram::bin_lo(size_t i) const {
  return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(counts.size());
}

double Histogram::bin_hi(size_t i) const {
  return lo + (hi - lo) * static_cast<double>(i + 1) / static_cast<double>(counts.size());
}

Histogram make_histogram(std::span<const double> values, double lo, double hi, int bins) {
  if (bins < 1) throw Error("histogram needs at least one bin");
  if (!(lo < hi)) hi = lo + 1.0;
  Histogram h;
  h.lo = lo;
  h.hi = hi;
  h.counts.assign(static_cast<size_t>(bins), 0);
  for (double v : values) {
    double f = (v - lo) / (hi - lo);
    int b = std::clamp(static_cast<int>(f * bins), 0, bins - 1);
    ++h.counts[static_cast<size_t>(b)];
  }
  return h;
}

std::string text_histogram(const Histogram& h, int width) {
  uint64_t peak = 1;
  for (uint64_t c : h.counts) peak = std::max(peak, c);
  std::ostringstream os;
  for (size_t i = 0; i < h.counts.size(); ++i) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "[%8.3f, %8.3f) ", h.bin_lo(i), h.bin_hi(i));
    os << buf;
    int bar = static_cast<int>(static_cast<double>(h.counts[i]) / static_cast<double>(peak) * width);
    for (int k = 0; k < bar; ++k) os << '#';
    os << ' ' << h.counts[i] << '\n';
  }
  return os.str();
}

std::vector<SeriesPoint> reward_series(const RunLog& log) {
  std::vector<SeriesPoint> out;
  for (const auto& rec : log.iterations) {
    SeriesPoint p;
    p.iteration = rec.iteration;
    p.mean_reward = rec.mean_reward;
    p.max_reward = rec.max_reward;
    double pf = 0.0;
    for (const auto& row : rec.runs) pf += row.result.pct_full_cycles;
    p.mean_pct_full = rec.runs.empty() ? 0.0 : pf / static_cast<double>(rec.runs.size());
    out.push_back(p);
  }
  return out;
}

namespace {

bool same_dut(const DutConfig& a, const DutConfig& b) {
  return a.num_ports == b.num_ports && a.num_caches == b.num_caches &&
         a.fifo_capacity == b.fifo_capacity &&
         a.grants_per_cache_per_cycle == b.grants_per_cache_per_cycle && a.bug_mode == b.bug_mode &&
         a.tag_bits == b.tag_bits && a.index_bits == b.index_bits && a.offset_bits == b.offset_bits;
}

bool same_reward(const RewardSpec& a, const RewardSpec& b) {
  if (a.terms.size() != b.terms.size()) return false;
  for (size_t i = 0; i < a.terms.size(); ++i) {
    if (a.terms[i].objective != b.terms[i].objective ||
        a.terms[i].statement_id != b.terms[i].statement_id ||
        a.terms[i].weight != b.terms[i].weight)
      return false;
  }
  return true;
}

std::vector<double> iteration_rewards(const IterationRecord& rec) {
  std::vector<double> v;
  v.reserve(rec.runs.size());
  for (const auto& row : rec.runs) v.push_back(row.reward);
  return v;
}

std::vector<double> iteration_pct_full(const IterationRecord& rec) {
  std::vector<double> v;
  v.reserve(rec.runs.size());
  for (const auto& row : rec.runs) v.push_back(row.result.pct_full_cycles);
  return v;
}

constexpr int kRewardBins = 16;
constexpr int kPctFullBins = 20;

}  // namespace

ComparisonReport compare(const RunLog& a, const RunLog& b) {
  if (a.iterations.empty() || b.iterations.empty())
    throw ConfigMismatch("cannot compare: a log has no iterations");
  if (!same_dut(a.header.config.dut, b.header.config.dut))
    throw ConfigMismatch("cannot compare: DUT configs differ");
  if (!same_reward(a.header.config.reward, b.header.config.reward))
    throw ConfigMismatch("cannot compare: reward specs differ");

  ComparisonReport rep;
  rep.series_a = reward_series(a);
  rep.series_b = reward_series(b);
  rep.final_mean_a = rep.series_a.back().mean_reward;
  rep.final_mean_b = rep.series_b.back().mean_reward;
  if (rep.final_mean_b != 0.0)
    rep.mean_ratio = rep.final_mean_a / rep.final_mean_b;
  else
    rep.mean_ratio = rep.final_mean_a == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();

  std::vector<double> fa = iteration_rewards(a.iterations.back());
  std::vector<double> fb = iteration_rewards(b.iterations.back());
  rep.mw = mann_whitney_u(fa, fb);

  // Shared fixed bin edges across both logs: rewards over the pooled range,
  // pct-full over [0,100].
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const RunLog* log : {&a, &b}) {
    for (const auto& rec : log->iterations) {
      for (const auto& row : rec.runs) {
        lo = std::min(lo, row.reward);
        hi = std::max(hi, row.reward);
      }
    }
  }
  if (!std::isfinite(lo)) {
    lo = 0.0;
    hi = 1.0;
  }
  for (const auto& rec : a.iterations) {
    rep.reward_hist_a.push_back(make_histogram(iteration_rewards(rec), lo, hi, kRewardBins));
    rep.pct_full_hist_a.push_back(make_histogram(iteration_pct_full(rec), 0.0, 100.0, kPctFullBins));
  }
  for (const auto& rec : b.iterations) {
    rep.reward_hist_b.push_back(make_histogram(iteration_rewards(rec), lo, hi, kRewardBins));
    rep.pct_full_hist_b.push_back(make_histogram(iteration_pct_full(rec), 0.0, 100.0, kPctFullBins));
  }
  return rep;
}

namespace {

void write_series_csv(std::ostream& os, const std::vector<SeriesPoint>& sa,
                      const std::vector<SeriesPoint>* sb) {
  os << "iteration,mean_reward_a,max_reward_a,mean_pct_full_a";
  if (sb) os << ",mean_reward_b,max_reward_b,mean_pct_full_b";
  os << '\n';
  size_t n = sa.size();
  if (sb) n = std::max(n, sb->size());
  for (size_t i = 0; i < n; ++i) {
    os << i;
    if (i < sa.size())
      os << ',' << sa[i].mean_reward << ',' << sa[i].max_reward << ',' << sa[i].mean_pct_full;
    else
      os << ",,,";
    if (sb) {
      if (i < sb->size())
        os << ',' << (*sb)[i].mean_reward << ',' << (*sb)[i].max_reward << ',' << (*sb)[i].mean_pct_full;
      else
        os << ",,,";
    }
    os << '\n';
  }
}

void write_hist_csv(std::ostream& os, const std::vector<Histogram>& ha,
                    const std::vector<Histogram>* hb) {
  os << "log,iteration,bin_lo,bin_hi,count\n";
  auto dump = [&os](const char* tag, const std::vector<Histogram>& hs) {
    for (size_t it = 0; it < hs.size(); ++it) {
      const Histogram& h = hs[it];
      for (size_t bin = 0; bin < h.counts.size(); ++bin) {
        os << tag << ',' << it << ',' << h.bin_lo(bin) << ',' << h.bin_hi(bin) << ','
           << h.counts[bin] << '\n';
      }
    }
  };
  dump("a", ha);
  if (hb) dump("b", *hb);
}

std::ofstream open_out(const std::string& dir, const std::string& name) {
  std::filesystem::create_directories(dir);
  std::string path = dir + "/" + name;
  std::ofstream f(path);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  return f;
}

}  // namespace

std::string comparison_summary(const ComparisonReport& rep) {
  std::ostringstream os;
  os << "final-iteration mean reward: a=" << rep.final_mean_a << " b=" << rep.final_mean_b
     << " ratio=" << rep.mean_ratio << '\n';
  os << "mann-whitney (H1: a > b): U=" << rep.mw.u << " z=" << rep.mw.z
     << " p=" << rep.mw.p_one_sided << '\n';
  return os.str();
}

void write_comparison(const ComparisonReport& rep, const std::string& out_dir) {
  {
    auto f = open_out(out_dir, "series.csv");
    write_series_csv(f, rep.series_a, &rep.series_b);
  }
  {
    auto f = open_out(out_dir, "hist_reward.csv");
    write_hist_csv(f, rep.reward_hist_a, &rep.reward_hist_b);
  }
  {
    auto f = open_out(out_dir, "hist_pct_full.csv");
    write_hist_csv(f, rep.pct_full_hist_a, &rep.pct_full_hist_b);
  }
  {
    auto f = open_out(out_dir, "summary.txt");
    f << comparison_summary(rep);
  }
}

void write_report(const RunLog& log, const std::string& out_dir) {
  std::vector<SeriesPoint> series = reward_series(log);
  {
    auto f = open_out(out_dir, "series.csv");
    write_series_csv(f, series, nullptr);
  }

  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& rec : log.iterations) {
    for (const auto& row : rec.runs) {
      lo = std::min(lo, row.reward);
      hi = std::max(hi, row.reward);
    }
  }
  if (!std::isfinite(lo)) {
    lo = 0.0;
    hi = 1.0;
  }
  std::vector<Histogram> rh, ph;
  for (const auto& rec : log.iterations) {
    rh.push_back(make_histogram(iteration_rewards(rec), lo, hi, kRewardBins));
    ph.push_back(make_histogram(iteration_pct_full(rec), 0.0, 100.0, kPctFullBins));
  }
  {
    auto f = open_out(out_dir, "hist_reward.csv");
    write_hist_csv(f, rh, nullptr);
  }
  {
    auto f = open_out(out_dir, "hist_pct_full.csv");
    write_hist_csv(f, ph, nullptr);
  }
  {
    auto f = open_out(out_dir, "coverage.csv");
    // Final ledger snapshot: the last iteration's view.
    f << "statement,runs,hits,hits_per_run\n";
    if (!log.iterations.empty()) {
      for (const auto& [id, e] : log.iterations.back().ledger)
        f << id << ',' << e.runs << ',' << e.hits << ',' << e.hits_per_run() << '\n';
    }
  }
}

}  // namespace covsteer
