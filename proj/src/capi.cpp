#include "covsteer.h"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "covsteer/config.hpp"
#include "covsteer/harness.hpp"
#include "covsteer/report.hpp"
#include "covsteer/version.hpp"

using namespace covsteer;

struct covsteer_experiment {
  ExperimentConfig config;
  std::string trace_dir;
};

namespace {

thread_local std::string g_last_error;

covsteer_status set_error(covsteer_status st, const std::string& msg) {
  g_last_error = msg;
  return st;
}

// Exception -> status mapping shared by every entry point.
template <typename Fn>
covsteer_status guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigMismatch& e) {
    return set_error(COVSTEER_ERR_MISMATCH, e.what());
  } catch (const ConfigError& e) {
    return set_error(COVSTEER_ERR_CONFIG, e.what());
  } catch (const IoError& e) {
    return set_error(COVSTEER_ERR_IO, e.what());
  } catch (const Error& e) {
    return set_error(COVSTEER_ERR_RUNTIME, e.what());
  } catch (const std::exception& e) {
    return set_error(COVSTEER_ERR_RUNTIME, e.what());
  }
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

extern "C" {

const char* covsteer_version(void) {
  static const std::string v = std::string(kToolName) + " " + kToolVersion;
  return v.c_str();
}

const char* covsteer_last_error(void) { return g_last_error.c_str(); }

covsteer_status covsteer_experiment_open(const char* config_path, covsteer_experiment** out) {
  if (!config_path || !out) return set_error(COVSTEER_ERR_INVALID_ARG, "null argument");
  *out = nullptr;
  return guarded([&]() {
    auto* exp = new covsteer_experiment{config_from_json_file(config_path), ""};
    *out = exp;
    return COVSTEER_OK;
  });
}

covsteer_status covsteer_experiment_open_text(const char* config_json, covsteer_experiment** out) {
  if (!config_json || !out) return set_error(COVSTEER_ERR_INVALID_ARG, "null argument");
  *out = nullptr;
  return guarded([&]() {
    auto* exp = new covsteer_experiment{config_from_json_text(config_json), ""};
    *out = exp;
    return COVSTEER_OK;
  });
}

void covsteer_experiment_free(covsteer_experiment* exp) { delete exp; }

covsteer_status covsteer_experiment_set_strategy(covsteer_experiment* exp, const char* strategy) {
  if (!exp || !strategy) return set_error(COVSTEER_ERR_INVALID_ARG, "null argument");
  return guarded([&]() {
    exp->config.strategy = strategy_from_name(strategy);
    return COVSTEER_OK;
  });
}

covsteer_status covsteer_experiment_set_iterations(covsteer_experiment* exp, int iterations) {
  if (!exp) return set_error(COVSTEER_ERR_INVALID_ARG, "null argument");
  if (iterations < 1) return set_error(COVSTEER_ERR_INVALID_ARG, "iterations must be >= 1");
  exp->config.iterations = iterations;
  return COVSTEER_OK;
}

covsteer_status covsteer_experiment_set_seed(covsteer_experiment* exp, uint64_t master_seed) {
  if (!exp) return set_error(COVSTEER_ERR_INVALID_ARG, "null argument");
  exp->config.master_seed = master_seed;
  return COVSTEER_OK;
}

covsteer_status covsteer_experiment_set_trace_dir(covsteer_experiment* exp, const char* trace_dir) {
  if (!exp) return set_error(COVSTEER_ERR_INVALID_ARG, "null argument");
  exp->trace_dir = trace_dir ? trace_dir : "";
  return COVSTEER_OK;
}

covsteer_status covsteer_experiment_config_json(const covsteer_experiment* exp, char** out_json) {
  if (!exp || !out_json) return set_error(COVSTEER_ERR_INVALID_ARG, "null argument");
  return guarded([&]() {
    *out_json = dup_string(config_to_json_text(exp->config));
    return COVSTEER_OK;
  });
}

covsteer_status covsteer_experiment_run(covsteer_experiment* exp, const char* runlog_path,
                                        covsteer_progress_fn progress, void* user) {
  if (!exp || !runlog_path) return set_error(COVSTEER_ERR_INVALID_ARG, "null argument");
  return guarded([&]() {
    ProgressFn cb;
    if (progress) cb = [progress, user](const std::string& line) { progress(line.c_str(), user); };
    RunLog log = run_experiment(exp->config, cb, exp->trace_dir);
    runlog_save(log, runlog_path);
    return COVSTEER_OK;
  });
}

covsteer_status covsteer_validate_config(const char* config_path) {
  if (!config_path) return set_error(COVSTEER_ERR_INVALID_ARG, "null argument");
  return guarded([&]() {
    config_from_json_file(config_path);
    return COVSTEER_OK;
  });
}

covsteer_status covsteer_compare(const char* log_a_path, const char* log_b_path,
                                 const char* out_dir, double* out_p_value,
                                 double* out_mean_ratio) {
  if (!log_a_path || !log_b_path || !out_dir)
    return set_error(COVSTEER_ERR_INVALID_ARG, "null argument");
  return guarded([&]() {
    RunLog a = runlog_load(log_a_path);
    RunLog b = runlog_load(log_b_path);
    ComparisonReport rep = compare(a, b);
    write_comparison(rep, out_dir);
    if (out_p_value) *out_p_value = rep.mw.p_one_sided;
    if (out_mean_ratio) *out_mean_ratio = rep.mean_ratio;
    return COVSTEER_OK;
  });
}

covsteer_status covsteer_report(const char* log_path, const char* out_dir, char** out_text) {
  if (!log_path || !out_dir) return set_error(COVSTEER_ERR_INVALID_ARG, "null argument");
  return guarded([&]() {
    RunLog log = runlog_load(log_path);
    write_report(log, out_dir);
    if (out_text) {
      std::string text;
      if (!log.iterations.empty()) {
        std::vector<double> rewards;
        for (const auto& row : log.iterations.back().runs) rewards.push_back(row.reward);
        double lo = 0.0, hi = 1.0;
        if (!rewards.empty()) {
          lo = *std::min_element(rewards.begin(), rewards.end());
          hi = *std::max_element(rewards.begin(), rewards.end());
        }
        Histogram h = make_histogram(rewards, lo, hi, 16);
        text = "final-iteration reward histogram:\n" + text_histogram(h);
      }
      *out_text = dup_string(text);
    }
    return COVSTEER_OK;
  });
}

covsteer_status covsteer_replay_check(const char* log_path, int* out_identical) {
  if (!log_path || !out_identical) return set_error(COVSTEER_ERR_INVALID_ARG, "null argument");
  return guarded([&]() {
    std::ifstream f(log_path, std::ios::binary);
    if (!f) throw ConfigError("cannot open runlog '" + std::string(log_path) + "'");
    std::string original((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    RunLog parsed = runlog_from_text(original);
    RunLog replayed = run_experiment(parsed.header.config);
    *out_identical = runlog_to_text(replayed) == original ? 1 : 0;
    return COVSTEER_OK;
  });
}

void covsteer_string_free(char* s) { delete[] s; }

}  // extern "C"
