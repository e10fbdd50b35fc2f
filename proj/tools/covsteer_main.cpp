// covsteer CLI: run experiments, compare run logs, emit report CSVs.
// Talks to the engine exclusively through the C API in covsteer.h.

#include <cstdio>
#include <cstdlib>
#include <string>

#include <CLI11.hpp>

#include "covsteer.h"

namespace {

int status_to_exit(covsteer_status st) {
  switch (st) {
    case COVSTEER_OK:
      return 0;
    case COVSTEER_ERR_INVALID_ARG:
    case COVSTEER_ERR_CONFIG:
    case COVSTEER_ERR_MISMATCH:
      return 2;
    case COVSTEER_ERR_IO:
    case COVSTEER_ERR_RUNTIME:
      return 1;
  }
  return 1;
}

int fail(covsteer_status st) {
  std::fprintf(stderr, "error: %s\n", covsteer_last_error());
  return status_to_exit(st);
}

std::string default_out_dir() {
  const char* env = std::getenv("COVSTEER_OUT_DIR");
  return env && *env ? env : ".";
}

void print_progress(const char* line, void*) { std::printf("%s\n", line); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{std::string(covsteer_version()) +
               " - ML-steered constrained-random stimulus for a cache-controller model"};
  app.require_subcommand(1);

  // run
  std::string run_config, run_out = default_out_dir(), run_strategy;
  int run_iterations = 0;
  uint64_t run_seed = 0;
  bool run_has_seed = false, run_trace = false;
  auto* run = app.add_subcommand("run", "run an experiment and write its run log");
  run->add_option("--config,-c", run_config, "experiment config (JSON)")->required();
  run->add_option("--out,-o", run_out, "output directory (default $COVSTEER_OUT_DIR or .)");
  run->add_option("--strategy", run_strategy, "override strategy: random|surrogate|dqn");
  run->add_option("--iterations", run_iterations, "override iteration count");
  run->add_option("--seed", run_seed, "override master seed")->each([&](const std::string&) {
    run_has_seed = true;
  });
  run->add_flag("--trace", run_trace, "export per-cycle traces for every run");

  // compare
  std::string cmp_a, cmp_b, cmp_out = default_out_dir();
  auto* cmp = app.add_subcommand("compare", "compare a candidate run log against a baseline");
  cmp->add_option("log_a", cmp_a, "candidate run log")->required();
  cmp->add_option("log_b", cmp_b, "baseline run log")->required();
  cmp->add_option("--out,-o", cmp_out, "output directory for comparison CSVs");

  // report
  std::string rep_log, rep_out = default_out_dir();
  auto* rep = app.add_subcommand("report", "emit per-iteration histogram/series CSVs for a run log");
  rep->add_option("log", rep_log, "run log")->required();
  rep->add_option("--out,-o", rep_out, "output directory for report CSVs");

  // validate-config
  std::string val_config;
  auto* val = app.add_subcommand("validate-config", "validate a config file (exit 0/2)");
  val->add_option("config", val_config, "experiment config (JSON)")->required();

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) {
    covsteer_experiment* exp = nullptr;
    covsteer_status st = covsteer_experiment_open(run_config.c_str(), &exp);
    if (st != COVSTEER_OK) return fail(st);
    if (!run_strategy.empty() &&
        (st = covsteer_experiment_set_strategy(exp, run_strategy.c_str())) != COVSTEER_OK) {
      covsteer_experiment_free(exp);
      return fail(st);
    }
    if (run_iterations > 0 &&
        (st = covsteer_experiment_set_iterations(exp, run_iterations)) != COVSTEER_OK) {
      covsteer_experiment_free(exp);
      return fail(st);
    }
    if (run_has_seed && (st = covsteer_experiment_set_seed(exp, run_seed)) != COVSTEER_OK) {
      covsteer_experiment_free(exp);
      return fail(st);
    }
    std::string trace_dir = run_out + "/traces";
    if (run_trace && (st = covsteer_experiment_set_trace_dir(exp, trace_dir.c_str())) != COVSTEER_OK) {
      covsteer_experiment_free(exp);
      return fail(st);
    }
    std::string log_path = run_out + "/runlog.jsonl";
    st = covsteer_experiment_run(exp, log_path.c_str(), print_progress, nullptr);
    covsteer_experiment_free(exp);
    if (st != COVSTEER_OK) return fail(st);
    std::printf("run log written to %s\n", log_path.c_str());
    return 0;
  }

  if (cmp->parsed()) {
    double p = 0.0, ratio = 0.0;
    covsteer_status st =
        covsteer_compare(cmp_a.c_str(), cmp_b.c_str(), cmp_out.c_str(), &p, &ratio);
    if (st != COVSTEER_OK) return fail(st);
    std::printf("mean-reward ratio (a/b): %.4f\n", ratio);
    std::printf("mann-whitney one-sided p (a > b): %.6g\n", p);
    std::printf("comparison written to %s\n", cmp_out.c_str());
    return 0;
  }

  if (rep->parsed()) {
    char* text = nullptr;
    covsteer_status st = covsteer_report(rep_log.c_str(), rep_out.c_str(), &text);
    if (st != COVSTEER_OK) return fail(st);
    if (text) {
      std::printf("%s", text);
      covsteer_string_free(text);
    }
    std::printf("report written to %s\n", rep_out.c_str());
    return 0;
  }

  if (val->parsed()) {
    covsteer_status st = covsteer_validate_config(val_config.c_str());
    if (st != COVSTEER_OK) return fail(st);
    std::printf("config ok\n");
    return 0;
  }

  return 2;
}
