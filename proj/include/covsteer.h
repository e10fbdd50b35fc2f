/*
 * covsteer C API: coverage-directed stimulus generation for the modeled
 * cache controller. The library owns all state behind opaque handles;
 * every call returns a status code and the last error message is
 * retrievable per thread via covsteer_last_error().
 */
#ifndef COVSTEER_H
#define COVSTEER_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum covsteer_status {
  COVSTEER_OK = 0,
  COVSTEER_ERR_INVALID_ARG = 1,   /* null pointer / bad enum / bad value */
  COVSTEER_ERR_CONFIG = 2,        /* config parse or validation failure */
  COVSTEER_ERR_IO = 3,            /* file missing / unreadable / unwritable */
  COVSTEER_ERR_MISMATCH = 4,      /* logs not comparable */
  COVSTEER_ERR_RUNTIME = 5        /* simulation / training failure */
} covsteer_status;

/* Library name/version, e.g. "covsteer 0.1.0". Static storage. */
const char* covsteer_version(void);

/* Thread-local message for the last failing call; static storage, valid
 * until the next failing call on the same thread. */
const char* covsteer_last_error(void);

/* ---- experiments ---- */

typedef struct covsteer_experiment covsteer_experiment;

/* Parses and validates a JSON run config. On success *out owns the
 * experiment and must be released with covsteer_experiment_free. */
covsteer_status covsteer_experiment_open(const char* config_path, covsteer_experiment** out);
covsteer_status covsteer_experiment_open_text(const char* config_json, covsteer_experiment** out);
void covsteer_experiment_free(covsteer_experiment* exp);

/* Overrides applied after load (CLI flags). */
covsteer_status covsteer_experiment_set_strategy(covsteer_experiment* exp, const char* strategy);
covsteer_status covsteer_experiment_set_iterations(covsteer_experiment* exp, int iterations);
covsteer_status covsteer_experiment_set_seed(covsteer_experiment* exp, uint64_t master_seed);
/* Per-cycle trace export for every simulated run (line-delimited records
 * under trace_dir). Pass NULL to disable. */
covsteer_status covsteer_experiment_set_trace_dir(covsteer_experiment* exp, const char* trace_dir);

/* Normalized JSON text of the loaded config. Caller frees with
 * covsteer_string_free. */
covsteer_status covsteer_experiment_config_json(const covsteer_experiment* exp, char** out_json);

typedef void (*covsteer_progress_fn)(const char* line, void* user);

/* Runs the experiment loop and writes the run log (line-delimited JSON) to
 * runlog_path. progress may be NULL. */
covsteer_status covsteer_experiment_run(covsteer_experiment* exp, const char* runlog_path,
                                        covsteer_progress_fn progress, void* user);

/* ---- logs, comparison, reports ---- */

/* Validates a config file: COVSTEER_OK or COVSTEER_ERR_CONFIG/IO. */
covsteer_status covsteer_validate_config(const char* config_path);

/* Compares two run logs (log_a is the candidate, log_b the baseline).
 * Writes series/histogram CSVs and summary.txt into out_dir. On success
 * fills the optional out parameters: one-sided Mann-Whitney p-value for
 * "a > b" on final-iteration rewards and the final mean-reward ratio a/b. */
covsteer_status covsteer_compare(const char* log_a_path, const char* log_b_path,
                                 const char* out_dir, double* out_p_value, double* out_mean_ratio);

/* Emits per-iteration histogram and series CSVs for one run log into
 * out_dir, plus a fixed-width text rendering of the final-iteration reward
 * histogram (caller frees with covsteer_string_free). out_text may be NULL. */
covsteer_status covsteer_report(const char* log_path, const char* out_dir, char** out_text);

/* Byte-exact replay check: re-executes the log's header config and compares
 * the produced log text with the file. *out_identical is 1 on a byte-equal
 * replay, else 0. */
covsteer_status covsteer_replay_check(const char* log_path, int* out_identical);

void covsteer_string_free(char* s);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* COVSTEER_H */
