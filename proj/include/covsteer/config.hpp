#pragma once

#include <string>

#include "covsteer/harness.hpp"

namespace covsteer {

// Run-config parsing: one JSON document covering DUT, knob schema, coverage
// statements, reward and strategy settings. Unknown or ill-typed fields are
// reported with their path. Omitted sections fall back to defaults.
ExperimentConfig config_from_json_text(const std::string& text);
ExperimentConfig config_from_json_file(const std::string& path);
std::string config_to_json_text(const ExperimentConfig& cfg, int indent = 2);

// RunLog persistence: line-delimited JSON (header object first, then one
// object per iteration, then an optional {"stop_reason": ...} trailer).
void runlog_save(const RunLog& log, const std::string& path);
RunLog runlog_load(const std::string& path);
std::string runlog_to_text(const RunLog& log);
RunLog runlog_from_text(const std::string& text);

}  // namespace covsteer
