#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace covsteer {

// Base class for all errors raised by the library. The C API maps
// subclasses to error codes at the boundary.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

enum class TxnKind : uint8_t { Read = 0, Write = 1 };

struct Address {
  uint32_t tag = 0;
  uint32_t index = 0;
  uint32_t offset = 0;
};

struct Transaction {
  int port = 0;
  TxnKind kind = TxnKind::Read;
  Address addr;
  uint64_t issue_cycle = 0;
};

enum class BugMode : uint8_t { Off = 0, SeededBug = 1 };

struct DutConfig {
  int num_ports = 4;
  int num_caches = 4;
  int fifo_capacity = 8;
  int grants_per_cache_per_cycle = 1;
  BugMode bug_mode = BugMode::Off;
  int tag_bits = 8;
  int index_bits = 6;
  int offset_bits = 6;

  uint32_t tag_max() const { return (1u << tag_bits) - 1; }
  uint32_t index_max() const { return (1u << index_bits) - 1; }
  uint32_t offset_max() const { return (1u << offset_bits) - 1; }

  void validate() const;
};

struct Grant {
  int port = 0;
  int cache = 0;
  uint32_t index = 0;  // granted address index, for conflict auditing
};

// Per-cycle instrumentation record. fifo_depth is sampled at end of cycle,
// after grants dequeued and deferred arrivals enqueued.
struct CycleStats {
  uint64_t cycle = 0;
  std::vector<int> fifo_depth;
  std::vector<Grant> grants;
  std::vector<int> stalls;        // ports whose arrival was dropped on a full FIFO
  std::vector<int> arrival_kind;  // per port: -1 none, else TxnKind value
  bool bug_fired = false;
};

struct SimResult {
  double avg_fifo_depth = 0.0;     // mean over cycles and ports, in entries
  double pct_full_cycles = 0.0;    // % of cycles where any FIFO is at capacity
  std::vector<double> per_port_pct_full;
  std::map<std::string, uint64_t> coverage_hits;
  // Per-cycle hit counts of each AND'ed component, keyed by statement id.
  // Only statements with >= 2 components appear here.
  std::map<std::string, std::vector<uint64_t>> component_hits;
  bool failed = false;
  uint64_t cycles_run = 0;
};

using PortStreams = std::vector<std::vector<Transaction>>;

}  // namespace covsteer
