#pragma once

#include <span>
#include <string>
#include <vector>

#include "covsteer/sim_types.hpp"

namespace covsteer {

class OutOfSchema : public Error {
 public:
  using Error::Error;
};

// The stimulus control point: transaction-type weights, per-port activity
// rates and inclusive address-field ranges shared by all ports.
struct KnobVector {
  double read_weight = 1.0;
  double write_weight = 1.0;
  std::vector<double> per_port_activity;
  uint32_t tag_lo = 0, tag_hi = 0;
  uint32_t index_lo = 0, index_hi = 0;
  uint32_t offset_lo = 0, offset_hi = 0;
};

struct KnobDef {
  std::string name;
  double lo = 0.0;
  double hi = 1.0;
  bool integer = false;
  int bins = 4;  // DQN action-space discretization; 1 only for degenerate knobs
};

// Fixed knob layout: read_weight, write_weight, per-port activity rates,
// then lo/hi for tag, index and offset. Bounds guarantee lo <= hi for every
// sampled range because each lo knob's upper bound sits below its hi knob's
// lower bound.
class KnobSchema {
 public:
  static KnobSchema defaults(const DutConfig& cfg);

  size_t dimension() const { return knobs_.size(); }
  int num_ports() const { return num_ports_; }
  const std::vector<KnobDef>& knobs() const { return knobs_; }
  KnobDef& knob(size_t i) { return knobs_[i]; }
  const KnobDef& knob(size_t i) const { return knobs_[i]; }

  void validate() const;

  // Uniform sample within bounds; deterministic given seed.
  KnobVector sample(uint64_t seed) const;

  // Flat slot-value view of a KnobVector (schema layout order).
  std::vector<double> values(const KnobVector& kv) const;
  KnobVector from_values(std::span<const double> vals) const;

  // Min-max normalization per knob into [0,1]^d. encode throws OutOfSchema
  // for knobs outside bounds; decode clamps to bounds. A degenerate knob
  // (lo == hi) always encodes to 0.
  std::vector<double> encode(const KnobVector& kv) const;
  KnobVector decode(std::span<const double> features) const;

 private:
  std::vector<KnobDef> knobs_;
  int num_ports_ = 0;
};

// Constrained-random stream generation: per cycle and port, a transaction
// is issued with probability per_port_activity[port]; kind is categorical
// in (read_weight, write_weight); each address field is uniform within its
// inclusive range. Deterministic given (knobs, seed). Draw order is fixed:
// cycle-major, then port, then (issue?, kind, tag, index, offset).
PortStreams generate_stream(const KnobVector& knobs, uint64_t seed, uint64_t num_cycles);

void validate_knobs(const KnobVector& kv);

}  // namespace covsteer
