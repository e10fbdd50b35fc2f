#include "covsteer/stimulus.hpp"

#include <algorithm>
#include <cmath>

#include "covsteer/rng.hpp"

namespace covsteer {

namespace {

constexpr double kActivityMax = 0.75;

KnobDef real_knob(const std::string& name, double lo, double hi, int bins = 4) {
  return KnobDef{name, lo, hi, false, bins};
}

KnobDef int_knob(const std::string& name, uint32_t lo, uint32_t hi, int bins = 4) {
  return KnobDef{name, static_cast<double>(lo), static_cast<double>(hi), true, bins};
}

}  // namespace

KnobSchema KnobSchema::defaults(const DutConfig& cfg) {
  KnobSchema s;
  s.num_ports_ = cfg.num_ports;
  s.knobs_.push_back(real_knob("read_weight", 0.0, 1.0));
  s.knobs_.push_back(real_knob("write_weight", 0.0, 1.0));
  // Activity ceiling keeps a random draw's offered load inside the
  // arbiter's service capacity, so FIFO saturation stays a corner the
  // search has to find rather than the typical random outcome.
  for (int p = 0; p < cfg.num_ports; ++p)
    s.knobs_.push_back(real_knob("activity_p" + std::to_string(p), 0.0, kActivityMax));
  // Split lo/hi bounds at the field midpoint: lo <= hi holds for any sample.
  uint32_t tmid = (cfg.tag_max() + 1) / 2;
  uint32_t imid = (cfg.index_max() + 1) / 2;
  uint32_t omid = (cfg.offset_max() + 1) / 2;
  s.knobs_.push_back(int_knob("tag_lo", 0, tmid - 1));
  s.knobs_.push_back(int_knob("tag_hi", tmid, cfg.tag_max()));
  s.knobs_.push_back(int_knob("index_lo", 0, imid - 1));
  s.knobs_.push_back(int_knob("index_hi", imid, cfg.index_max()));
  s.knobs_.push_back(int_knob("offset_lo", 0, omid - 1));
  s.knobs_.push_back(int_knob("offset_hi", omid, cfg.offset_max()));
  s.validate();
  return s;
}

void KnobSchema::validate() const {
  if (num_ports_ < 1) throw ConfigError("schema: num_ports must be >= 1");
  if (knobs_.size() != 8 + static_cast<size_t>(num_ports_))
    throw ConfigError("schema: knob layout does not match num_ports");
  for (const auto& k : knobs_) {
    if (!(k.lo <= k.hi)) throw ConfigError("schema: knob '" + k.name + "' has lo > hi");
    bool degenerate = k.lo == k.hi;
    if (degenerate) {
      if (k.bins != 1) throw ConfigError("schema: degenerate knob '" + k.name + "' must have bins = 1");
    } else if (k.bins < 2) {
      throw ConfigError("schema: knob '" + k.name + "' needs bins >= 2");
    }
    if (k.integer && k.bins > static_cast<int>(k.hi - k.lo) + 1)
      throw ConfigError("schema: integer knob '" + k.name + "' has more bins than values");
  }
  // Range pairs must never produce lo > hi.
  auto find = [&](const std::string& n) -> const KnobDef& {
    for (const auto& k : knobs_)
      if (k.name == n) return k;
    throw ConfigError("schema: missing knob '" + n + "'");
  };
  for (const char* field : {"tag", "index", "offset"}) {
    const KnobDef& lo = find(std::string(field) + "_lo");
    const KnobDef& hi = find(std::string(field) + "_hi");
    if (lo.hi > hi.lo) throw ConfigError("schema: '" + lo.name + "' bounds overlap '" + hi.name + "'");
  }
}

KnobVector KnobSchema::sample(uint64_t seed) const {
  Rng rng(seed);
  std::vector<double> vals(knobs_.size());
  for (size_t i = 0; i < knobs_.size(); ++i) {
    const KnobDef& k = knobs_[i];
    if (k.integer) {
      vals[i] = static_cast<double>(
          rng.uniform_int(static_cast<uint64_t>(k.lo), static_cast<uint64_t>(k.hi)));
    } else {
      vals[i] = rng.uniform(k.lo, k.hi);
    }
  }
  return from_values(vals);
}

std::vector<double> KnobSchema::values(const KnobVector& kv) const {
  if (kv.per_port_activity.size() != static_cast<size_t>(num_ports_))
    throw OutOfSchema("knob vector port count does not match schema");
  std::vector<double> v;
  v.reserve(knobs_.size());
  v.push_back(kv.read_weight);
  v.push_back(kv.write_weight);
  for (double a : kv.per_port_activity) v.push_back(a);
  v.push_back(kv.tag_lo);
  v.push_back(kv.tag_hi);
  v.push_back(kv.index_lo);
  v.push_back(kv.index_hi);
  v.push_back(kv.offset_lo);
  v.push_back(kv.offset_hi);
  return v;
}

KnobVector KnobSchema::from_values(std::span<const double> vals) const {
  if (vals.size() != knobs_.size()) throw OutOfSchema("knob value count does not match schema");
  KnobVector kv;
  kv.read_weight = vals[0];
  kv.write_weight = vals[1];
  kv.per_port_activity.assign(vals.begin() + 2, vals.begin() + 2 + num_ports_);
  size_t i = 2 + static_cast<size_t>(num_ports_);
  auto ival = [&](size_t j) { return static_cast<uint32_t>(std::llround(vals[j])); };
  kv.tag_lo = ival(i + 0);
  kv.tag_hi = ival(i + 1);
  kv.index_lo = ival(i + 2);
  kv.index_hi = ival(i + 3);
  kv.offset_lo = ival(i + 4);
  kv.offset_hi = ival(i + 5);
  return kv;
}

std::vector<double> KnobSchema::encode(const KnobVector& kv) const {
  std::vector<double> vals = values(kv);
  std::vector<double> feats(vals.size());
  for (size_t i = 0; i < vals.size(); ++i) {
    const KnobDef& k = knobs_[i];
    if (vals[i] < k.lo || vals[i] > k.hi)
      throw OutOfSchema("knob '" + k.name + "' value " + std::to_string(vals[i]) + " outside [" +
                        std::to_string(k.lo) + "," + std::to_string(k.hi) + "]");
    feats[i] = k.hi == k.lo ? 0.0 : (vals[i] - k.lo) / (k.hi - k.lo);
  }
  return feats;
}

KnobVector KnobSchema::decode(std::span<const double> features) const {
  if (features.size() != knobs_.size()) throw OutOfSchema("feature count does not match schema");
  std::vector<double> vals(features.size());
  for (size_t i = 0; i < features.size(); ++i) {
    const KnobDef& k = knobs_[i];
    double f = std::clamp(features[i], 0.0, 1.0);
    double v = k.lo + f * (k.hi - k.lo);
    vals[i] = k.integer ? std::llround(v) : v;
  }
  return from_values(vals);
}

void validate_knobs(const KnobVector& kv) {
  if (kv.read_weight < 0 || kv.write_weight < 0)
    throw ConfigError("knob weights must be >= 0");
  if (kv.read_weight + kv.write_weight <= 0.0)
    throw ConfigError("read_weight + write_weight must be > 0");
  for (double a : kv.per_port_activity)
    if (a < 0.0 || a > 1.0) throw ConfigError("per-port activity must be in [0,1]");
  if (kv.tag_lo > kv.tag_hi || kv.index_lo > kv.index_hi || kv.offset_lo > kv.offset_hi)
    throw ConfigError("address range lo > hi");
}

PortStreams generate_stream(const KnobVector& knobs, uint64_t seed, uint64_t num_cycles) {
  validate_knobs(knobs);
  if (num_cycles < 1) throw ConfigError("num_cycles must be >= 1");
  const int P = static_cast<int>(knobs.per_port_activity.size());
  const double p_read = knobs.read_weight / (knobs.read_weight + knobs.write_weight);

  Rng rng(seed);
  PortStreams streams(static_cast<size_t>(P));
  for (uint64_t t = 0; t < num_cycles; ++t) {
    for (int p = 0; p < P; ++p) {
      if (!rng.bernoulli(knobs.per_port_activity[static_cast<size_t>(p)])) continue;
      Transaction txn;
      txn.port = p;
      txn.kind = rng.bernoulli(p_read) ? TxnKind::Read : TxnKind::Write;
      txn.addr.tag = static_cast<uint32_t>(rng.uniform_int(knobs.tag_lo, knobs.tag_hi));
      txn.addr.index = static_cast<uint32_t>(rng.uniform_int(knobs.index_lo, knobs.index_hi));
      txn.addr.offset = static_cast<uint32_t>(rng.uniform_int(knobs.offset_lo, knobs.offset_hi));
      txn.issue_cycle = t;
      streams[static_cast<size_t>(p)].push_back(txn);
    }
  }
  return streams;
}

}  // namespace covsteer
