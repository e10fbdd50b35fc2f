#include <doctest.h>

#include <cmath>

#include "covsteer/stimulus.hpp"
#include "oracles.hpp"

using namespace covsteer;
using namespace covsteer::testing;

namespace {

KnobSchema default_schema() {
  DutConfig cfg;
  return KnobSchema::defaults(cfg);
}

}  // namespace

TEST_CASE("sample_knobs: degenerate schema yields the unique knob vector") {
  KnobSchema s = default_schema();
  for (size_t i = 0; i < s.dimension(); ++i) {
    s.knob(i).lo = s.knob(i).hi = s.knob(i).integer ? 7.0 : 0.25;
    s.knob(i).bins = 1;
  }
  // Keep the integer/real split sane: re-pin range knobs to an integer value.
  KnobVector a = s.sample(1);
  KnobVector b = s.sample(999);
  CHECK(a.read_weight == b.read_weight);
  CHECK(a.per_port_activity == b.per_port_activity);
  CHECK(a.tag_lo == b.tag_lo);
  CHECK(a.index_hi == b.index_hi);
}

TEST_CASE("sample_knobs: deterministic per seed, distinct across seeds") {
  KnobSchema s = default_schema();
  KnobVector a = s.sample(42), b = s.sample(42), c = s.sample(43);
  CHECK(a.read_weight == b.read_weight);
  CHECK(a.index_lo == b.index_lo);
  CHECK(a.per_port_activity == b.per_port_activity);
  bool differs = a.read_weight != c.read_weight || a.index_lo != c.index_lo ||
                 a.per_port_activity != c.per_port_activity;
  CHECK(differs);
}

TEST_CASE("sample_knobs: empirical mean of a [0,1] knob is 0.5") {
  KnobSchema s = default_schema();
  double sum = 0.0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) sum += s.sample(static_cast<uint64_t>(i)).read_weight;
  CHECK(std::abs(sum / n - 0.5) < 0.02);
}

TEST_CASE("samples always satisfy bounds and lo<=hi") {
  KnobSchema s = default_schema();
  for (int i = 0; i < 2000; ++i) {
    KnobVector kv = s.sample(static_cast<uint64_t>(i) * 2654435761ULL + 1);
    validate_knobs(kv);
    CHECK(kv.index_lo <= kv.index_hi);
    CHECK(kv.tag_lo <= kv.tag_hi);
    CHECK(kv.offset_lo <= kv.offset_hi);
    CHECK(kv.index_hi <= 63);
    CHECK(kv.tag_hi <= 255);
    for (double a : kv.per_port_activity) {
      CHECK(a >= 0.0);
      CHECK(a <= 0.75);
    }
  }
}

TEST_CASE("generate_stream: zero activity issues nothing") {
  KnobSchema s = default_schema();
  KnobVector kv = s.sample(3);
  for (double& a : kv.per_port_activity) a = 0.0;
  PortStreams streams = generate_stream(kv, 7, 100);
  for (const auto& port : streams) CHECK(port.empty());
}

TEST_CASE("generate_stream: zero write weight gives only reads") {
  KnobSchema s = default_schema();
  KnobVector kv = s.sample(3);
  kv.write_weight = 0.0;
  kv.read_weight = 1.0;
  for (double& a : kv.per_port_activity) a = 0.7;
  PortStreams streams = generate_stream(kv, 7, 500);
  size_t n = 0;
  for (const auto& port : streams)
    for (const auto& t : port) {
      CHECK(t.kind == TxnKind::Read);
      ++n;
    }
  CHECK(n > 0);
}

TEST_CASE("generate_stream: pinned index maximizes cross-port conflicts") {
  KnobSchema s = default_schema();
  KnobVector kv = s.sample(3);
  kv.index_lo = kv.index_hi = 5;
  for (double& a : kv.per_port_activity) a = 1.0;
  PortStreams streams = generate_stream(kv, 11, 50);
  for (const auto& port : streams) {
    CHECK(port.size() == 50);
    for (const auto& t : port) CHECK(t.addr.index == 5);
  }
  // Conflict oracle: any two same-cycle transactions from different ports conflict.
  DutConfig cfg;
  for (uint64_t t = 0; t < 50; ++t)
    for (int p = 0; p + 1 < 4; ++p)
      CHECK(oracle_pair_conflict(streams[static_cast<size_t>(p)][t],
                                 streams[static_cast<size_t>(p + 1)][t], cfg.num_caches));
}

TEST_CASE("generate_stream: determinism and issue-cycle monotonicity") {
  KnobSchema s = default_schema();
  KnobVector kv = s.sample(17);
  PortStreams a = generate_stream(kv, 23, 400);
  PortStreams b = generate_stream(kv, 23, 400);
  REQUIRE(a.size() == b.size());
  for (size_t p = 0; p < a.size(); ++p) {
    REQUIRE(a[p].size() == b[p].size());
    for (size_t i = 0; i < a[p].size(); ++i) {
      CHECK(a[p][i].addr.index == b[p][i].addr.index);
      CHECK(a[p][i].issue_cycle == b[p][i].issue_cycle);
      CHECK(a[p][i].kind == b[p][i].kind);
      if (i > 0) CHECK(a[p][i].issue_cycle > a[p][i - 1].issue_cycle);
    }
  }
}

TEST_CASE("generate_stream: read fraction tracks the weights within 3 sigma") {
  KnobSchema s = default_schema();
  KnobVector kv = s.sample(29);
  kv.read_weight = 3.0;
  kv.write_weight = 1.0;
  for (double& a : kv.per_port_activity) a = 0.7;
  PortStreams streams = generate_stream(kv, 31, 10000);
  uint64_t reads = 0, total = 0;
  for (const auto& port : streams)
    for (const auto& t : port) {
      ++total;
      if (t.kind == TxnKind::Read) ++reads;
    }
  REQUIRE(total >= 10000);
  double p = 0.75;
  double sigma = std::sqrt(p * (1 - p) / static_cast<double>(total));
  CHECK(std::abs(static_cast<double>(reads) / static_cast<double>(total) - p) < 3 * sigma);
}

TEST_CASE("generate_stream: address fields always lie inside knob ranges") {
  KnobSchema s = default_schema();
  for (int trial = 0; trial < 50; ++trial) {
    KnobVector kv = s.sample(static_cast<uint64_t>(trial) + 1000);
    PortStreams streams = generate_stream(kv, static_cast<uint64_t>(trial), 200);
    for (const auto& port : streams)
      for (const auto& t : port) {
        CHECK(t.addr.tag >= kv.tag_lo);
        CHECK(t.addr.tag <= kv.tag_hi);
        CHECK(t.addr.index >= kv.index_lo);
        CHECK(t.addr.index <= kv.index_hi);
        CHECK(t.addr.offset >= kv.offset_lo);
        CHECK(t.addr.offset <= kv.offset_hi);
      }
  }
}

TEST_CASE("encode/decode: bounds map to 0 and 1, midpoint round-trips") {
  KnobSchema s = default_schema();
  KnobVector lo = s.decode(std::vector<double>(s.dimension(), 0.0));
  KnobVector hi = s.decode(std::vector<double>(s.dimension(), 1.0));
  std::vector<double> flo = s.encode(lo);
  std::vector<double> fhi = s.encode(hi);
  for (double f : flo) CHECK(f == 0.0);
  for (double f : fhi) CHECK(f == 1.0);

  std::vector<double> mid = s.encode(s.decode(std::vector<double>(s.dimension(), 0.5)));
  for (size_t i = 0; i < mid.size(); ++i) {
    // Integer knobs may shift by up to half a step under rounding.
    const KnobDef& k = s.knob(i);
    double step = k.integer ? 1.0 / (k.hi - k.lo) : 0.0;
    CHECK(std::abs(mid[i] - 0.5) <= step / 2 + 1e-12);
  }
}

TEST_CASE("encode rejects out-of-schema knobs") {
  KnobSchema s = default_schema();
  KnobVector kv = s.sample(5);
  kv.per_port_activity[0] = 0.99;  // above the 0.75 ceiling
  CHECK_THROWS_AS((void)s.encode(kv), OutOfSchema);
}

TEST_CASE("encode-decode-encode is idempotent on random samples") {
  KnobSchema s = default_schema();
  for (int i = 0; i < 200; ++i) {
    KnobVector kv = s.sample(static_cast<uint64_t>(i) + 7777);
    std::vector<double> f1 = s.encode(kv);
    std::vector<double> f2 = s.encode(s.decode(f1));
    for (size_t k = 0; k < f1.size(); ++k) CHECK(f2[k] == doctest::Approx(f1[k]).epsilon(1e-12));
  }
}
