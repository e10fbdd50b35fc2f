#include "covsteer/coverage.hpp"

#include <algorithm>
#include <ostream>
#include <set>

namespace covsteer {

namespace {

// "name" or "name(a)" or "name(a,b)" with non-negative integer args.
bool split_call(const std::string& s, std::string& name, std::vector<int>& args) {
  auto open = s.find('(');
  if (open == std::string::npos) {
    name = s;
    return true;
  }
  if (s.back() != ')') return false;
  name = s.substr(0, open);
  std::string inner = s.substr(open + 1, s.size() - open - 2);
  size_t pos = 0;
  while (pos < inner.size()) {
    size_t comma = inner.find(',', pos);
    std::string tok = inner.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    if (tok.empty() || tok.find_first_not_of("0123456789") != std::string::npos) return false;
    args.push_back(std::stoi(tok));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return true;
}

}  // namespace

SignalPredicate parse_predicate(const std::string& name) {
  std::string fn;
  std::vector<int> args;
  if (!split_call(name, fn, args)) throw ConfigError("malformed predicate: '" + name + "'");

  auto want = [&](size_t n) {
    if (args.size() != n)
      throw ConfigError("predicate '" + fn + "' takes " + std::to_string(n) + " argument(s): '" + name + "'");
  };

  SignalPredicate p;
  p.id = name;
  if (fn == "fifo_full") {
    want(1);
    p.kind = PredKind::FifoFull;
    p.a = args[0];
  } else if (fn == "fifo_depth_ge") {
    want(2);
    p.kind = PredKind::FifoDepthGe;
    p.a = args[0];
    p.b = args[1];
  } else if (fn == "any_fifo_full") {
    want(0);
    p.kind = PredKind::AnyFifoFull;
  } else if (fn == "all_ports_active") {
    want(0);
    p.kind = PredKind::AllPortsActive;
  } else if (fn == "arrival") {
    want(1);
    p.kind = PredKind::Arrival;
    p.a = args[0];
  } else if (fn == "write_arrival") {
    want(1);
    p.kind = PredKind::WriteArrival;
    p.a = args[0];
  } else if (fn == "grant_count_ge") {
    want(1);
    p.kind = PredKind::GrantCountGe;
    p.a = args[0];
  } else if (fn == "stall") {
    want(1);
    p.kind = PredKind::Stall;
    p.a = args[0];
  } else if (fn == "any_stall") {
    want(0);
    p.kind = PredKind::AnyStall;
  } else if (fn == "bug_triggered") {
    want(0);
    p.kind = PredKind::BugTriggered;
  } else if (fn == "always") {
    want(0);
    p.kind = PredKind::Always;
  } else {
    throw ConfigError("unknown predicate: '" + name + "'");
  }
  return p;
}

bool eval_predicate(const SignalPredicate& p, const CycleStats& cs, const DutConfig& cfg) {
  auto port_ok = [&](int port) { return port >= 0 && port < static_cast<int>(cs.fifo_depth.size()); };
  switch (p.kind) {
    case PredKind::FifoFull:
      return port_ok(p.a) && cs.fifo_depth[static_cast<size_t>(p.a)] == cfg.fifo_capacity;
    case PredKind::FifoDepthGe:
      return port_ok(p.a) && cs.fifo_depth[static_cast<size_t>(p.a)] >= p.b;
    case PredKind::AnyFifoFull:
      return std::any_of(cs.fifo_depth.begin(), cs.fifo_depth.end(),
                         [&](int d) { return d == cfg.fifo_capacity; });
    case PredKind::AllPortsActive:
      return std::all_of(cs.arrival_kind.begin(), cs.arrival_kind.end(),
                         [](int k) { return k >= 0; });
    case PredKind::Arrival:
      return p.a >= 0 && p.a < static_cast<int>(cs.arrival_kind.size()) &&
             cs.arrival_kind[static_cast<size_t>(p.a)] >= 0;
    case PredKind::WriteArrival:
      return p.a >= 0 && p.a < static_cast<int>(cs.arrival_kind.size()) &&
             cs.arrival_kind[static_cast<size_t>(p.a)] == static_cast<int>(TxnKind::Write);
    case PredKind::GrantCountGe:
      return static_cast<int>(cs.grants.size()) >= p.a;
    case PredKind::Stall:
      return std::find(cs.stalls.begin(), cs.stalls.end(), p.a) != cs.stalls.end();
    case PredKind::AnyStall:
      return !cs.stalls.empty();
    case PredKind::BugTriggered:
      return cs.bug_fired;
    case PredKind::Always:
      return true;
  }
  return false;
}

CoverageStatement make_statement(const std::string& id, const std::vector<std::string>& component_names) {
  if (component_names.empty()) throw ConfigError("statement '" + id + "' has no components");
  CoverageStatement st;
  st.id = id;
  for (const auto& n : component_names) st.components.push_back(parse_predicate(n));
  return st;
}

std::vector<CoverageStatement> default_statements(const DutConfig& cfg) {
  std::vector<CoverageStatement> out;
  std::vector<std::string> all_full;
  for (int p = 0; p < cfg.num_ports; ++p) {
    std::string pred = "fifo_full(" + std::to_string(p) + ")";
    out.push_back(make_statement(pred, {pred}));
    all_full.push_back(pred);
  }
  out.push_back(make_statement("all_fifos_full", all_full));
  for (int p = 0; p < cfg.num_ports; ++p) {
    for (int k : {2, 4, 8}) {
      if (k > cfg.fifo_capacity) continue;
      std::string pred = "fifo_depth_ge(" + std::to_string(p) + "," + std::to_string(k) + ")";
      out.push_back(make_statement(pred, {pred}));
    }
  }
  out.push_back(make_statement("dual_grant", {"grant_count_ge(2)"}));
  out.push_back(make_statement("BUG0", {"bug_triggered"}));
  return out;
}

std::vector<std::string> evaluate_statements(const CycleStats& cs, const DutConfig& cfg,
                                             std::span<const CoverageStatement> statements) {
  std::vector<std::string> hit;
  for (const auto& st : statements) {
    bool all = true;
    for (const auto& c : st.components) {
      if (!eval_predicate(c, cs, cfg)) {
        all = false;
        break;
      }
    }
    if (all) hit.push_back(st.id);
  }
  return hit;
}

StatementEvaluator::StatementEvaluator(std::span<const CoverageStatement> statements,
                                       const DutConfig& cfg)
    : cfg_(cfg), statements_(statements.begin(), statements.end()), hits_(statements_.size(), 0) {
  comp_hits_.resize(statements_.size());
  for (size_t i = 0; i < statements_.size(); ++i) {
    if (statements_[i].components.size() >= 2)
      comp_hits_[i].assign(statements_[i].components.size(), 0);
  }
}

void StatementEvaluator::accumulate(const CycleStats& cs) {
  for (size_t i = 0; i < statements_.size(); ++i) {
    const auto& comps = statements_[i].components;
    if (comp_hits_[i].empty()) {
      bool all = true;
      for (const auto& c : comps) {
        if (!eval_predicate(c, cs, cfg_)) {
          all = false;
          break;
        }
      }
      if (all) ++hits_[i];
    } else {
      size_t true_count = 0;
      for (size_t k = 0; k < comps.size(); ++k) {
        if (eval_predicate(comps[k], cs, cfg_)) {
          ++comp_hits_[i][k];
          ++true_count;
        }
      }
      if (true_count == comps.size()) ++hits_[i];
    }
  }
}

void StatementEvaluator::finish(SimResult& result) const {
  for (size_t i = 0; i < statements_.size(); ++i) {
    result.coverage_hits[statements_[i].id] = hits_[i];
    if (!comp_hits_[i].empty()) result.component_hits[statements_[i].id] = comp_hits_[i];
  }
}

void CoverageLedger::record_run(const SimResult& result) {
  ++total_runs_;
  for (const auto& [id, hits] : result.coverage_hits) {
    auto& e = entries_[id];
    ++e.runs;
    e.hits += hits;
  }
}

std::optional<LedgerEntry> CoverageLedger::entry(const std::string& id) const {
  auto it = entries_.find(id);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void CoverageLedger::export_csv(std::ostream& os) const {
  os << "statement,runs,hits,hits_per_run\n";
  for (const auto& [id, e] : entries_) {
    os << id << ',' << e.runs << ',' << e.hits << ',' << e.hits_per_run() << '\n';
  }
}

std::vector<CoverageStatement> expand_near_miss(const CoverageLedger& ledger,
                                                const std::vector<CoverageStatement>& statements) {
  std::set<std::string> present;
  for (const auto& st : statements) present.insert(st.id);

  std::vector<CoverageStatement> out = statements;
  for (const auto& st : statements) {
    if (st.components.size() < 2) continue;
    auto e = ledger.entry(st.id);
    if (!e || e->hits_per_run() >= ledger.rarity_threshold()) continue;
    for (const auto& comp : st.components) {
      if (present.count(comp.id)) continue;
      out.push_back(CoverageStatement{comp.id, {comp}});
      present.insert(comp.id);
    }
  }
  return out;
}

std::vector<std::string> filter_frequent(const CoverageLedger& ledger, double threshold) {
  std::vector<std::pair<double, std::string>> kept;
  for (const auto& [id, e] : ledger.entries()) {
    if (e.hits_per_run() <= threshold) kept.emplace_back(e.hits_per_run(), id);
  }
  std::sort(kept.begin(), kept.end());
  std::vector<std::string> out;
  out.reserve(kept.size());
  for (auto& [rate, id] : kept) out.push_back(std::move(id));
  return out;
}

RewardSpec RewardSpec::single(Objective obj, const std::string& statement_id) {
  RewardSpec s;
  s.terms.push_back({obj, statement_id, 1.0});
  return s;
}

void RewardSpec::validate() const {
  if (terms.empty()) throw ConfigError("reward spec has no terms");
  bool positive = false;
  for (const auto& t : terms) {
    if (t.weight < 0) throw ConfigError("reward weights must be >= 0");
    if (t.weight > 0) positive = true;
    bool needs_id = t.objective == Objective::StatementHits || t.objective == Objective::NearMissScore;
    if (needs_id && t.statement_id.empty())
      throw ConfigError("statement_hits/near_miss reward terms need a statement id");
  }
  if (!positive) throw ConfigError("reward spec needs at least one positive weight");
}

double compute_reward(const SimResult& result, const RewardSpec& spec,
                      std::span<const CoverageStatement> statements) {
  spec.validate();
  double total = 0.0;
  for (const auto& t : spec.terms) {
    double v = 0.0;
    switch (t.objective) {
      case Objective::AvgFifoDepth:
        v = result.avg_fifo_depth;
        break;
      case Objective::PctFullCycles:
        v = result.pct_full_cycles;
        break;
      case Objective::StatementHits: {
        auto it = result.coverage_hits.find(t.statement_id);
        if (it == result.coverage_hits.end())
          throw UnknownStatement("statement '" + t.statement_id + "' not tracked in this run");
        v = static_cast<double>(it->second);
        break;
      }
      case Objective::NearMissScore: {
        const CoverageStatement* st = nullptr;
        for (const auto& s : statements) {
          if (s.id == t.statement_id) {
            st = &s;
            break;
          }
        }
        if (!st) throw UnknownStatement("statement '" + t.statement_id + "' not in statement set");
        if (st->components.size() < 2) {
          // Single-component statement: the near-miss fraction is its own
          // per-cycle hit rate.
          auto it = result.coverage_hits.find(st->id);
          if (it == result.coverage_hits.end())
            throw UnknownStatement("statement '" + t.statement_id + "' not tracked in this run");
          v = result.cycles_run == 0 ? 0.0
                                     : static_cast<double>(it->second) / static_cast<double>(result.cycles_run);
        } else {
          auto it = result.component_hits.find(st->id);
          if (it == result.component_hits.end())
            throw UnknownStatement("statement '" + t.statement_id + "' has no component tracking in this run");
          uint64_t sum = 0;
          for (uint64_t h : it->second) sum += h;
          double denom = static_cast<double>(st->components.size()) * static_cast<double>(result.cycles_run);
          v = denom == 0.0 ? 0.0 : static_cast<double>(sum) / denom;
        }
        break;
      }
      case Objective::BugFound:
        v = result.failed ? 1.0 : 0.0;
        break;
    }
    total += t.weight * v;
  }
  return total;
}

}  // namespace covsteer
