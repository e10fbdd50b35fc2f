#include "covsteer/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "covsteer/version.hpp"

using nlohmann::json;

namespace covsteer {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError("config field '" + path + "': " + what);
}

void check_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        ok = true;
        break;
      }
    if (!ok) fail(path.empty() ? it.key() : path + "." + it.key(), "unknown field");
  }
}

const json* find(const json& j, const char* key) {
  auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

double get_number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

int get_int(const json& j, const std::string& path) {
  if (!j.is_number_integer()) fail(path, "expected an integer");
  return j.get<int>();
}

uint64_t get_u64(const json& j, const std::string& path) {
  if (!j.is_number_unsigned() && !j.is_number_integer()) fail(path, "expected a non-negative integer");
  if (j.is_number_integer() && j.get<int64_t>() < 0) fail(path, "expected a non-negative integer");
  return j.get<uint64_t>();
}

bool get_bool(const json& j, const std::string& path) {
  if (!j.is_boolean()) fail(path, "expected true/false");
  return j.get<bool>();
}

std::string get_string(const json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "expected a string");
  return j.get<std::string>();
}

// ---- DutConfig ----

json dut_to_json(const DutConfig& d) {
  return json{{"num_ports", d.num_ports},
              {"num_caches", d.num_caches},
              {"fifo_capacity", d.fifo_capacity},
              {"grants_per_cache_per_cycle", d.grants_per_cache_per_cycle},
              {"bug_mode", d.bug_mode == BugMode::SeededBug ? "seeded_bug" : "off"},
              {"tag_bits", d.tag_bits},
              {"index_bits", d.index_bits},
              {"offset_bits", d.offset_bits}};
}

DutConfig dut_from_json(const json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
  check_keys(j, path,
             {"num_ports", "num_caches", "fifo_capacity", "grants_per_cache_per_cycle", "bug_mode",
              "tag_bits", "index_bits", "offset_bits"});
  DutConfig d;
  if (auto* v = find(j, "num_ports")) d.num_ports = get_int(*v, path + ".num_ports");
  if (auto* v = find(j, "num_caches")) d.num_caches = get_int(*v, path + ".num_caches");
  if (auto* v = find(j, "fifo_capacity")) d.fifo_capacity = get_int(*v, path + ".fifo_capacity");
  if (auto* v = find(j, "grants_per_cache_per_cycle"))
    d.grants_per_cache_per_cycle = get_int(*v, path + ".grants_per_cache_per_cycle");
  if (auto* v = find(j, "bug_mode")) {
    std::string s = get_string(*v, path + ".bug_mode");
    if (s == "off")
      d.bug_mode = BugMode::Off;
    else if (s == "seeded_bug")
      d.bug_mode = BugMode::SeededBug;
    else
      fail(path + ".bug_mode", "expected 'off' or 'seeded_bug'");
  }
  if (auto* v = find(j, "tag_bits")) d.tag_bits = get_int(*v, path + ".tag_bits");
  if (auto* v = find(j, "index_bits")) d.index_bits = get_int(*v, path + ".index_bits");
  if (auto* v = find(j, "offset_bits")) d.offset_bits = get_int(*v, path + ".offset_bits");
  d.validate();
  return d;
}

// ---- KnobSchema ----

json schema_to_json(const KnobSchema& s) {
  json arr = json::array();
  for (const auto& k : s.knobs()) {
    arr.push_back(json{{"name", k.name}, {"lo", k.lo}, {"hi", k.hi}, {"integer", k.integer}, {"bins", k.bins}});
  }
  return json{{"num_ports", s.num_ports()}, {"knobs", arr}};
}

KnobSchema schema_from_json(const json& j, const std::string& path, const DutConfig& dut) {
  if (!j.is_object()) fail(path, "expected an object");
  check_keys(j, path, {"num_ports", "knobs"});
  // Start from defaults so partial schemas only need the knobs they change.
  KnobSchema s = KnobSchema::defaults(dut);
  if (auto* v = find(j, "num_ports")) {
    if (get_int(*v, path + ".num_ports") != s.num_ports())
      fail(path + ".num_ports", "must match dut.num_ports");
  }
  if (auto* v = find(j, "knobs")) {
    if (!v->is_array()) fail(path + ".knobs", "expected an array");
    for (size_t i = 0; i < v->size(); ++i) {
      const json& kj = (*v)[i];
      std::string kpath = path + ".knobs[" + std::to_string(i) + "]";
      if (!kj.is_object()) fail(kpath, "expected an object");
      check_keys(kj, kpath, {"name", "lo", "hi", "integer", "bins"});
      auto* name = find(kj, "name");
      if (!name) fail(kpath, "missing 'name'");
      std::string n = get_string(*name, kpath + ".name");
      bool found = false;
      for (size_t slot = 0; slot < s.dimension(); ++slot) {
        if (s.knob(slot).name != n) continue;
        KnobDef& def = s.knob(slot);
        if (auto* x = find(kj, "lo")) def.lo = get_number(*x, kpath + ".lo");
        if (auto* x = find(kj, "hi")) def.hi = get_number(*x, kpath + ".hi");
        if (auto* x = find(kj, "integer")) def.integer = get_bool(*x, kpath + ".integer");
        if (auto* x = find(kj, "bins")) def.bins = get_int(*x, kpath + ".bins");
        if (def.lo == def.hi) def.bins = 1;
        found = true;
        break;
      }
      if (!found) fail(kpath + ".name", "unknown knob '" + n + "'");
    }
  }
  try {
    s.validate();
  } catch (const Error& e) {
    fail(path, e.what());
  }
  return s;
}

// ---- statements / reward ----

json statements_to_json(const std::vector<CoverageStatement>& sts) {
  json arr = json::array();
  for (const auto& st : sts) {
    json comps = json::array();
    for (const auto& c : st.components) comps.push_back(c.id);
    arr.push_back(json{{"id", st.id}, {"components", comps}});
  }
  return arr;
}

std::vector<CoverageStatement> statements_from_json(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array");
  std::vector<CoverageStatement> out;
  for (size_t i = 0; i < j.size(); ++i) {
    std::string spath = path + "[" + std::to_string(i) + "]";
    const json& sj = j[i];
    if (!sj.is_object()) fail(spath, "expected an object");
    check_keys(sj, spath, {"id", "components"});
    auto* id = find(sj, "id");
    auto* comps = find(sj, "components");
    if (!id) fail(spath, "missing 'id'");
    if (!comps || !comps->is_array() || comps->empty())
      fail(spath + ".components", "expected a nonempty array of predicate names");
    std::vector<std::string> names;
    for (size_t k = 0; k < comps->size(); ++k)
      names.push_back(get_string((*comps)[k], spath + ".components[" + std::to_string(k) + "]"));
    try {
      out.push_back(make_statement(get_string(*id, spath + ".id"), names));
    } catch (const Error& e) {
      fail(spath, e.what());
    }
  }
  return out;
}

const char* objective_name(Objective o) {
  switch (o) {
    case Objective::AvgFifoDepth: return "avg_fifo_depth";
    case Objective::PctFullCycles: return "pct_full_cycles";
    case Objective::StatementHits: return "statement_hits";
    case Objective::NearMissScore: return "near_miss";
    case Objective::BugFound: return "bug_found";
  }
  return "avg_fifo_depth";
}

Objective objective_from_name(const std::string& s, const std::string& path) {
  if (s == "avg_fifo_depth") return Objective::AvgFifoDepth;
  if (s == "pct_full_cycles") return Objective::PctFullCycles;
  if (s == "statement_hits") return Objective::StatementHits;
  if (s == "near_miss") return Objective::NearMissScore;
  if (s == "bug_found") return Objective::BugFound;
  fail(path, "unknown objective '" + s + "'");
}

json reward_to_json(const RewardSpec& r) {
  json terms = json::array();
  for (const auto& t : r.terms) {
    json tj{{"objective", objective_name(t.objective)}, {"weight", t.weight}};
    if (!t.statement_id.empty()) tj["statement"] = t.statement_id;
    terms.push_back(tj);
  }
  return json{{"terms", terms}};
}

RewardTerm term_from_json(const json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
  check_keys(j, path, {"objective", "statement", "weight"});
  RewardTerm t;
  auto* obj = find(j, "objective");
  if (!obj) fail(path, "missing 'objective'");
  t.objective = objective_from_name(get_string(*obj, path + ".objective"), path + ".objective");
  if (auto* v = find(j, "statement")) t.statement_id = get_string(*v, path + ".statement");
  if (auto* v = find(j, "weight")) t.weight = get_number(*v, path + ".weight");
  return t;
}

RewardSpec reward_from_json(const json& j, const std::string& path) {
  RewardSpec r;
  if (j.is_object() && find(j, "terms")) {
    check_keys(j, path, {"terms"});
    const json& terms = *find(j, "terms");
    if (!terms.is_array() || terms.empty()) fail(path + ".terms", "expected a nonempty array");
    for (size_t i = 0; i < terms.size(); ++i)
      r.terms.push_back(term_from_json(terms[i], path + ".terms[" + std::to_string(i) + "]"));
  } else {
    // Shorthand: a single term.
    r.terms.push_back(term_from_json(j, path));
  }
  try {
    r.validate();
  } catch (const Error& e) {
    fail(path, e.what());
  }
  return r;
}

// ---- Train / Search / Agent ----

json train_to_json(const TrainConfig& t) {
  return json{{"learning_rate", t.learning_rate},
              {"batch_size", t.batch_size},
              {"epochs", t.epochs},
              {"optimizer", t.optimizer == Optimizer::SgdMomentum ? "sgd_momentum" : "sgd"},
              {"momentum", t.momentum}};
}

TrainConfig train_from_json(const json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
  check_keys(j, path, {"learning_rate", "batch_size", "epochs", "optimizer", "momentum"});
  TrainConfig t;
  if (auto* v = find(j, "learning_rate")) t.learning_rate = get_number(*v, path + ".learning_rate");
  if (auto* v = find(j, "batch_size")) t.batch_size = get_int(*v, path + ".batch_size");
  if (auto* v = find(j, "epochs")) t.epochs = get_int(*v, path + ".epochs");
  if (auto* v = find(j, "optimizer")) {
    std::string s = get_string(*v, path + ".optimizer");
    if (s == "sgd")
      t.optimizer = Optimizer::Sgd;
    else if (s == "sgd_momentum")
      t.optimizer = Optimizer::SgdMomentum;
    else
      fail(path + ".optimizer", "expected 'sgd' or 'sgd_momentum'");
  }
  if (auto* v = find(j, "momentum")) t.momentum = get_number(*v, path + ".momentum");
  try {
    t.validate();
  } catch (const Error& e) {
    fail(path, e.what());
  }
  return t;
}

json search_to_json(const SearchConfig& s) {
  return json{{"num_candidates", s.num_candidates}, {"top_k", s.top_k},
              {"hidden", s.hidden},                 {"entropy_bins", s.entropy_bins},
              {"entropy_eps", s.entropy_eps},       {"reward_eps", s.reward_eps},
              {"window", s.window}};
}

SearchConfig search_from_json(const json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
  check_keys(j, path,
             {"num_candidates", "top_k", "hidden", "entropy_bins", "entropy_eps", "reward_eps",
              "window"});
  SearchConfig s;
  if (auto* v = find(j, "num_candidates")) s.num_candidates = get_int(*v, path + ".num_candidates");
  if (auto* v = find(j, "top_k")) s.top_k = get_int(*v, path + ".top_k");
  if (auto* v = find(j, "hidden")) {
    if (!v->is_array()) fail(path + ".hidden", "expected an array of layer sizes");
    s.hidden.clear();
    for (size_t i = 0; i < v->size(); ++i)
      s.hidden.push_back(get_int((*v)[i], path + ".hidden[" + std::to_string(i) + "]"));
  }
  if (auto* v = find(j, "entropy_bins")) s.entropy_bins = get_int(*v, path + ".entropy_bins");
  if (auto* v = find(j, "entropy_eps")) s.entropy_eps = get_number(*v, path + ".entropy_eps");
  if (auto* v = find(j, "reward_eps")) s.reward_eps = get_number(*v, path + ".reward_eps");
  if (auto* v = find(j, "window")) s.window = get_int(*v, path + ".window");
  try {
    s.validate();
  } catch (const Error& e) {
    fail(path, e.what());
  }
  return s;
}

json agent_to_json(const AgentConfig& a) {
  return json{{"epsilon_start", a.epsilon_start},
              {"epsilon_end", a.epsilon_end},
              {"epsilon_decay_steps", a.epsilon_decay_steps},
              {"gamma", a.gamma},
              {"target_sync_interval", a.target_sync_interval},
              {"batch_size", a.batch_size},
              {"hidden", a.hidden},
              {"learning_rate", a.learning_rate},
              {"train_steps_per_iteration", a.train_steps_per_iteration}};
}

AgentConfig agent_from_json(const json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
  check_keys(j, path,
             {"epsilon_start", "epsilon_end", "epsilon_decay_steps", "gamma",
              "target_sync_interval", "batch_size", "hidden", "learning_rate",
              "train_steps_per_iteration"});
  AgentConfig a;
  if (auto* v = find(j, "epsilon_start")) a.epsilon_start = get_number(*v, path + ".epsilon_start");
  if (auto* v = find(j, "epsilon_end")) a.epsilon_end = get_number(*v, path + ".epsilon_end");
  if (auto* v = find(j, "epsilon_decay_steps"))
    a.epsilon_decay_steps = get_int(*v, path + ".epsilon_decay_steps");
  if (auto* v = find(j, "gamma")) a.gamma = get_number(*v, path + ".gamma");
  if (auto* v = find(j, "target_sync_interval"))
    a.target_sync_interval = get_int(*v, path + ".target_sync_interval");
  if (auto* v = find(j, "batch_size")) a.batch_size = get_int(*v, path + ".batch_size");
  if (auto* v = find(j, "hidden")) {
    if (!v->is_array()) fail(path + ".hidden", "expected an array of layer sizes");
    a.hidden.clear();
    for (size_t i = 0; i < v->size(); ++i)
      a.hidden.push_back(get_int((*v)[i], path + ".hidden[" + std::to_string(i) + "]"));
  }
  if (auto* v = find(j, "learning_rate")) a.learning_rate = get_number(*v, path + ".learning_rate");
  if (auto* v = find(j, "train_steps_per_iteration"))
    a.train_steps_per_iteration = get_int(*v, path + ".train_steps_per_iteration");
  try {
    a.validate();
  } catch (const Error& e) {
    fail(path, e.what());
  }
  return a;
}

json experiment_to_json(const ExperimentConfig& c) {
  json j;
  j["dut"] = dut_to_json(c.dut);
  j["schema"] = schema_to_json(c.schema);
  j["statements"] = statements_to_json(c.statements);
  j["reward"] = reward_to_json(c.reward);
  j["strategy"] = strategy_name(c.strategy);
  j["batch_size"] = c.batch_size;
  j["iterations"] = c.iterations;
  j["cycles_per_run"] = c.cycles_per_run;
  j["master_seed"] = c.master_seed;
  j["explore_fraction"] = c.explore_fraction;
  j["near_miss_expansion"] = c.near_miss_expansion;
  j["rarity_threshold"] = c.rarity_threshold;
  j["train"] = train_to_json(c.train);
  j["search"] = search_to_json(c.search);
  j["agent"] = agent_to_json(c.agent);
  j["workers"] = c.workers;
  return j;
}

ExperimentConfig experiment_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config root must be an object");
  check_keys(j, "",
             {"dut", "schema", "statements", "reward", "strategy", "batch_size", "iterations",
              "cycles_per_run", "master_seed", "explore_fraction", "near_miss_expansion",
              "rarity_threshold", "train", "search", "agent", "workers"});
  ExperimentConfig c;
  if (auto* v = find(j, "dut")) c.dut = dut_from_json(*v, "dut");
  c.schema = KnobSchema::defaults(c.dut);
  if (auto* v = find(j, "schema")) c.schema = schema_from_json(*v, "schema", c.dut);
  c.statements = default_statements(c.dut);
  if (auto* v = find(j, "statements")) c.statements = statements_from_json(*v, "statements");
  if (auto* v = find(j, "reward")) c.reward = reward_from_json(*v, "reward");
  if (auto* v = find(j, "strategy")) {
    std::string s = get_string(*v, "strategy");
    try {
      c.strategy = strategy_from_name(s);
    } catch (const Error& e) {
      fail("strategy", e.what());
    }
  }
  if (auto* v = find(j, "batch_size")) c.batch_size = get_int(*v, "batch_size");
  if (auto* v = find(j, "iterations")) c.iterations = get_int(*v, "iterations");
  if (auto* v = find(j, "cycles_per_run")) c.cycles_per_run = get_u64(*v, "cycles_per_run");
  if (auto* v = find(j, "master_seed")) c.master_seed = get_u64(*v, "master_seed");
  if (auto* v = find(j, "explore_fraction")) c.explore_fraction = get_number(*v, "explore_fraction");
  if (auto* v = find(j, "near_miss_expansion"))
    c.near_miss_expansion = get_bool(*v, "near_miss_expansion");
  if (auto* v = find(j, "rarity_threshold")) c.rarity_threshold = get_number(*v, "rarity_threshold");
  if (auto* v = find(j, "train")) c.train = train_from_json(*v, "train");
  if (auto* v = find(j, "search")) c.search = search_from_json(*v, "search");
  if (auto* v = find(j, "agent")) c.agent = agent_from_json(*v, "agent");
  if (auto* v = find(j, "workers")) c.workers = get_int(*v, "workers");
  c.validate();
  return c;
}

// ---- RunLog ----

json knobs_to_json(const KnobVector& k) {
  return json{{"read_weight", k.read_weight},   {"write_weight", k.write_weight},
              {"per_port_activity", k.per_port_activity},
              {"tag_lo", k.tag_lo},             {"tag_hi", k.tag_hi},
              {"index_lo", k.index_lo},         {"index_hi", k.index_hi},
              {"offset_lo", k.offset_lo},       {"offset_hi", k.offset_hi}};
}

KnobVector knobs_from_json(const json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
  check_keys(j, path,
             {"read_weight", "write_weight", "per_port_activity", "tag_lo", "tag_hi", "index_lo",
              "index_hi", "offset_lo", "offset_hi"});
  KnobVector k;
  auto need = [&](const char* key) -> const json& {
    auto* v = find(j, key);
    if (!v) fail(path + "." + key, "missing");
    return *v;
  };
  k.read_weight = get_number(need("read_weight"), path + ".read_weight");
  k.write_weight = get_number(need("write_weight"), path + ".write_weight");
  const json& acts = need("per_port_activity");
  if (!acts.is_array()) fail(path + ".per_port_activity", "expected an array");
  for (size_t i = 0; i < acts.size(); ++i)
    k.per_port_activity.push_back(get_number(acts[i], path + ".per_port_activity"));
  k.tag_lo = static_cast<uint32_t>(get_u64(need("tag_lo"), path + ".tag_lo"));
  k.tag_hi = static_cast<uint32_t>(get_u64(need("tag_hi"), path + ".tag_hi"));
  k.index_lo = static_cast<uint32_t>(get_u64(need("index_lo"), path + ".index_lo"));
  k.index_hi = static_cast<uint32_t>(get_u64(need("index_hi"), path + ".index_hi"));
  k.offset_lo = static_cast<uint32_t>(get_u64(need("offset_lo"), path + ".offset_lo"));
  k.offset_hi = static_cast<uint32_t>(get_u64(need("offset_hi"), path + ".offset_hi"));
  return k;
}

json result_to_json(const SimResult& r) {
  return json{{"avg_fifo_depth", r.avg_fifo_depth},
              {"pct_full_cycles", r.pct_full_cycles},
              {"per_port_pct_full", r.per_port_pct_full},
              {"coverage_hits", r.coverage_hits},
              {"component_hits", r.component_hits},
              {"failed", r.failed},
              {"cycles_run", r.cycles_run}};
}

const json& need_field(const json& j, const char* key, const std::string& path) {
  auto* v = find(j, key);
  if (!v) fail(path + "." + key, "missing");
  return *v;
}

SimResult result_from_json(const json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
  SimResult r;
  r.avg_fifo_depth = get_number(need_field(j, "avg_fifo_depth", path), path);
  r.pct_full_cycles = get_number(need_field(j, "pct_full_cycles", path), path);
  for (const auto& v : need_field(j, "per_port_pct_full", path))
    r.per_port_pct_full.push_back(v.get<double>());
  const json& ch = need_field(j, "coverage_hits", path);
  for (auto it = ch.begin(); it != ch.end(); ++it)
    r.coverage_hits[it.key()] = it.value().get<uint64_t>();
  const json& comp = need_field(j, "component_hits", path);
  for (auto it = comp.begin(); it != comp.end(); ++it)
    r.component_hits[it.key()] = it.value().get<std::vector<uint64_t>>();
  r.failed = need_field(j, "failed", path).get<bool>();
  r.cycles_run = need_field(j, "cycles_run", path).get<uint64_t>();
  return r;
}

json iteration_to_json(const IterationRecord& rec) {
  json runs = json::array();
  for (const auto& row : rec.runs) {
    runs.push_back(json{{"knobs", knobs_to_json(row.knobs)},
                        {"seed", row.stream_seed},
                        {"reward", row.reward},
                        {"result", result_to_json(row.result)}});
  }
  json ledger = json::object();
  for (const auto& [id, e] : rec.ledger) ledger[id] = json{{"runs", e.runs}, {"hits", e.hits}};
  json j{{"iteration", rec.iteration}, {"runs", runs},          {"mean_reward", rec.mean_reward},
         {"max_reward", rec.max_reward}, {"ledger", ledger},    {"valid", rec.valid}};
  if (rec.proposal_entropy) j["proposal_entropy"] = *rec.proposal_entropy;
  if (rec.epsilon) j["epsilon"] = *rec.epsilon;
  if (!rec.error.empty()) j["error"] = rec.error;
  return j;
}

IterationRecord iteration_from_json(const json& j, const std::string& path) {
  IterationRecord rec;
  rec.iteration = get_int(need_field(j, "iteration", path), path + ".iteration");
  for (const auto& rj : need_field(j, "runs", path)) {
    RunRow row;
    row.knobs = knobs_from_json(need_field(rj, "knobs", path), path + ".knobs");
    row.stream_seed = need_field(rj, "seed", path).get<uint64_t>();
    row.reward = need_field(rj, "reward", path).get<double>();
    row.result = result_from_json(need_field(rj, "result", path), path + ".result");
    rec.runs.push_back(std::move(row));
  }
  rec.mean_reward = get_number(need_field(j, "mean_reward", path), path + ".mean_reward");
  rec.max_reward = get_number(need_field(j, "max_reward", path), path + ".max_reward");
  if (auto* v = find(j, "proposal_entropy")) rec.proposal_entropy = v->get<double>();
  if (auto* v = find(j, "epsilon")) rec.epsilon = v->get<double>();
  if (auto* v = find(j, "ledger")) {
    for (auto it = v->begin(); it != v->end(); ++it) {
      LedgerEntry e;
      e.runs = need_field(it.value(), "runs", path + ".ledger").get<uint64_t>();
      e.hits = need_field(it.value(), "hits", path + ".ledger").get<uint64_t>();
      rec.ledger.emplace_back(it.key(), e);
    }
  }
  if (auto* v = find(j, "valid")) rec.valid = v->get<bool>();
  if (auto* v = find(j, "error")) rec.error = v->get<std::string>();
  return rec;
}

}  // namespace

ExperimentConfig config_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  return experiment_from_json(j);
}

ExperimentConfig config_from_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return config_from_json_text(ss.str());
}

std::string config_to_json_text(const ExperimentConfig& cfg, int indent) {
  return experiment_to_json(cfg).dump(indent);
}

std::string runlog_to_text(const RunLog& log) {
  std::string out;
  json header{{"format_version", log.header.format_version},
              {"tool", kToolName},
              {"tool_version", log.header.tool_version},
              {"config", experiment_to_json(log.header.config)}};
  out += header.dump();
  out += '\n';
  for (const auto& rec : log.iterations) {
    out += iteration_to_json(rec).dump();
    out += '\n';
  }
  if (log.stop_reason) {
    out += json{{"stop_reason", *log.stop_reason}}.dump();
    out += '\n';
  }
  return out;
}

RunLog runlog_from_text(const std::string& text) {
  RunLog log;
  std::istringstream in(text);
  std::string line;
  bool have_header = false;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ConfigError("runlog line " + std::to_string(lineno) + ": " + e.what());
    }
    if (!have_header) {
      if (!j.contains("format_version") || !j.contains("config"))
        throw ConfigError("runlog line 1: missing header fields");
      log.header.format_version = j["format_version"].get<int>();
      if (log.header.format_version != 1)
        throw ConfigError("unsupported runlog format_version " +
                          std::to_string(log.header.format_version));
      log.header.tool_version = j.value("tool_version", "");
      log.header.config = experiment_from_json(j["config"]);
      have_header = true;
      continue;
    }
    if (j.contains("stop_reason")) {
      log.stop_reason = j["stop_reason"].get<std::string>();
      continue;
    }
    try {
      log.iterations.push_back(iteration_from_json(j, "iteration[" + std::to_string(lineno) + "]"));
    } catch (const json::exception& e) {
      throw ConfigError("runlog line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (!have_header) throw ConfigError("runlog is empty or missing its header line");
  return log;
}

void runlog_save(const RunLog& log, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  std::string text = runlog_to_text(log);
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!f) throw IoError("write failed: '" + path + "'");
}

RunLog runlog_load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open runlog '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return runlog_from_text(ss.str());
}

}  // namespace covsteer
