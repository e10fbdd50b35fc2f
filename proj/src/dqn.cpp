#include "covsteer/dqn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace covsteer {

ReplayBuffer::ReplayBuffer(size_t capacity) : capacity_(capacity) {
  if (capacity_ < 1) throw ConfigError("replay capacity must be >= 1");
  data_.reserve(capacity_);
}

void ReplayBuffer::store(Experience e) {
  if (!std::isfinite(e.reward)) throw Error("experience reward not finite");
  if (data_.size() < capacity_) {
    data_.push_back(std::move(e));
  } else {
    data_[next_] = std::move(e);
  }
  next_ = (next_ + 1) % capacity_;
  ++total_stored_;
}

std::vector<size_t> ReplayBuffer::sample_indices(size_t n, Rng& rng) const {
  if (data_.empty()) throw InsufficientData("replay buffer is empty");
  std::vector<size_t> idx(n);
  for (size_t i = 0; i < n; ++i) idx[i] = rng.below(data_.size());
  return idx;
}

ActionSpace::ActionSpace(const KnobSchema& schema) : schema_(schema) {
  schema_.validate();
  for (const auto& k : schema_.knobs()) {
    bins_.push_back(k.bins);
    if (total_ > kMaxActions / static_cast<uint64_t>(k.bins))
      throw ConfigError("action space exceeds " + std::to_string(kMaxActions) +
                        " actions; coarsen knob bins");
    total_ *= static_cast<uint64_t>(k.bins);
  }
}

KnobVector ActionSpace::action_to_knobs(uint64_t action) const {
  if (action >= total_) throw OutOfRange("action id " + std::to_string(action) + " out of range");
  std::vector<double> vals(bins_.size());
  uint64_t rem = action;
  for (size_t i = 0; i < bins_.size(); ++i) {
    int b = static_cast<int>(rem % static_cast<uint64_t>(bins_[i]));
    rem /= static_cast<uint64_t>(bins_[i]);
    const KnobDef& k = schema_.knob(i);
    double center = k.lo + (b + 0.5) * (k.hi - k.lo) / bins_[i];
    vals[i] = k.integer ? std::llround(center) : center;
  }
  return schema_.from_values(vals);
}

uint64_t ActionSpace::knobs_to_action(const KnobVector& kv) const {
  std::vector<double> vals = schema_.values(kv);
  uint64_t action = 0;
  uint64_t stride = 1;
  for (size_t i = 0; i < bins_.size(); ++i) {
    const KnobDef& k = schema_.knob(i);
    int b = 0;
    if (k.hi > k.lo) {
      double f = (vals[i] - k.lo) / (k.hi - k.lo);
      b = std::clamp(static_cast<int>(f * bins_[i]), 0, bins_[i] - 1);
    }
    action += static_cast<uint64_t>(b) * stride;
    stride *= static_cast<uint64_t>(bins_[i]);
  }
  return action;
}

void AgentConfig::validate() const {
  if (epsilon_start < 0 || epsilon_start > 1 || epsilon_end < 0 || epsilon_end > 1)
    throw ConfigError("epsilon bounds must be in [0,1]");
  if (epsilon_decay_steps < 1) throw ConfigError("epsilon_decay_steps must be >= 1");
  if (gamma < 0 || gamma >= 1) throw ConfigError("gamma must be in [0,1)");
  if (target_sync_interval < 1) throw ConfigError("target_sync_interval must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (learning_rate <= 0) throw ConfigError("learning_rate must be > 0");
  if (hidden.empty()) throw ConfigError("dqn.hidden must name at least one layer");
  if (train_steps_per_iteration < 0) throw ConfigError("train_steps_per_iteration must be >= 0");
}

uint64_t select_action(const MlpModel& qnet, std::span<const double> state, double epsilon,
                       Rng& rng, uint64_t num_actions) {
  if (epsilon < 0 || epsilon > 1) throw ConfigError("epsilon must be in [0,1]");
  if (rng.bernoulli(epsilon)) return rng.below(num_actions);
  std::vector<double> q = mlp_forward(qnet, state);
  if (q.size() != num_actions) throw DimensionMismatch("qnet output dim != action count");
  uint64_t best = 0;
  for (uint64_t a = 1; a < num_actions; ++a)
    if (q[a] > q[best]) best = a;
  return best;
}

std::vector<double> compute_targets(const MlpModel& target_net,
                                    std::span<const Experience* const> batch, double gamma) {
  std::vector<double> targets;
  targets.reserve(batch.size());
  for (const Experience* e : batch) {
    if (e->terminal) {
      // Episode ends here: the discounted tail is empty, so gamma cannot
      // appear in the target.
      targets.push_back(e->reward);
    } else {
      std::vector<double> q = mlp_forward(target_net, e->next_state);
      double best = q.empty() ? 0.0 : *std::max_element(q.begin(), q.end());
      targets.push_back(e->reward + gamma * best);
    }
  }
  return targets;
}

DqnAgent::DqnAgent(const KnobSchema& schema, const AgentConfig& cfg)
    : schema_(schema),
      cfg_(cfg),
      space_(schema),
      qnet_(),
      target_(),
      buffer_(4096),
      rng_(derive_seed(cfg.seed, 0xD4Aull)) {
  cfg_.validate();
  std::vector<int> sizes;
  sizes.push_back(static_cast<int>(schema_.dimension()));
  for (int h : cfg_.hidden) sizes.push_back(h);
  sizes.push_back(static_cast<int>(space_.size()));
  qnet_ = mlp_init(sizes, derive_seed(cfg_.seed, 0x11ull));
  target_ = qnet_;
}

double DqnAgent::epsilon() const {
  double frac = std::min(1.0, static_cast<double>(decisions_) / cfg_.epsilon_decay_steps);
  return cfg_.epsilon_start + frac * (cfg_.epsilon_end - cfg_.epsilon_start);
}

std::vector<double> DqnAgent::zero_state() const {
  return std::vector<double>(schema_.dimension(), 0.0);
}

uint64_t DqnAgent::decide() {
  double eps = epsilon();
  ++decisions_;
  std::vector<double> state = zero_state();
  return select_action(qnet_, state, eps, rng_, space_.size());
}

void DqnAgent::store(const Experience& e) {
  if (e.action >= space_.size()) throw OutOfRange("experience action out of range");
  buffer_.store(e);
}

double DqnAgent::train_step() {
  if (buffer_.size() < static_cast<size_t>(cfg_.batch_size))
    throw InsufficientData("replay buffer smaller than batch size");

  std::vector<size_t> idx = buffer_.sample_indices(static_cast<size_t>(cfg_.batch_size), rng_);
  std::vector<const Experience*> batch;
  batch.reserve(idx.size());
  for (size_t i : idx) batch.push_back(&buffer_.at(i));
  std::vector<double> targets = compute_targets(target_, batch, cfg_.gamma);

  TrainConfig step_cfg;
  step_cfg.learning_rate = cfg_.learning_rate;
  step_cfg.optimizer = Optimizer::Sgd;

  MlpGrads grads = MlpGrads::zeros_like(qnet_);
  ForwardCache cache;
  double loss = 0.0;
  for (size_t k = 0; k < batch.size(); ++k) {
    std::vector<double> q = mlp_forward_cached(qnet_, batch[k]->state, cache);
    double diff = q[batch[k]->action] - targets[k];
    loss += diff * diff;
    // Gradient flows only through the taken action's output.
    std::vector<double> grad_out(q.size(), 0.0);
    grad_out[batch[k]->action] = 2.0 * diff;
    mlp_backward(qnet_, cache, grad_out, grads);
  }
  grads.scale(1.0 / static_cast<double>(batch.size()));
  loss /= static_cast<double>(batch.size());
  if (!std::isfinite(loss)) throw NonFiniteLoss("dqn training diverged");

  SgdState state = SgdState::zeros_like(qnet_);
  mlp_apply_step(qnet_, grads, step_cfg, state);

  ++train_steps_;
  if (train_steps_ % static_cast<uint64_t>(cfg_.target_sync_interval) == 0) target_ = qnet_;
  return loss;
}

uint64_t DqnAgent::greedy_action() const {
  std::vector<double> q = mlp_forward(qnet_, zero_state());
  uint64_t best = 0;
  for (uint64_t a = 1; a < space_.size(); ++a)
    if (q[a] > q[best]) best = a;
  return best;
}

std::vector<KnobVector> DqnAgent::propose(int k) {
  std::vector<KnobVector> out;
  out.reserve(static_cast<size_t>(std::max(0, k)));
  for (int i = 0; i < k; ++i) out.push_back(space_.action_to_knobs(decide()));
  return out;
}

namespace {

constexpr char kAgentMagic[8] = {'C', 'S', 'D', 'Q', 'N', '0', '0', '1'};

void put_u64(std::vector<uint8_t>& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<uint8_t>((v >> (8 * i)) & 0xFF));
}

void put_f64v(std::vector<uint8_t>& out, double v) {
  uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(out, bits);
}

uint64_t get_u64(std::span<const uint8_t> in, size_t& pos) {
  if (pos + 8 > in.size()) throw Error("agent checkpoint truncated");
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(in[pos + static_cast<size_t>(i)]) << (8 * i);
  pos += 8;
  return v;
}

double get_f64v(std::span<const uint8_t> in, size_t& pos) {
  uint64_t bits = get_u64(in, pos);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

void put_vec(std::vector<uint8_t>& out, const std::vector<double>& v) {
  put_u64(out, v.size());
  for (double x : v) put_f64v(out, x);
}

std::vector<double> get_vec(std::span<const uint8_t> in, size_t& pos) {
  uint64_t n = get_u64(in, pos);
  std::vector<double> v(n);
  for (auto& x : v) x = get_f64v(in, pos);
  return v;
}

}  // namespace

void DqnAgent::save(const std::string& path) const {
  std::vector<uint8_t> out(kAgentMagic, kAgentMagic + 8);
  auto qb = mlp_serialize(qnet_);
  auto tb = mlp_serialize(target_);
  put_u64(out, qb.size());
  out.insert(out.end(), qb.begin(), qb.end());
  put_u64(out, tb.size());
  out.insert(out.end(), tb.begin(), tb.end());
  put_u64(out, decisions_);
  put_u64(out, train_steps_);
  put_u64(out, buffer_.size());
  for (size_t i = 0; i < buffer_.size(); ++i) {
    const Experience& e = buffer_.at(i);
    put_vec(out, e.state);
    put_u64(out, e.action);
    put_f64v(out, e.reward);
    put_vec(out, e.next_state);
    put_u64(out, e.terminal ? 1 : 0);
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("write failed: '" + path + "'");
}

DqnAgent DqnAgent::load(const std::string& path, const KnobSchema& schema) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "'");
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kAgentMagic, 8) != 0)
    throw Error("not an agent checkpoint (bad magic)");
  size_t pos = 8;

  AgentConfig cfg;  // hyperparameters live in the experiment config, not the checkpoint
  DqnAgent agent(schema, cfg);

  uint64_t qlen = get_u64(bytes, pos);
  agent.qnet_ = mlp_deserialize(std::span<const uint8_t>(bytes).subspan(pos, qlen));
  pos += qlen;
  uint64_t tlen = get_u64(bytes, pos);
  agent.target_ = mlp_deserialize(std::span<const uint8_t>(bytes).subspan(pos, tlen));
  pos += tlen;
  agent.decisions_ = get_u64(bytes, pos);
  agent.train_steps_ = get_u64(bytes, pos);
  uint64_t n = get_u64(bytes, pos);
  for (uint64_t i = 0; i < n; ++i) {
    Experience e;
    e.state = get_vec(bytes, pos);
    e.action = static_cast<uint32_t>(get_u64(bytes, pos));
    e.reward = get_f64v(bytes, pos);
    e.next_state = get_vec(bytes, pos);
    e.terminal = get_u64(bytes, pos) != 0;
    agent.buffer_.store(std::move(e));
  }
  return agent;
}

}  // namespace covsteer
