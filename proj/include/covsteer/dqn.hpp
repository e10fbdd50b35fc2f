#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "covsteer/mlp.hpp"
#include "covsteer/rng.hpp"
#include "covsteer/stimulus.hpp"

namespace covsteer {

class OutOfRange : public Error {
 public:
  using Error::Error;
};

class InsufficientData : public Error {
 public:
  using Error::Error;
};

struct Experience {
  std::vector<double> state;
  uint32_t action = 0;
  double reward = 0.0;
  std::vector<double> next_state;
  bool terminal = true;  // always true in the single-step MDP
};

// Bounded ring buffer, oldest-first eviction, uniform sampling.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(size_t capacity = 4096);

  void store(Experience e);
  size_t size() const { return data_.size(); }
  size_t capacity() const { return capacity_; }
  uint64_t total_stored() const { return total_stored_; }
  const Experience& at(size_t i) const { return data_[i]; }

  std::vector<size_t> sample_indices(size_t n, Rng& rng) const;

 private:
  size_t capacity_;
  size_t next_ = 0;
  uint64_t total_stored_ = 0;
  std::vector<Experience> data_;
};

// Enumerable discretization of the knob space: every combination of per-knob
// bins is one action; bin centers decode back to knob values. Guarded
// against explosion at 10^6 actions.
class ActionSpace {
 public:
  static constexpr uint64_t kMaxActions = 1000000;

  explicit ActionSpace(const KnobSchema& schema);

  uint64_t size() const { return total_; }
  const KnobSchema& schema() const { return schema_; }

  KnobVector action_to_knobs(uint64_t action) const;
  uint64_t knobs_to_action(const KnobVector& kv) const;

 private:
  KnobSchema schema_;
  std::vector<int> bins_;
  uint64_t total_ = 1;
};

struct AgentConfig {
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  int epsilon_decay_steps = 300;  // linear decay, per decision
  double gamma = 0.0;             // single-step episodes have no tail
  int target_sync_interval = 100;
  int batch_size = 32;
  uint64_t seed = 0;
  std::vector<int> hidden = {32, 32};
  double learning_rate = 1e-3;
  int train_steps_per_iteration = 128;

  void validate() const;
};

// Epsilon-greedy over a Q-network output; ties break to the lowest action id.
uint64_t select_action(const MlpModel& qnet, std::span<const double> state, double epsilon,
                       Rng& rng, uint64_t num_actions);

// Bellman targets for a batch: r for terminal experiences, else
// r + gamma * max_a' Q_target(s', a').
std::vector<double> compute_targets(const MlpModel& target_net,
                                    std::span<const Experience* const> batch, double gamma);

// Single-step-MDP DQN over the discretized knob space. The state vector is
// the constant all-zeros vector of the schema's encoded dimension; the
// Q-network maps it to one value per action.
class DqnAgent {
 public:
  DqnAgent(const KnobSchema& schema, const AgentConfig& cfg);

  const ActionSpace& actions() const { return space_; }
  const AgentConfig& config() const { return cfg_; }
  MlpModel& qnet() { return qnet_; }
  const MlpModel& qnet() const { return qnet_; }
  ReplayBuffer& buffer() { return buffer_; }
  const ReplayBuffer& buffer() const { return buffer_; }

  double epsilon() const;
  uint64_t decisions_made() const { return decisions_; }
  uint64_t train_steps_done() const { return train_steps_; }
  std::vector<double> zero_state() const;

  // Picks an action under the current epsilon and advances the schedule.
  uint64_t decide();
  void store(const Experience& e);
  // One uniform minibatch + one gradient step on the chosen-action Q values;
  // returns the batch loss. Throws InsufficientData below batch_size.
  double train_step();
  uint64_t greedy_action() const;
  std::vector<KnobVector> propose(int k);

  // Checkpoint: mlp weights (online + target) + buffer dump + schedule state.
  void save(const std::string& path) const;
  static DqnAgent load(const std::string& path, const KnobSchema& schema);

 private:
  KnobSchema schema_;
  AgentConfig cfg_;
  ActionSpace space_;
  MlpModel qnet_;
  MlpModel target_;
  ReplayBuffer buffer_;
  Rng rng_;
  uint64_t decisions_ = 0;
  uint64_t train_steps_ = 0;
};

}  // namespace covsteer
