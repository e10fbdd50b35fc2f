#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "covsteer/sim_types.hpp"

namespace covsteer {

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class NonFiniteLoss : public Error {
 public:
  using Error::Error;
};

// Dense feed-forward network: ReLU hidden layers, identity output.
// weights[l] is row-major [out x in] for layer l.
struct MlpModel {
  std::vector<int> sizes;
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;

  size_t num_layers() const { return weights.size(); }
  size_t num_params() const;
  int input_dim() const { return sizes.front(); }
  int output_dim() const { return sizes.back(); }
};

// Scaled-uniform init: U(-1/sqrt(fan_in), 1/sqrt(fan_in)); deterministic given seed.
MlpModel mlp_init(const std::vector<int>& sizes, uint64_t seed);

std::vector<double> mlp_forward(const MlpModel& m, std::span<const double> input);

// Activations retained for backprop. act[0] is the input; act[l+1] the
// post-activation output of layer l.
struct ForwardCache {
  std::vector<std::vector<double>> act;
};

std::vector<double> mlp_forward_cached(const MlpModel& m, std::span<const double> input,
                                       ForwardCache& cache);

struct MlpGrads {
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;

  static MlpGrads zeros_like(const MlpModel& m);
  void scale(double s);
};

// Accumulates parameter gradients for one sample given dLoss/dOutput.
void mlp_backward(const MlpModel& m, const ForwardCache& cache, std::span<const double> grad_out,
                  MlpGrads& accum);

enum class Optimizer : uint8_t { Sgd, SgdMomentum };

struct TrainConfig {
  double learning_rate = 1e-3;
  int batch_size = 32;
  int epochs = 200;
  Optimizer optimizer = Optimizer::SgdMomentum;
  double momentum = 0.9;
  uint64_t seed = 0;

  void validate() const;
};

// Optimizer state kept across steps (momentum buffers).
struct SgdState {
  std::vector<std::vector<double>> vel_w;
  std::vector<std::vector<double>> vel_b;

  static SgdState zeros_like(const MlpModel& m);
};

void mlp_apply_step(MlpModel& m, const MlpGrads& grads, const TrainConfig& cfg, SgdState& state);

// Mini-batch MSE training; returns per-epoch mean loss over the dataset.
// Data order is shuffled per epoch from cfg.seed; deterministic. Throws
// NonFiniteLoss if the loss diverges.
std::vector<double> mlp_train(MlpModel& m, const std::vector<std::vector<double>>& inputs,
                              const std::vector<std::vector<double>>& targets,
                              const TrainConfig& cfg);

// Checkpoint format "CSMLP001": layer count + sizes + flat little-endian
// IEEE-754 doubles; bit-exact round trip.
void mlp_save(const MlpModel& m, const std::string& path);
MlpModel mlp_load(const std::string& path);
std::vector<uint8_t> mlp_serialize(const MlpModel& m);
MlpModel mlp_deserialize(std::span<const uint8_t> bytes, size_t* consumed = nullptr);

}  // namespace covsteer
