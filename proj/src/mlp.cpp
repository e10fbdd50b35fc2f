#include "covsteer/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "covsteer/rng.hpp"

namespace covsteer {

size_t MlpModel::num_params() const {
  size_t n = 0;
  for (size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + biases[l].size();
  return n;
}

MlpModel mlp_init(const std::vector<int>& sizes, uint64_t seed) {
  if (sizes.size() < 2) throw ConfigError("mlp needs at least 2 layers");
  for (int s : sizes)
    if (s < 1) throw ConfigError("mlp layer sizes must be >= 1");

  MlpModel m;
  m.sizes = sizes;
  Rng rng(seed);
  for (size_t l = 0; l + 1 < sizes.size(); ++l) {
    int in = sizes[l], out = sizes[l + 1];
    double scale = 1.0 / std::sqrt(static_cast<double>(in));
    std::vector<double> w(static_cast<size_t>(in) * static_cast<size_t>(out));
    for (double& x : w) x = rng.uniform(-scale, scale);
    m.weights.push_back(std::move(w));
    m.biases.emplace_back(static_cast<size_t>(out), 0.0);
  }
  return m;
}

namespace {

void layer_forward(const MlpModel& m, size_t l, std::span<const double> in, std::vector<double>& out,
                   bool relu) {
  int ni = m.sizes[l], no = m.sizes[l + 1];
  out.assign(static_cast<size_t>(no), 0.0);
  const double* w = m.weights[l].data();
  for (int o = 0; o < no; ++o) {
    double acc = m.biases[l][static_cast<size_t>(o)];
    const double* row = w + static_cast<size_t>(o) * static_cast<size_t>(ni);
    for (int i = 0; i < ni; ++i) acc += row[i] * in[static_cast<size_t>(i)];
    out[static_cast<size_t>(o)] = relu ? std::max(0.0, acc) : acc;
  }
}

}  // namespace

std::vector<double> mlp_forward(const MlpModel& m, std::span<const double> input) {
  if (static_cast<int>(input.size()) != m.input_dim())
    throw DimensionMismatch("mlp input dim " + std::to_string(input.size()) + " != " +
                            std::to_string(m.input_dim()));
  std::vector<double> cur(input.begin(), input.end());
  std::vector<double> next;
  for (size_t l = 0; l < m.num_layers(); ++l) {
    layer_forward(m, l, cur, next, l + 1 < m.num_layers());
    cur.swap(next);
  }
  return cur;
}

std::vector<double> mlp_forward_cached(const MlpModel& m, std::span<const double> input,
                                       ForwardCache& cache) {
  if (static_cast<int>(input.size()) != m.input_dim())
    throw DimensionMismatch("mlp input dim mismatch");
  cache.act.assign(m.num_layers() + 1, {});
  cache.act[0].assign(input.begin(), input.end());
  for (size_t l = 0; l < m.num_layers(); ++l) {
    layer_forward(m, l, cache.act[l], cache.act[l + 1], l + 1 < m.num_layers());
  }
  return cache.act.back();
}

MlpGrads MlpGrads::zeros_like(const MlpModel& m) {
  MlpGrads g;
  for (size_t l = 0; l < m.num_layers(); ++l) {
    g.weights.emplace_back(m.weights[l].size(), 0.0);
    g.biases.emplace_back(m.biases[l].size(), 0.0);
  }
  return g;
}

void MlpGrads::scale(double s) {
  for (auto& w : weights)
    for (double& x : w) x *= s;
  for (auto& b : biases)
    for (double& x : b) x *= s;
}

void mlp_backward(const MlpModel& m, const ForwardCache& cache, std::span<const double> grad_out,
                  MlpGrads& accum) {
  const size_t L = m.num_layers();
  std::vector<double> delta(grad_out.begin(), grad_out.end());
  for (size_t l = L; l-- > 0;) {
    int ni = m.sizes[l], no = m.sizes[l + 1];
    const std::vector<double>& in_act = cache.act[l];
    // ReLU derivative on hidden layers: post-activation > 0 iff pre > 0.
    if (l + 1 < L) {
      const std::vector<double>& out_act = cache.act[l + 1];
      for (int o = 0; o < no; ++o)
        if (out_act[static_cast<size_t>(o)] <= 0.0) delta[static_cast<size_t>(o)] = 0.0;
    }
    double* gw = accum.weights[l].data();
    for (int o = 0; o < no; ++o) {
      double d = delta[static_cast<size_t>(o)];
      accum.biases[l][static_cast<size_t>(o)] += d;
      double* row = gw + static_cast<size_t>(o) * static_cast<size_t>(ni);
      for (int i = 0; i < ni; ++i) row[i] += d * in_act[static_cast<size_t>(i)];
    }
    if (l == 0) break;
    std::vector<double> prev(static_cast<size_t>(ni), 0.0);
    const double* w = m.weights[l].data();
    for (int o = 0; o < no; ++o) {
      double d = delta[static_cast<size_t>(o)];
      const double* row = w + static_cast<size_t>(o) * static_cast<size_t>(ni);
      for (int i = 0; i < ni; ++i) prev[static_cast<size_t>(i)] += d * row[i];
    }
    delta.swap(prev);
  }
}

void TrainConfig::validate() const {
  if (learning_rate <= 0) throw ConfigError("learning_rate must be > 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (momentum < 0 || momentum >= 1) throw ConfigError("momentum must be in [0,1)");
}

SgdState SgdState::zeros_like(const MlpModel& m) {
  SgdState s;
  for (size_t l = 0; l < m.num_layers(); ++l) {
    s.vel_w.emplace_back(m.weights[l].size(), 0.0);
    s.vel_b.emplace_back(m.biases[l].size(), 0.0);
  }
  return s;
}

void mlp_apply_step(MlpModel& m, const MlpGrads& grads, const TrainConfig& cfg, SgdState& state) {
  const double lr = cfg.learning_rate;
  const bool mom = cfg.optimizer == Optimizer::SgdMomentum;
  for (size_t l = 0; l < m.num_layers(); ++l) {
    for (size_t i = 0; i < m.weights[l].size(); ++i) {
      double g = grads.weights[l][i];
      if (mom) {
        state.vel_w[l][i] = cfg.momentum * state.vel_w[l][i] + g;
        g = state.vel_w[l][i];
      }
      m.weights[l][i] -= lr * g;
    }
    for (size_t i = 0; i < m.biases[l].size(); ++i) {
      double g = grads.biases[l][i];
      if (mom) {
        state.vel_b[l][i] = cfg.momentum * state.vel_b[l][i] + g;
        g = state.vel_b[l][i];
      }
      m.biases[l][i] -= lr * g;
    }
  }
}

std::vector<double> mlp_train(MlpModel& m, const std::vector<std::vector<double>>& inputs,
                              const std::vector<std::vector<double>>& targets,
                              const TrainConfig& cfg) {
  cfg.validate();
  if (inputs.empty() || inputs.size() != targets.size())
    throw DimensionMismatch("mlp_train needs a nonempty dataset with matching target count");
  const size_t N = inputs.size();
  const int out_dim = m.output_dim();

  Rng rng(cfg.seed);
  SgdState state = SgdState::zeros_like(m);
  std::vector<size_t> order(N);
  std::iota(order.begin(), order.end(), 0);

  std::vector<double> epoch_losses;
  epoch_losses.reserve(static_cast<size_t>(cfg.epochs));
  ForwardCache cache;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    // Fisher-Yates with our own rng for replayable shuffles.
    for (size_t i = N; i > 1; --i) {
      size_t j = rng.below(i);
      std::swap(order[i - 1], order[j]);
    }

    double loss_sum = 0.0;
    for (size_t start = 0; start < N; start += static_cast<size_t>(cfg.batch_size)) {
      size_t end = std::min(N, start + static_cast<size_t>(cfg.batch_size));
      MlpGrads grads = MlpGrads::zeros_like(m);
      for (size_t k = start; k < end; ++k) {
        const auto& x = inputs[order[k]];
        const auto& y = targets[order[k]];
        if (static_cast<int>(y.size()) != out_dim) throw DimensionMismatch("target dim mismatch");
        std::vector<double> pred = mlp_forward_cached(m, x, cache);
        std::vector<double> grad_out(static_cast<size_t>(out_dim));
        for (int o = 0; o < out_dim; ++o) {
          double diff = pred[static_cast<size_t>(o)] - y[static_cast<size_t>(o)];
          loss_sum += diff * diff;
          // d/dpred of mean-over-outputs squared error.
          grad_out[static_cast<size_t>(o)] = 2.0 * diff / out_dim;
        }
        mlp_backward(m, cache, grad_out, grads);
      }
      grads.scale(1.0 / static_cast<double>(end - start));
      mlp_apply_step(m, grads, cfg, state);
    }
    double epoch_loss = loss_sum / (static_cast<double>(N) * out_dim);
    if (!std::isfinite(epoch_loss))
      throw NonFiniteLoss("training diverged at epoch " + std::to_string(epoch));
    epoch_losses.push_back(epoch_loss);
  }
  return epoch_losses;
}

namespace {

constexpr char kMagic[8] = {'C', 'S', 'M', 'L', 'P', '0', '0', '1'};

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>((v >> (8 * i)) & 0xFF));
}

void put_f64(std::vector<uint8_t>& out, double v) {
  uint64_t bits;
  std::memcpy(&bits, &v, 8);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<uint8_t>((bits >> (8 * i)) & 0xFF));
}

uint32_t get_u32(std::span<const uint8_t> in, size_t& pos) {
  if (pos + 4 > in.size()) throw Error("mlp checkpoint truncated");
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(in[pos + static_cast<size_t>(i)]) << (8 * i);
  pos += 4;
  return v;
}

double get_f64(std::span<const uint8_t> in, size_t& pos) {
  if (pos + 8 > in.size()) throw Error("mlp checkpoint truncated");
  uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<uint64_t>(in[pos + static_cast<size_t>(i)]) << (8 * i);
  pos += 8;
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

}  // namespace

std::vector<uint8_t> mlp_serialize(const MlpModel& m) {
  std::vector<uint8_t> out(kMagic, kMagic + 8);
  put_u32(out, static_cast<uint32_t>(m.sizes.size()));
  for (int s : m.sizes) put_u32(out, static_cast<uint32_t>(s));
  for (size_t l = 0; l < m.num_layers(); ++l) {
    for (double v : m.weights[l]) put_f64(out, v);
    for (double v : m.biases[l]) put_f64(out, v);
  }
  return out;
}

MlpModel mlp_deserialize(std::span<const uint8_t> bytes, size_t* consumed) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 8) != 0)
    throw Error("not an mlp checkpoint (bad magic)");
  size_t pos = 8;
  uint32_t n = get_u32(bytes, pos);
  if (n < 2 || n > 64) throw Error("mlp checkpoint: bad layer count");
  std::vector<int> sizes(n);
  for (auto& s : sizes) s = static_cast<int>(get_u32(bytes, pos));
  MlpModel m;
  m.sizes = sizes;
  for (size_t l = 0; l + 1 < sizes.size(); ++l) {
    size_t nw = static_cast<size_t>(sizes[l]) * static_cast<size_t>(sizes[l + 1]);
    std::vector<double> w(nw);
    for (double& v : w) v = get_f64(bytes, pos);
    std::vector<double> b(static_cast<size_t>(sizes[l + 1]));
    for (double& v : b) v = get_f64(bytes, pos);
    m.weights.push_back(std::move(w));
    m.biases.push_back(std::move(b));
  }
  if (consumed) *consumed = pos;
  return m;
}

void mlp_save(const MlpModel& m, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  auto bytes = mlp_serialize(m);
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("write failed: '" + path + "'");
}

MlpModel mlp_load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "'");
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return mlp_deserialize(bytes);
}

}  // namespace covsteer
