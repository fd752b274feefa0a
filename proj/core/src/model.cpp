#include "dynaweight/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>

#include "dynaweight/rng.hpp"

namespace dynaweight {

int ModelSpec::param_count() const {
  if (layer_sizes.size() < 2) {
    throw std::invalid_argument("ModelSpec: need at least input and output layer sizes");
  }
  int total = 0;
  for (std::size_t l = 1; l < layer_sizes.size(); ++l) {
    total += layer_sizes[l] * layer_sizes[l - 1] + layer_sizes[l];
  }
  return total;
}

double OptimizerState::learning_rate(int epoch) const {
  switch (schedule) {
    case LrSchedule::Constant:
      return base_lr;
    case LrSchedule::HalveEveryK:
      return base_lr * std::pow(0.5, epoch / halve_every);
    case LrSchedule::ExpDecayToFloor: {
      int last = total_epochs - 1;
      if (epoch < decay_start || last <= decay_start) return base_lr;
      double frac = static_cast<double>(epoch - decay_start) / (last - decay_start);
      return base_lr * std::pow(lr_floor / base_lr, frac);
    }
    case LrSchedule::LinearDecay: {
      if (total_epochs <= 1) return base_lr;
      double frac = static_cast<double>(epoch) / (total_epochs - 1);
      return base_lr * (1.0 - frac * 0.99);
    }
  }
  return base_lr;
}

ParamVector init_params(const ModelSpec& spec, std::uint64_t seed) {
  auto rng = make_rng(seed);
  ParamVector params(spec.param_count(), 0.0);
  std::size_t pos = 0;
  for (int l = 1; l <= spec.num_layers(); ++l) {
    const int fan_in = spec.layer_sizes[l - 1];
    const int fan_out = spec.layer_sizes[l];
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (int k = 0; k < fan_out * fan_in; ++k) params[pos++] = dist(rng);
    pos += fan_out;  // biases stay zero
  }
  return params;
}

namespace {

struct Workspace {
  // Activations per layer boundary (a[0] = input) and pre-activations z.
  std::vector<std::vector<double>> a;
  std::vector<std::vector<double>> z;
  std::vector<std::vector<double>> delta;

  explicit Workspace(const ModelSpec& spec) {
    const auto& ls = spec.layer_sizes;
    a.resize(ls.size());
    z.resize(ls.size());
    delta.resize(ls.size());
    for (std::size_t l = 0; l < ls.size(); ++l) {
      a[l].resize(ls[l]);
      z[l].resize(ls[l]);
      delta[l].resize(ls[l]);
    }
  }
};

double activate(double x, Activation act) {
  return act == Activation::Tanh ? std::tanh(x) : (x > 0.0 ? x : 0.0);
}

double activate_grad(double z, double a, Activation act) {
  return act == Activation::Tanh ? 1.0 - a * a : (z > 0.0 ? 1.0 : 0.0);
}

void check_dims(const ParamVector& params, const ModelSpec& spec, const Dataset& ds) {
  if (static_cast<int>(params.size()) != spec.param_count()) {
    throw std::invalid_argument("model: parameter vector length " +
                                std::to_string(params.size()) + " does not match spec (" +
                                std::to_string(spec.param_count()) + ")");
  }
  if (ds.dim != spec.layer_sizes.front()) {
    throw std::invalid_argument("model: feature dim " + std::to_string(ds.dim) +
                                " does not match input layer " +
                                std::to_string(spec.layer_sizes.front()));
  }
}

// Forward pass for one sample; fills ws.a and ws.z, returns the logits
// reference (last activation row, no nonlinearity applied).
const std::vector<double>& forward(const ParamVector& params, const ModelSpec& spec,
                                   const double* x, Workspace& ws) {
  const auto& ls = spec.layer_sizes;
  std::copy(x, x + ls[0], ws.a[0].begin());
  std::size_t pos = 0;
  for (int l = 1; l <= spec.num_layers(); ++l) {
    const int in = ls[l - 1];
    const int out = ls[l];
    const double* w = params.data() + pos;
    const double* b = w + static_cast<std::size_t>(out) * in;
    const bool last = l == spec.num_layers();
    for (int o = 0; o < out; ++o) {
      double acc = b[o];
      const double* wrow = w + static_cast<std::size_t>(o) * in;
      for (int i = 0; i < in; ++i) acc += wrow[i] * ws.a[l - 1][i];
      ws.z[l][o] = acc;
      ws.a[l][o] = last ? acc : activate(acc, spec.activation);
    }
    pos += static_cast<std::size_t>(out) * in + out;
  }
  return ws.a[spec.num_layers()];
}

// log(sum exp(z)) with the max factored out.
double log_sum_exp(const std::vector<double>& logits) {
  double m = *std::max_element(logits.begin(), logits.end());
  double acc = 0.0;
  for (double v : logits) acc += std::exp(v - m);
  return m + std::log(acc);
}

}  // namespace

double loss(const ParamVector& params, const ModelSpec& spec, const Dataset& ds,
            std::span<const int> indices) {
  check_dims(params, spec, ds);
  if (indices.empty()) throw std::invalid_argument("loss: empty batch");
  Workspace ws(spec);
  double total = 0.0;
  for (int idx : indices) {
    const auto& logits = forward(params, spec, ds.row(idx), ws);
    total += log_sum_exp(logits) - logits[ds.labels[idx]];
  }
  return total / static_cast<double>(indices.size());
}

double loss(const ParamVector& params, const ModelSpec& spec, const Dataset& batch) {
  std::vector<int> all(batch.size());
  std::iota(all.begin(), all.end(), 0);
  return loss(params, spec, batch, all);
}

ParamVector gradient(const ParamVector& params, const ModelSpec& spec, const Dataset& ds,
                     std::span<const int> indices) {
  check_dims(params, spec, ds);
  if (indices.empty()) throw std::invalid_argument("gradient: empty batch");
  const auto& ls = spec.layer_sizes;
  Workspace ws(spec);
  ParamVector grad(params.size(), 0.0);
  const double inv_batch = 1.0 / static_cast<double>(indices.size());

  for (int idx : indices) {
    const auto& logits = forward(params, spec, ds.row(idx), ws);
    const int L = spec.num_layers();

    // dL/dz at the output: softmax minus one-hot, scaled for the batch mean.
    double m = *std::max_element(logits.begin(), logits.end());
    double denom = 0.0;
    for (double v : logits) denom += std::exp(v - m);
    for (int c = 0; c < ls[L]; ++c) {
      ws.delta[L][c] = (std::exp(logits[c] - m) / denom - (c == ds.labels[idx] ? 1.0 : 0.0)) *
                       inv_batch;
    }

    std::size_t pos = params.size();
    for (int l = L; l >= 1; --l) {
      const int in = ls[l - 1];
      const int out = ls[l];
      pos -= static_cast<std::size_t>(out) * in + out;
      const double* w = params.data() + pos;
      double* gw = grad.data() + pos;
      double* gb = gw + static_cast<std::size_t>(out) * in;

      for (int o = 0; o < out; ++o) {
        const double d = ws.delta[l][o];
        gb[o] += d;
        double* gwrow = gw + static_cast<std::size_t>(o) * in;
        for (int i = 0; i < in; ++i) gwrow[i] += d * ws.a[l - 1][i];
      }
      if (l > 1) {
        for (int i = 0; i < in; ++i) {
          double acc = 0.0;
          for (int o = 0; o < out; ++o) {
            acc += w[static_cast<std::size_t>(o) * in + i] * ws.delta[l][o];
          }
          ws.delta[l - 1][i] = acc * activate_grad(ws.z[l - 1][i], ws.a[l - 1][i],
                                                   spec.activation);
        }
      }
    }
  }
  return grad;
}

ParamVector gradient(const ParamVector& params, const ModelSpec& spec, const Dataset& batch) {
  std::vector<int> all(batch.size());
  std::iota(all.begin(), all.end(), 0);
  return gradient(params, spec, batch, all);
}

void optimizer_step(ParamVector& params, const ParamVector& grad, OptimizerState& state,
                    int epoch) {
  if (grad.size() != params.size()) {
    throw std::invalid_argument("optimizer_step: gradient length " +
                                std::to_string(grad.size()) + " vs params " +
                                std::to_string(params.size()));
  }
  const double lr = state.learning_rate(epoch);
  if (state.kind == OptimizerKind::Sgd) {
    for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr * grad[i];
    ++state.step_count;
    return;
  }

  if (state.first_moment.size() != params.size()) {
    state.first_moment.assign(params.size(), 0.0);
    state.second_moment.assign(params.size(), 0.0);
  }
  ++state.step_count;
  const double bc1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(state.step_count));
  const double bc2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(state.step_count));
  for (std::size_t i = 0; i < params.size(); ++i) {
    double& m = state.first_moment[i];
    double& v = state.second_moment[i];
    m = kAdamBeta1 * m + (1.0 - kAdamBeta1) * grad[i];
    v = kAdamBeta2 * v + (1.0 - kAdamBeta2) * grad[i] * grad[i];
    params[i] -= lr * (m / bc1) / (std::sqrt(v / bc2) + kAdamEpsilon);
  }
}

double accuracy(const ParamVector& params, const ModelSpec& spec, const Dataset& ds) {
  check_dims(params, spec, ds);
  if (ds.size() == 0) throw std::invalid_argument("accuracy: empty dataset");
  Workspace ws(spec);
  int correct = 0;
  for (int idx = 0; idx < ds.size(); ++idx) {
    const auto& logits = forward(params, spec, ds.row(idx), ws);
    int best = 0;
    for (int c = 1; c < static_cast<int>(logits.size()); ++c) {
      if (logits[c] > logits[best]) best = c;  // ties keep the lowest index
    }
    if (best == ds.labels[idx]) ++correct;
  }
  return static_cast<double>(correct) / ds.size();
}

namespace {

constexpr char kCheckpointMagic[4] = {'D', 'W', 'P', 'V'};
constexpr std::uint32_t kCheckpointVersion = 1;

void put_u32(std::ofstream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ofstream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint32_t get_u32(std::ifstream& in, const std::filesystem::path& path, const char* field) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) {
    throw std::runtime_error("load_params: " + path.string() + ": truncated " + field);
  }
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t(b[i]) << (8 * i);
  return v;
}

std::uint64_t get_u64(std::ifstream& in, const std::filesystem::path& path, const char* field) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) {
    throw std::runtime_error("load_params: " + path.string() + ": truncated " + field);
  }
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t(b[i]) << (8 * i);
  return v;
}

}  // namespace

void save_params(const ParamVector& params, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_params: cannot open " + path.string());
  out.write(kCheckpointMagic, 4);
  put_u32(out, kCheckpointVersion);
  put_u64(out, params.size());
  for (double d : params) put_u64(out, std::bit_cast<std::uint64_t>(d));
  if (!out) throw std::runtime_error("save_params: write failed for " + path.string());
}

ParamVector load_params(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_params: cannot open " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kCheckpointMagic, 4) != 0) {
    throw std::runtime_error("load_params: " + path.string() + ": bad magic");
  }
  std::uint32_t version = get_u32(in, path, "version");
  if (version != kCheckpointVersion) {
    throw std::runtime_error("load_params: " + path.string() + ": unsupported version " +
                             std::to_string(version));
  }
  std::uint64_t count = get_u64(in, path, "length");
  ParamVector params(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    params[i] = std::bit_cast<double>(get_u64(in, path, "payload"));
  }
  return params;
}

}  // namespace dynaweight
