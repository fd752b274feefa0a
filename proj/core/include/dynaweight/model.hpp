#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "dynaweight/dataset.hpp"

namespace dynaweight {

/// Flat vector of all model parameters for one server.
using ParamVector = std::vector<double>;

enum class Activation { Tanh, Relu };

/// Fully connected classifier. layer_sizes = {input dim, hidden..., classes};
/// parameters are packed layer by layer, weights (out x in, row-major) then
/// biases.
struct ModelSpec {
  std::vector<int> layer_sizes;
  Activation activation = Activation::Tanh;

  int num_layers() const { return static_cast<int>(layer_sizes.size()) - 1; }
  int param_count() const;
};

enum class OptimizerKind { Sgd, Adam };

enum class LrSchedule {
  Constant,
  HalveEveryK,      // base * 0.5^(epoch / halve_every)
  ExpDecayToFloor,  // constant until decay_start, then geometric to lr_floor
  LinearDecay,      // base down to base/100 across total_epochs
};

struct OptimizerState {
  OptimizerKind kind = OptimizerKind::Adam;
  double base_lr = 1e-4;
  LrSchedule schedule = LrSchedule::Constant;
  int halve_every = 20;
  int decay_start = 100;
  double lr_floor = 1e-6;
  int total_epochs = 1;  // horizon for the interpolating schedules
  long long step_count = 0;
  ParamVector first_moment;   // adam only
  ParamVector second_moment;  // adam only

  double learning_rate(int epoch) const;  // epoch is 0-based
};

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEpsilon = 1e-8;

// Weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases zero.
ParamVector init_params(const ModelSpec& spec, std::uint64_t seed);

// Mean cross-entropy over the batch, log-sum-exp stabilized.
double loss(const ParamVector& params, const ModelSpec& spec, const Dataset& batch);
double loss(const ParamVector& params, const ModelSpec& spec, const Dataset& ds,
            std::span<const int> indices);

// Exact analytic gradient of loss via backpropagation.
ParamVector gradient(const ParamVector& params, const ModelSpec& spec, const Dataset& batch);
ParamVector gradient(const ParamVector& params, const ModelSpec& spec, const Dataset& ds,
                     std::span<const int> indices);

// One SGD or bias-corrected Adam update in place; advances the state.
void optimizer_step(ParamVector& params, const ParamVector& grad, OptimizerState& state,
                    int epoch);

// Fraction of samples whose argmax logit matches the label; ties break
// toward the lowest class index.
double accuracy(const ParamVector& params, const ModelSpec& spec, const Dataset& ds);

// Checkpoint file: 16-byte header (magic "DWPV", u32 version, u64 length,
// little-endian) followed by length doubles, little-endian.
void save_params(const ParamVector& params, const std::filesystem::path& path);
ParamVector load_params(const std::filesystem::path& path);

}  // namespace dynaweight
