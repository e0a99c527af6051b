#pragma once

#include <vector>

#include "flowcast/numerics/graph.hpp"

namespace flowcast::numerics {

/// Per-channel batch normalization for [N, C] or [N, C, L] inputs.
///
/// Training mode standardizes with the batch statistics (biased variance) and
/// folds them into the running estimates with an exponential moving average:
/// running = (1 - momentum) * running + momentum * batch, where the running
/// variance tracks the unbiased batch variance. Inference mode uses the running
/// estimates only, so the layer is a fixed affine map per channel.
class BatchNorm {
 public:
  explicit BatchNorm(std::size_t channels, double momentum = 0.1, double epsilon = 1e-5);

  /// Training-mode calls also update the running estimates.
  Var operator()(Var x) const;

  std::size_t channels() const noexcept { return channels_; }
  bool training() const noexcept { return training_; }
  void set_training(bool on) noexcept { training_ = on; }

  double momentum() const noexcept { return momentum_; }
  double epsilon() const noexcept { return epsilon_; }

  ParameterPtr gamma;
  ParameterPtr beta;
  mutable Array running_mean;
  mutable Array running_var;

 private:
  std::size_t channels_;
  double momentum_;
  double epsilon_;
  bool training_ = true;
};

}  // namespace flowcast::numerics
