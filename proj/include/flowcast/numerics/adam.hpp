#pragma once

#include <cstdint>
#include <vector>

#include "flowcast/numerics/graph.hpp"

namespace flowcast::numerics {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam with bias-corrected moments.
class Adam {
 public:
  explicit Adam(std::vector<ParameterPtr> params, AdamConfig config = {});

  /// Applies one update from the accumulated gradients, then zeroes them.
  /// A non-finite gradient rejects the whole step (nothing is modified) and
  /// throws NumericalError naming the parameter.
  void step();
  void zero_grad();

  std::uint64_t steps() const noexcept { return steps_; }
  const AdamConfig& config() const noexcept { return config_; }
  const std::vector<ParameterPtr>& parameters() const noexcept { return params_; }

  const Array& first_moment(std::size_t i) const { return m_.at(i); }
  const Array& second_moment(std::size_t i) const { return v_.at(i); }

 private:
  std::vector<ParameterPtr> params_;
  std::vector<Array> m_;
  std::vector<Array> v_;
  AdamConfig config_;
  std::uint64_t steps_ = 0;
};

}  // namespace flowcast::numerics
