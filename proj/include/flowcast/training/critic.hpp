#pragma once

#include "flowcast/numerics/adam.hpp"
#include "flowcast/numerics/layers.hpp"

namespace flowcast::training {

using numerics::Array;
using numerics::Var;

/// Condition-aware scalar critic g(x, c) for the dual Wasserstein estimate:
/// [x, c] -> affine -> ReLU -> affine. Every weight and bias is kept inside
/// [-clamp, clamp].
class Critic {
 public:
  Critic(std::size_t dim, std::size_t cond_dim, std::size_t hidden, double clamp,
         numerics::Rng& rng);

  /// One value per row, shape [N].
  Var operator()(Var x, Var c) const;

  void clamp_weights();
  double clamp_bound() const noexcept { return clamp_; }
  double max_abs_weight() const;
  std::vector<numerics::ParameterPtr> parameters() const;

  numerics::Linear hidden;
  numerics::Linear output;

 private:
  double clamp_;
};

/// mean g(x_data, c_data) - mean g(x_model, c_model).
Var wasserstein_dual_estimate(const Critic& critic, Var data_x, Var data_c, Var model_x,
                              Var model_c);
double wasserstein_dual_estimate(const Critic& critic, const Array& data_x, const Array& data_c,
                                 const Array& model_x, const Array& model_c);

/// One ascent step on the dual estimate followed by re-clamping. Returns the
/// estimate measured before the update.
double critic_step(Critic& critic, numerics::Adam& optimizer, const Array& data_x,
                   const Array& data_c, const Array& model_x, const Array& model_c);

}  // namespace flowcast::training
