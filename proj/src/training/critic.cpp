#include "flowcast/training/critic.hpp"

#include <algorithm>
#include <cmath>

#include "flowcast/error.hpp"
#include "flowcast/numerics/ops.hpp"

namespace flowcast::training {

using namespace numerics;

Critic::Critic(std::size_t dim, std::size_t cond_dim, std::size_t hidden_width, double clamp,
               Rng& rng)
    : hidden(dim + cond_dim, hidden_width, rng, Init::Zero),
      output(hidden_width, 1, rng, Init::Zero),
      clamp_(clamp) {
  if (!(clamp > 0.0)) throw InputError("critic clamp bound must be positive");
  if (hidden_width == 0) throw InputError("critic hidden width must be positive");
  for (const auto& p : parameters()) {
    for (double& v : p->value.values()) v = rng.uniform(-clamp_, clamp_);
  }
}

Var Critic::operator()(Var x, Var c) const {
  Var input = c.shape()[1] == 0 ? x : concat({x, c}, 1);
  Var h = output(relu(hidden(input)));
  return reshape(h, Shape{h.shape()[0]});
}

void Critic::clamp_weights() {
  for (const auto& p : parameters()) {
    for (double& v : p->value.values()) v = std::clamp(v, -clamp_, clamp_);
  }
}

double Critic::max_abs_weight() const {
  double m = 0.0;
  for (const auto& p : parameters()) m = std::max(m, p->value.max_abs());
  return m;
}

std::vector<ParameterPtr> Critic::parameters() const {
  return {hidden.weight, hidden.bias, output.weight, output.bias};
}

Var wasserstein_dual_estimate(const Critic& critic, Var data_x, Var data_c, Var model_x,
                              Var model_c) {
  if (data_x.shape()[0] == 0 || model_x.shape()[0] == 0) {
    throw InputError("Wasserstein estimate needs nonempty data and model batches");
  }
  return sub(mean(critic(data_x, data_c)), mean(critic(model_x, model_c)));
}

double wasserstein_dual_estimate(const Critic& critic, const Array& data_x, const Array& data_c,
                                 const Array& model_x, const Array& model_c) {
  Graph g;
  return wasserstein_dual_estimate(critic, g.constant(data_x), g.constant(data_c),
                                   g.constant(model_x), g.constant(model_c))
      .value()
      .item();
}

double critic_step(Critic& critic, Adam& optimizer, const Array& data_x, const Array& data_c,
                   const Array& model_x, const Array& model_c) {
  Graph g;
  Var estimate = wasserstein_dual_estimate(critic, g.constant(data_x), g.constant(data_c),
                                           g.constant(model_x), g.constant(model_c));
  const double value = estimate.value().item();
  if (!std::isfinite(value)) throw NumericalError("critic estimate is not finite");
  optimizer.zero_grad();
  g.backward(scale(estimate, -1.0));
  optimizer.step();
  critic.clamp_weights();
  return value;
}

}  // namespace flowcast::training
