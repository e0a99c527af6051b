#include "flowcast/flow/flow_model.hpp"

#include <cmath>
#include <numbers>

#include "flowcast/error.hpp"
#include "flowcast/numerics/ops.hpp"

namespace flowcast::flow {

using namespace numerics;

Array FlowTrace::total_logdet() const {
  Array total(Shape{latent.rank() == 2 ? latent.extent(0) : 0});
  for (const Array& b : block_logdets) {
    for (std::size_t i = 0; i < total.size(); ++i) total[i] += b[i];
  }
  return total;
}

Var standard_normal_log_density(Var z) {
  const double d = static_cast<double>(z.shape()[1]);
  return add_scalar(scale(sum_last(square(z)), -0.5), -0.5 * d * std::log(2.0 * std::numbers::pi));
}

FlowModel::FlowModel(const FlowConfig& config) : config_(config) {
  if (config_.blocks == 0) throw InputError("flow needs at least one coupling block");
  if (config_.dim == 0) throw InputError("flow data dimension must be positive");
  Rng rng(config_.seed);
  blocks_.reserve(config_.blocks);
  for (std::size_t k = 0; k < config_.blocks; ++k) {
    blocks_.emplace_back(config_.variant, config_.dim, config_.cond_dim, k % 2 == 1, config_.nets,
                         rng);
  }
  set_training(false);
}

FlowModel FlowModel::clone() const {
  FlowModel copy(config_);
  copy.restore(snapshot());
  copy.set_training(training_);
  return copy;
}

FlowModel::Pass FlowModel::forward(Var x, Var c) const {
  Pass pass;
  Var h = x;
  for (const auto& block : blocks_) {
    auto r = block.forward(h, c);
    h = r.y;
    pass.block_logdets.push_back(r.logdet);
    pass.logdet = pass.block_logdets.size() == 1 ? r.logdet : add(pass.logdet, r.logdet);
  }
  pass.latent = h;
  return pass;
}

Var FlowModel::inverse(Var z, Var c) const {
  Var h = z;
  for (auto it = blocks_.rbegin(); it != blocks_.rend(); ++it) h = it->inverse(h, c);
  return h;
}

Var FlowModel::log_prob(Var x, Var c) const {
  const Pass pass = forward(x, c);
  return add(standard_normal_log_density(pass.latent), pass.logdet);
}

LogProbResult FlowModel::log_prob(const Array& x, const Array& c) const {
  Graph g;
  Var xv = g.constant(as_batch(x, config_.dim, "log_prob x"));
  Var cv = g.constant(as_batch(c, config_.cond_dim, "log_prob c"));
  if (xv.shape()[0] != cv.shape()[0]) throw DimensionError("log_prob: batch sizes differ");
  const Pass pass = forward(xv, cv);
  Var lp = add(standard_normal_log_density(pass.latent), pass.logdet);
  LogProbResult result;
  result.log_prob = lp.value();
  if (!result.log_prob.all_finite()) throw NumericalError("non-finite log-density");
  result.trace.latent = pass.latent.value();
  for (Var b : pass.block_logdets) result.trace.block_logdets.push_back(b.value());
  return result;
}

Array FlowModel::forward(const Array& x, const Array& c) const {
  Graph g;
  Var xv = g.constant(as_batch(x, config_.dim, "forward x"));
  Var cv = g.constant(as_batch(c, config_.cond_dim, "forward c"));
  return forward(xv, cv).latent.value();
}

Array FlowModel::sample(const Array& c, const Array& z) const {
  Graph g;
  Var zv = g.constant(as_batch(z, config_.dim, "sample z"));
  Var cv = g.constant(as_batch(c, config_.cond_dim, "sample c"));
  if (zv.shape()[0] != cv.shape()[0]) throw DimensionError("sample: batch sizes differ");
  Array x = inverse(zv, cv).value();
  if (!x.all_finite()) throw NumericalError("non-finite sample");
  return x;
}

void FlowModel::set_training(bool on) {
  training_ = on;
  for (auto& b : blocks_) b.set_training(on);
}

std::vector<ParameterPtr> FlowModel::parameters() const {
  std::vector<ParameterPtr> out;
  for (const auto& b : blocks_) {
    auto p = b.parameters();
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

void FlowModel::visit(const TensorVisitor& visitor) {
  for (std::size_t k = 0; k < blocks_.size(); ++k) {
    blocks_[k].visit("blocks." + std::to_string(k), visitor);
  }
}

void FlowModel::each_tensor(
    const std::function<void(const std::string&, const Array&)>& visitor) const {
  // The visitor only receives const views, so the cast does not expose mutation.
  const_cast<FlowModel*>(this)->visit(
      TensorVisitor([&](const std::string& name, Array& a) { visitor(name, a); }));
}

std::vector<Array> FlowModel::snapshot() const {
  std::vector<Array> state;
  each_tensor([&](const std::string&, const Array& a) { state.push_back(a); });
  return state;
}

void FlowModel::restore(const std::vector<Array>& state) {
  std::size_t i = 0;
  visit(TensorVisitor([&](const std::string& name, Array& a) {
    if (i >= state.size() || state[i].shape() != a.shape()) {
      throw DimensionError("restore: tensor '" + name + "' does not match the saved state");
    }
    a = state[i++];
  }));
  if (i != state.size()) throw DimensionError("restore: saved state has extra tensors");
}

}  // namespace flowcast::flow
