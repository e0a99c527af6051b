#include "flowcast/flow/coupling.hpp"

#include "flowcast/error.hpp"
#include "flowcast/numerics/ops.hpp"

namespace flowcast::flow {

using namespace numerics;

std::string_view to_string(CouplingVariant variant) {
  switch (variant) {
    case CouplingVariant::Vanilla:
      return "vanilla";
    case CouplingVariant::Reinforced:
      return "reinforced";
  }
  return "unknown";
}

CouplingVariant parse_variant(std::string_view tag) {
  if (tag == "vanilla") return CouplingVariant::Vanilla;
  if (tag == "reinforced") return CouplingVariant::Reinforced;
  throw InputError("unknown coupling variant '" + std::string(tag) +
                   "' (expected vanilla or reinforced)");
}

Array as_batch(const Array& a, std::size_t width, const char* what) {
  if (a.rank() == 1 && a.extent(0) == width) return a.reshaped(Shape{1, width});
  if (a.rank() == 2 && a.extent(1) == width) return a;
  throw DimensionError(std::string(what) + ": expected width " + std::to_string(width) + ", got " +
                       numerics::to_string(a.shape()));
}

namespace {

Var activate(Var v, Activation a) { return a == Activation::Tanh ? numerics::tanh(v) : relu(v); }

void visit_param(const std::string& name, const ParameterPtr& p, const TensorVisitor& visitor) {
  visitor(name, p->value);
}

void visit_norm(const std::string& prefix, BatchNorm& bn, const TensorVisitor& visitor) {
  visit_param(prefix + ".gamma", bn.gamma, visitor);
  visit_param(prefix + ".beta", bn.beta, visitor);
  visitor(prefix + ".running_mean", bn.running_mean);
  visitor(prefix + ".running_var", bn.running_var);
}

void check_finite(Var v, const char* what) {
  if (!v.value().all_finite()) throw NumericalError(std::string("non-finite ") + what);
}

}  // namespace

ConvConditioner::ConvConditioner(std::size_t in_channels, const NetConfig& config,
                                 Activation activation, bool bounded, Rng& rng)
    : conv1(in_channels, config.conv_channels, config.kernel, rng),
      norm1(config.conv_channels),
      conv2(config.conv_channels, config.conv_channels, config.kernel, rng),
      norm2(config.conv_channels),
      conv3(config.conv_channels, 1, config.kernel, rng, Init::Zero),
      activation_(activation),
      bounded_(bounded) {}

Var ConvConditioner::operator()(Var input) const {
  Var h = norm1(activate(conv1(input), activation_));
  h = norm2(activate(conv2(h), activation_));
  h = conv3(h);
  const Shape s = h.shape();
  h = reshape(h, Shape{s[0], s[2]});
  return bounded_ ? numerics::tanh(h) : h;
}

void ConvConditioner::set_training(bool on) {
  norm1.set_training(on);
  norm2.set_training(on);
}

void ConvConditioner::collect(std::vector<ParameterPtr>& out) const {
  for (const auto& p : {conv1.weight, conv1.bias, norm1.gamma, norm1.beta, conv2.weight,
                        conv2.bias, norm2.gamma, norm2.beta, conv3.weight, conv3.bias}) {
    out.push_back(p);
  }
}

void ConvConditioner::visit(const std::string& prefix, const TensorVisitor& visitor) {
  visit_param(prefix + ".conv1.weight", conv1.weight, visitor);
  visit_param(prefix + ".conv1.bias", conv1.bias, visitor);
  visit_norm(prefix + ".norm1", norm1, visitor);
  visit_param(prefix + ".conv2.weight", conv2.weight, visitor);
  visit_param(prefix + ".conv2.bias", conv2.bias, visitor);
  visit_norm(prefix + ".norm2", norm2, visitor);
  visit_param(prefix + ".conv3.weight", conv3.weight, visitor);
  visit_param(prefix + ".conv3.bias", conv3.bias, visitor);
}

DenseConditioner::DenseConditioner(std::size_t in, std::size_t hidden_width, std::size_t out,
                                   Activation activation, bool bounded, Rng& rng)
    : hidden(in, hidden_width, rng),
      output(hidden_width, out, rng, Init::Zero),
      activation_(activation),
      bounded_(bounded) {}

Var DenseConditioner::operator()(Var c) const {
  Var h = output(activate(hidden(c), activation_));
  return bounded_ ? numerics::tanh(h) : h;
}

void DenseConditioner::collect(std::vector<ParameterPtr>& out) const {
  for (const auto& p : {hidden.weight, hidden.bias, output.weight, output.bias}) out.push_back(p);
}

void DenseConditioner::visit(const std::string& prefix, const TensorVisitor& visitor) {
  visit_param(prefix + ".hidden.weight", hidden.weight, visitor);
  visit_param(prefix + ".hidden.bias", hidden.bias, visitor);
  visit_param(prefix + ".output.weight", output.weight, visitor);
  visit_param(prefix + ".output.bias", output.bias, visitor);
}

namespace {

std::size_t condition_channels(std::size_t dim, std::size_t cond_dim) {
  return cond_dim == 0 ? 0 : (cond_dim + dim - 1) / dim;
}

std::size_t checked_dim(std::size_t dim) {
  if (dim == 0) throw InputError("coupling block needs a data dimension of at least 1");
  return dim;
}

}  // namespace

CouplingBlock::CouplingBlock(CouplingVariant variant, std::size_t dim, std::size_t cond_dim,
                             bool flipped, const NetConfig& config, Rng& rng)
    : variant_(variant),
      dim_(checked_dim(dim)),
      cond_dim_(cond_dim),
      split_(dim / 2),
      cond_channels_(condition_channels(dim, cond_dim)),
      flipped_(dim > 1 && flipped),
      scale_(1 + cond_channels_, config, Activation::Tanh, true, rng),
      shift_(1 + cond_channels_, config, Activation::Relu, false, rng) {
  if (config.conv_channels == 0 || config.dense_hidden == 0) {
    throw InputError("conditioner widths must be positive");
  }
  const auto [a0, a1] = pass_range();
  if (variant_ == CouplingVariant::Reinforced && a1 > a0) {
    cond_scale_.emplace(cond_dim_, config.dense_hidden, a1 - a0, Activation::Tanh, true, rng);
    cond_shift_.emplace(cond_dim_, config.dense_hidden, a1 - a0, Activation::Relu, false, rng);
  }
  set_training(false);
}

std::pair<std::size_t, std::size_t> CouplingBlock::pass_range() const noexcept {
  return flipped_ ? std::pair{split_, dim_} : std::pair{std::size_t{0}, split_};
}

std::pair<std::size_t, std::size_t> CouplingBlock::transform_range() const noexcept {
  return flipped_ ? std::pair{std::size_t{0}, split_} : std::pair{split_, dim_};
}

Var CouplingBlock::assemble(Var part_a, Var part_b) const {
  return flipped_ ? concat({part_b, part_a}, 1) : concat({part_a, part_b}, 1);
}

// Conditioner input [N, 1 + channels, D]: channel 0 is x with the transformed
// positions zeroed, the rest hold the condition folded into rows of length D.
Var CouplingBlock::conditioner_input(Var x_pass, Var c) const {
  Graph& g = *x_pass.graph;
  const std::size_t n = x_pass.shape()[0];
  const auto [b0, b1] = transform_range();
  Var hole = g.constant(Array(Shape{n, b1 - b0}));
  Var timeline = reshape(assemble(x_pass, hole), Shape{n, 1, dim_});
  if (cond_channels_ == 0) return timeline;
  Var cond = c;
  const std::size_t padded = cond_channels_ * dim_;
  if (padded > cond_dim_) cond = concat({c, g.constant(Array(Shape{n, padded - cond_dim_}))}, 1);
  cond = reshape(cond, Shape{n, cond_channels_, dim_});
  return concat({timeline, cond}, 1);
}

std::pair<Var, Var> CouplingBlock::transform_coefficients(Var x_pass, Var c) const {
  const auto [b0, b1] = transform_range();
  Var input = conditioner_input(x_pass, c);
  Var s = slice(scale_(input), 1, b0, b1);
  Var t = slice(shift_(input), 1, b0, b1);
  check_finite(s, "scale output");
  return {s, t};
}

CouplingBlock::Result CouplingBlock::forward(Var x, Var c) const {
  if (x.shape().size() != 2 || x.shape()[1] != dim_ || c.shape().size() != 2 ||
      c.shape()[1] != cond_dim_ || c.shape()[0] != x.shape()[0]) {
    throw DimensionError("coupling forward: expected x[N, " + std::to_string(dim_) + "], c[N, " +
                         std::to_string(cond_dim_) + "], got " + numerics::to_string(x.shape()) + " and " +
                         numerics::to_string(c.shape()));
  }
  const auto [a0, a1] = pass_range();
  const auto [b0, b1] = transform_range();
  Var x_a = slice(x, 1, a0, a1);
  Var x_b = slice(x, 1, b0, b1);

  auto [s, t] = transform_coefficients(x_a, c);
  Var y_b = add(mul(x_b, numerics::exp(s)), t);
  Var logdet = sum_last(s);

  Var y_a = x_a;
  if (cond_scale_) {
    Var sc = (*cond_scale_)(c);
    Var tc = (*cond_shift_)(c);
    check_finite(sc, "condition scale output");
    y_a = add(mul(x_a, numerics::exp(sc)), tc);
    logdet = add(logdet, sum_last(sc));
  }
  return {assemble(y_a, y_b), logdet};
}

Var CouplingBlock::inverse(Var y, Var c) const {
  if (y.shape().size() != 2 || y.shape()[1] != dim_ || c.shape().size() != 2 ||
      c.shape()[1] != cond_dim_ || c.shape()[0] != y.shape()[0]) {
    throw DimensionError("coupling inverse: expected y[N, " + std::to_string(dim_) + "], c[N, " +
                         std::to_string(cond_dim_) + "], got " + numerics::to_string(y.shape()) + " and " +
                         numerics::to_string(c.shape()));
  }
  const auto [a0, a1] = pass_range();
  const auto [b0, b1] = transform_range();
  Var y_a = slice(y, 1, a0, a1);
  Var y_b = slice(y, 1, b0, b1);

  Var x_a = y_a;
  if (cond_scale_) {
    Var sc = (*cond_scale_)(c);
    Var tc = (*cond_shift_)(c);
    check_finite(sc, "condition scale output");
    x_a = mul(sub(y_a, tc), numerics::exp(scale(sc, -1.0)));
  }
  auto [s, t] = transform_coefficients(x_a, c);
  Var x_b = mul(sub(y_b, t), numerics::exp(scale(s, -1.0)));
  return assemble(x_a, x_b);
}

CouplingOutput CouplingBlock::forward(const Array& x, const Array& c) const {
  Graph g;
  Var xv = g.constant(as_batch(x, dim_, "coupling forward x"));
  Var cv = g.constant(as_batch(c, cond_dim_, "coupling forward c"));
  const Result r = forward(xv, cv);
  return {r.y.value(), r.logdet.value()};
}

Array CouplingBlock::inverse(const Array& y, const Array& c) const {
  Graph g;
  Var yv = g.constant(as_batch(y, dim_, "coupling inverse y"));
  Var cv = g.constant(as_batch(c, cond_dim_, "coupling inverse c"));
  return inverse(yv, cv).value();
}

void CouplingBlock::set_training(bool on) {
  training_ = on;
  scale_.set_training(on);
  shift_.set_training(on);
}

std::vector<ParameterPtr> CouplingBlock::parameters() const {
  std::vector<ParameterPtr> out;
  scale_.collect(out);
  if (cond_scale_) cond_scale_->collect(out);
  shift_.collect(out);
  if (cond_shift_) cond_shift_->collect(out);
  return out;
}

void CouplingBlock::visit(const std::string& prefix, const TensorVisitor& visitor) {
  scale_.visit(prefix + ".s", visitor);
  if (cond_scale_) cond_scale_->visit(prefix + ".s_cond", visitor);
  shift_.visit(prefix + ".t", visitor);
  if (cond_shift_) cond_shift_->visit(prefix + ".t_cond", visitor);
}

}  // namespace flowcast::flow
