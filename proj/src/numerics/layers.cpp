#include "flowcast/numerics/layers.hpp"

#include <cmath>

#include "flowcast/error.hpp"
#include "flowcast/numerics/ops.hpp"

namespace flowcast::numerics {

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) noexcept {
  // splitmix64 finalizer over the combined value
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace {

Array init_array(Shape shape, std::size_t fan_in, Rng& rng, Init init) {
  if (init == Init::Zero || fan_in == 0) return Array(std::move(shape), 0.0);
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  return rng.uniform_array(std::move(shape), -bound, bound);
}

}  // namespace

Linear::Linear(std::size_t in, std::size_t out, Rng& rng, Init init)
    : weight(std::make_shared<Parameter>(init_array(Shape{out, in}, in, rng, init), "weight")),
      bias(std::make_shared<Parameter>(init_array(Shape{out}, in, rng, init), "bias")) {}

Var Linear::operator()(Var x) const {
  Graph& g = *x.graph;
  return affine(x, g.parameter(weight), g.parameter(bias));
}

Conv1d::Conv1d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel, Rng& rng,
               Init init) {
  if (kernel % 2 == 0) throw InputError("convolution kernel width must be odd");
  const std::size_t fan_in = in_channels * kernel;
  weight = std::make_shared<Parameter>(
      init_array(Shape{out_channels, in_channels, kernel}, fan_in, rng, init), "weight");
  bias = std::make_shared<Parameter>(init_array(Shape{out_channels}, fan_in, rng, init), "bias");
}

Var Conv1d::operator()(Var x) const {
  Graph& g = *x.graph;
  return conv1d(x, g.parameter(weight), g.parameter(bias));
}

}  // namespace flowcast::numerics
