#pragma once

#include <vector>

#include "flowcast/numerics/graph.hpp"
#include "flowcast/numerics/random.hpp"

namespace flowcast::numerics {

enum class Init {
  Uniform,  // U(-1/sqrt(fan_in), 1/sqrt(fan_in))
  Zero,
};

/// Fully connected layer, weight [out, in].
class Linear {
 public:
  Linear(std::size_t in, std::size_t out, Rng& rng, Init init = Init::Uniform);

  Var operator()(Var x) const;
  std::size_t in_features() const { return weight->value.extent(1); }
  std::size_t out_features() const { return weight->value.extent(0); }

  ParameterPtr weight;
  ParameterPtr bias;
};

/// Length-preserving 1-D convolution, weight [out, in, kernel].
class Conv1d {
 public:
  Conv1d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel, Rng& rng,
         Init init = Init::Uniform);

  Var operator()(Var x) const;

  ParameterPtr weight;
  ParameterPtr bias;
};

}  // namespace flowcast::numerics
