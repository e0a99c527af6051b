#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "flowcast/evaluation/scenarios.hpp"

namespace flowcast::evaluation {

/// y_t = intercept + sum_j coefficients[j] * y_{t-1-j} + noise.
struct ARBaseline {
  std::vector<double> coefficients;
  double intercept = 0.0;
  double residual_std = 0.0;
  /// Set when the normal equations were singular and a ridge term was added.
  bool ridge_fallback = false;

  std::size_t order() const noexcept { return coefficients.size(); }
};

/// Least-squares fit on a training series of at least 2 * order values.
ARBaseline ar_fit(std::span<const double> series, std::size_t order = 24);

/// Recursive multi-step point forecast from the last `order` history values.
std::vector<double> ar_forecast(const ARBaseline& model, std::span<const double> history, std::size_t k);

/// Point forecast plus N(0, residual_std^2) noise. One sorted set of m draws
/// is shuffled independently into every hour, so each scenario sees
/// independent noise across hours while every hour's empirical distribution,
/// and hence band width, is identical.
ScenarioSet ar_scenarios(const ARBaseline& model, std::span<const double> history, std::size_t k,
                         std::size_t m, std::uint64_t seed);

}  // namespace flowcast::evaluation
