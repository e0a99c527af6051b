#include "flowcast/evaluation/ar_baseline.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "flowcast/error.hpp"
#include "flowcast/numerics/random.hpp"

namespace flowcast::evaluation {

ARBaseline ar_fit(std::span<const double> series, std::size_t order) {
  if (order == 0) throw InputError("AR order must be positive");
  if (series.size() < 2 * order) {
    throw InputError("AR(" + std::to_string(order) + ") needs at least " + std::to_string(2 * order) +
                     " training values, got " + std::to_string(series.size()));
  }
  const std::size_t rows = series.size() - order;
  const std::size_t cols = order + 1;
  Eigen::MatrixXd x(rows, cols);
  Eigen::VectorXd y(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t t = r + order;
    x(r, 0) = 1.0;
    for (std::size_t j = 0; j < order; ++j) x(r, j + 1) = series[t - 1 - j];
    y(r) = series[t];
  }
  Eigen::MatrixXd xtx = x.transpose() * x;
  const Eigen::VectorXd xty = x.transpose() * y;

  ARBaseline model;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(xtx);
  const Eigen::VectorXd pivots = ldlt.vectorD().cwiseAbs();
  if (ldlt.info() != Eigen::Success || !(pivots.minCoeff() > 1e-12 * pivots.maxCoeff())) {
    model.ridge_fallback = true;
    xtx.diagonal().array() += 1e-8;
    ldlt.compute(xtx);
  }
  const Eigen::VectorXd beta = ldlt.solve(xty);
  if (!beta.allFinite()) throw NumericalError("AR least-squares solution is not finite");

  model.intercept = beta(0);
  model.coefficients.assign(beta.data() + 1, beta.data() + cols);
  const Eigen::VectorXd resid = y - x * beta;
  model.residual_std = std::sqrt(resid.squaredNorm() / static_cast<double>(rows));
  return model;
}

std::vector<double> ar_forecast(const ARBaseline& model, std::span<const double> history, std::size_t k) {
  const std::size_t p = model.order();
  if (history.size() < p) {
    throw InputError("AR forecast needs " + std::to_string(p) + " history values, got " +
                     std::to_string(history.size()));
  }
  std::vector<double> buf(history.end() - static_cast<std::ptrdiff_t>(p), history.end());
  std::vector<double> out;
  out.reserve(k);
  for (std::size_t step = 0; step < k; ++step) {
    double y = model.intercept;
    for (std::size_t j = 0; j < p; ++j) y += model.coefficients[j] * buf[buf.size() - 1 - j];
    out.push_back(y);
    buf.push_back(y);
  }
  return out;
}

ScenarioSet ar_scenarios(const ARBaseline& model, std::span<const double> history, std::size_t k,
                         std::size_t m, std::uint64_t seed) {
  if (m == 0) throw InputError("scenario count must be positive");
  const std::vector<double> point = ar_forecast(model, history, k);
  numerics::Rng rng(seed);
  std::vector<double> noise(m);
  for (double& e : noise) e = model.residual_std * rng.normal();
  std::vector<std::size_t> perm(m);
  std::iota(perm.begin(), perm.end(), 0);

  ScenarioSet out;
  out.values = Array({m, k});
  out.history.assign(history.begin(), history.end());
  out.seed = seed;
  for (std::size_t h = 0; h < k; ++h) {
    for (std::size_t i = m; i > 1; --i) std::swap(perm[i - 1], perm[rng.index(i)]);
    for (std::size_t i = 0; i < m; ++i) out.values(i, h) = point[h] + noise[perm[i]];
  }
  return out;
}

}  // namespace flowcast::evaluation
