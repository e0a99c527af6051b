#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace flowcast::training {

/// Inverse CDF on (0, 1).
class QuantileFn {
 public:
  using Fn = std::function<double(double)>;

  explicit QuantileFn(Fn fn) : fn_(std::move(fn)) {}

  struct Component {
    double weight;
    double mean;
    double stddev;
  };

  static QuantileFn gaussian(double mean, double stddev);
  /// Inverts the mixture CDF by bisection to 1e-10.
  static QuantileFn gaussian_mixture(std::vector<Component> components);
  /// Linear interpolation between order statistics at positions (n - 1) * u.
  static QuantileFn empirical(std::vector<double> sample);

  double operator()(double u) const { return fn_(u); }

 private:
  Fn fn_;
};

double gaussian_mixture_cdf(std::span<const QuantileFn::Component> components, double x);

/// Quantile values at the midpoints (i + 1/2) / n. Throws InputError if they
/// decrease anywhere.
std::vector<double> quantile_nodes(const QuantileFn& q, std::size_t n_quad);

/// Midpoint rule for the integral over (0, 1) of |F^-1(u) - G^-1(u)|, from
/// tabulated nodes of equal length.
double w1_from_nodes(std::span<const double> f_nodes, std::span<const double> g_nodes);

/// One-dimensional Wasserstein-1 distance via the quantile representation.
/// n_quad must be at least 100.
double w1_closed_form(const QuantileFn& f, const QuantileFn& g, std::size_t n_quad = 100000);

/// Two-component Gaussian mixture fitted by a zero-mean Gaussian N(0, sigma^2).
struct ToySpec {
  double mu1 = -1.0;
  double mu2 = 1.0;
  double component_variance = 0.1;
  double weight1 = 0.5;

  void validate() const;
  std::vector<QuantileFn::Component> components() const;
  double density(double x) const;
};

struct SigmaGrid {
  double min = 0.001;
  double max = 4.0;
  double step = 0.001;

  std::vector<double> values() const;
};

enum class ToyMetric { KL, W1 };

struct ToyFit {
  ToyMetric metric;
  double argmin_sigma2 = 0.0;
  double min_objective = 0.0;
  std::vector<double> sigma2;
  std::vector<double> objective;
};

/// KL(P || N(0, sigma^2)) by trapezoidal quadrature of p log(p / q).
double toy_kl(const ToySpec& spec, double sigma2);

/// Scans the variance grid for the metric's minimizer. The KL branch uses
/// quadrature of p log(p/q); the W1 branch uses w1 with the mixture quantile.
ToyFit toy_fit(const ToySpec& spec, ToyMetric metric, const SigmaGrid& grid = {},
               std::size_t n_quad = 20000);

/// Average log-ratio (1/N) sum log(p_true(x_i) / p_model(x_i)) over samples
/// drawn from the true distribution, given both log-densities at the samples.
double empirical_kl(std::span<const double> log_p_true, std::span<const double> log_p_model);

}  // namespace flowcast::training
