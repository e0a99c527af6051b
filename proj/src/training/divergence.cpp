#include "flowcast/training/divergence.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <limits>
#include <numbers>

#include "flowcast/error.hpp"

namespace flowcast::training {

QuantileFn QuantileFn::gaussian(double mean, double stddev) {
  if (!(stddev >= 0.0)) throw InputError("Gaussian quantile needs stddev >= 0");
  if (stddev == 0.0) return QuantileFn([mean](double) { return mean; });
  return QuantileFn([dist = boost::math::normal_distribution<double>(mean, stddev)](double u) {
    return boost::math::quantile(dist, u);
  });
}

double gaussian_mixture_cdf(std::span<const QuantileFn::Component> components, double x) {
  double total = 0.0;
  for (const auto& c : components) {
    total += c.weight * 0.5 * std::erfc(-(x - c.mean) / (c.stddev * std::numbers::sqrt2));
  }
  return total;
}

QuantileFn QuantileFn::gaussian_mixture(std::vector<Component> components) {
  if (components.empty()) throw InputError("mixture needs at least one component");
  double lo = std::numeric_limits<double>::max();
  double hi = std::numeric_limits<double>::lowest();
  double weight = 0.0;
  for (const auto& c : components) {
    if (!(c.stddev > 0.0) || !(c.weight >= 0.0)) throw InputError("invalid mixture component");
    lo = std::min(lo, c.mean - 40.0 * c.stddev);
    hi = std::max(hi, c.mean + 40.0 * c.stddev);
    weight += c.weight;
  }
  if (std::abs(weight - 1.0) > 1e-12) throw InputError("mixture weights must sum to 1");
  return QuantileFn([components = std::move(components), lo, hi](double u) {
    double a = lo;
    double b = hi;
    while (b - a > 1e-10) {
      const double mid = 0.5 * (a + b);
      if (gaussian_mixture_cdf(components, mid) < u) {
        a = mid;
      } else {
        b = mid;
      }
    }
    return 0.5 * (a + b);
  });
}

QuantileFn QuantileFn::empirical(std::vector<double> sample) {
  if (sample.empty()) throw InputError("empirical quantile of an empty sample");
  std::sort(sample.begin(), sample.end());
  return QuantileFn([s = std::move(sample)](double u) {
    const double pos = u * static_cast<double>(s.size() - 1);
    const auto i = static_cast<std::size_t>(std::floor(pos));
    if (i + 1 >= s.size()) return s.back();
    const double frac = pos - static_cast<double>(i);
    return s[i] + frac * (s[i + 1] - s[i]);
  });
}

std::vector<double> quantile_nodes(const QuantileFn& q, std::size_t n_quad) {
  if (n_quad < 100) throw InputError("w1 quadrature needs at least 100 nodes");
  std::vector<double> nodes(n_quad);
  const double h = 1.0 / static_cast<double>(n_quad);
  for (std::size_t i = 0; i < n_quad; ++i) {
    nodes[i] = q((static_cast<double>(i) + 0.5) * h);
    if (!std::isfinite(nodes[i])) throw InputError("quantile function returned a non-finite value");
    if (i > 0 && nodes[i] < nodes[i - 1] - 1e-12 * (1.0 + std::abs(nodes[i - 1]))) {
      throw InputError("quantile function is not monotone");
    }
  }
  return nodes;
}

double w1_from_nodes(std::span<const double> f_nodes, std::span<const double> g_nodes) {
  if (f_nodes.size() != g_nodes.size() || f_nodes.empty()) {
    throw InputError("w1 nodes must be nonempty and of equal length");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < f_nodes.size(); ++i) total += std::abs(f_nodes[i] - g_nodes[i]);
  return total / static_cast<double>(f_nodes.size());
}

double w1_closed_form(const QuantileFn& f, const QuantileFn& g, std::size_t n_quad) {
  return w1_from_nodes(quantile_nodes(f, n_quad), quantile_nodes(g, n_quad));
}

void ToySpec::validate() const {
  if (!(component_variance > 0.0)) throw InputError("toy component variance must be positive");
  if (!(weight1 >= 0.0 && weight1 <= 1.0)) throw InputError("toy weight must lie in [0, 1]");
}

std::vector<QuantileFn::Component> ToySpec::components() const {
  const double sd = std::sqrt(component_variance);
  return {{weight1, mu1, sd}, {1.0 - weight1, mu2, sd}};
}

double ToySpec::density(double x) const {
  const double inv = 1.0 / std::sqrt(2.0 * std::numbers::pi * component_variance);
  auto bump = [&](double mu) { return std::exp(-0.5 * (x - mu) * (x - mu) / component_variance); };
  return inv * (weight1 * bump(mu1) + (1.0 - weight1) * bump(mu2));
}

std::vector<double> SigmaGrid::values() const {
  if (!(step > 0.0) || !(min > 0.0) || max < min) throw InputError("invalid sigma^2 grid");
  const auto count = static_cast<std::size_t>(std::floor((max - min) / step + 1e-9)) + 1;
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = min + static_cast<double>(i) * step;
  return out;
}

namespace {

struct KlQuadrature {
  std::vector<double> x;
  std::vector<double> weight_p;  // trapezoid weight * p(x)
  double p_log_p = 0.0;

  explicit KlQuadrature(const ToySpec& spec) {
    const double sd = std::sqrt(spec.component_variance);
    const double lo = std::min(spec.mu1, spec.mu2) - 14.0 * sd;
    const double hi = std::max(spec.mu1, spec.mu2) + 14.0 * sd;
    constexpr std::size_t n = 40001;
    const double h = (hi - lo) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
      const double xi = lo + static_cast<double>(i) * h;
      const double p = spec.density(xi);
      const double w = (i == 0 || i == n - 1) ? 0.5 * h : h;
      x.push_back(xi);
      weight_p.push_back(w * p);
      if (p > 0.0) p_log_p += w * p * std::log(p);
    }
  }

  double operator()(double sigma2) const {
    const double log_norm = -0.5 * std::log(2.0 * std::numbers::pi * sigma2);
    double p_log_q = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      p_log_q += weight_p[i] * (log_norm - 0.5 * x[i] * x[i] / sigma2);
    }
    return p_log_p - p_log_q;
  }
};

}  // namespace

double toy_kl(const ToySpec& spec, double sigma2) {
  spec.validate();
  if (!(sigma2 > 0.0)) throw InputError("sigma^2 must be positive");
  return KlQuadrature(spec)(sigma2);
}

ToyFit toy_fit(const ToySpec& spec, ToyMetric metric, const SigmaGrid& grid, std::size_t n_quad) {
  spec.validate();
  ToyFit fit{metric};
  fit.sigma2 = grid.values();
  if (fit.sigma2.empty()) throw InputError("sigma^2 grid is empty");
  fit.objective.resize(fit.sigma2.size());

  if (metric == ToyMetric::KL) {
    const KlQuadrature kl(spec);
    for (std::size_t i = 0; i < fit.sigma2.size(); ++i) fit.objective[i] = kl(fit.sigma2[i]);
  } else {
    const std::vector<double> mixture =
        quantile_nodes(QuantileFn::gaussian_mixture(spec.components()), n_quad);
    const std::vector<double> unit = quantile_nodes(QuantileFn::gaussian(0.0, 1.0), n_quad);
    std::vector<double> scaled(n_quad);
    for (std::size_t i = 0; i < fit.sigma2.size(); ++i) {
      const double sigma = std::sqrt(fit.sigma2[i]);
      for (std::size_t j = 0; j < n_quad; ++j) scaled[j] = sigma * unit[j];
      fit.objective[i] = w1_from_nodes(mixture, scaled);
    }
  }

  const auto best = std::min_element(fit.objective.begin(), fit.objective.end());
  fit.argmin_sigma2 = fit.sigma2[static_cast<std::size_t>(best - fit.objective.begin())];
  fit.min_objective = *best;
  return fit;
}

double empirical_kl(std::span<const double> log_p_true, std::span<const double> log_p_model) {
  if (log_p_true.size() != log_p_model.size() || log_p_true.empty()) {
    throw InputError("empirical KL needs equal, nonempty sample sets");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < log_p_true.size(); ++i) total += log_p_true[i] - log_p_model[i];
  return total / static_cast<double>(log_p_true.size());
}

}  // namespace flowcast::training
