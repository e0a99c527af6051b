#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "flowcast/evaluation/scenarios.hpp"

namespace flowcast::evaluation {

/// Linear interpolation of sorted values at position (n - 1) * q.
double empirical_quantile(std::span<const double> sorted, double q);

/// Per-hour central prediction interval with nominal coverage 1 - alpha.
struct QuantileBand {
  double coverage = 0.5;
  std::vector<double> lower;
  std::vector<double> median;
  std::vector<double> upper;

  std::size_t size() const noexcept { return median.size(); }
};

/// Quantiles alpha/2 and 1 - alpha/2 per hour. Coverage 0 collapses the band
/// to the median.
QuantileBand quantile_band(const ScenarioSet& scenarios, double coverage);

/// Distance from y to the interval [lower, upper], 0 inside.
double deviation(double y, double lower, double upper);

/// 0, 0.1, ..., 1.0.
std::vector<double> default_coverage_grid();

struct CoverageCurve {
  std::vector<double> coverage;
  std::vector<double> deviation;
};

/// Mean deviation over every (window, hour) point for each coverage size.
/// `realized` is [W, k] aligned with `scenarios`.
CoverageCurve deviation_coverage(const std::vector<ScenarioSet>& scenarios, const Array& realized,
                                 const std::vector<double>& grid = default_coverage_grid());

/// Mean band width (upper - lower) per hour across windows.
std::vector<double> pi_width_profile(const std::vector<QuantileBand>& bands);
std::vector<QuantileBand> quantile_bands(const std::vector<ScenarioSet>& scenarios, double coverage);

/// Fraction of realized points that fall inside the band of the given coverage.
double empirical_coverage(const std::vector<ScenarioSet>& scenarios, const Array& realized,
                          double coverage);

/// `coverage,deviation`
void write_coverage_csv(const std::filesystem::path& path, const CoverageCurve& curve);
/// `hour,width`
void write_width_csv(const std::filesystem::path& path, const std::vector<double>& widths);

}  // namespace flowcast::evaluation
