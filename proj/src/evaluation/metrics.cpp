#include "flowcast/evaluation/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "flowcast/error.hpp"

namespace flowcast::evaluation {

double empirical_quantile(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw InputError("quantile of an empty set");
  if (!(q >= 0.0 && q <= 1.0)) throw InputError("quantile level must lie in [0, 1]");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(pos));
  if (i + 1 >= sorted.size()) return sorted.back();
  const double frac = pos - static_cast<double>(i);
  return sorted[i] + frac * (sorted[i + 1] - sorted[i]);
}

QuantileBand quantile_band(const ScenarioSet& scenarios, double coverage) {
  if (scenarios.count() == 0) throw InputError("quantile band of an empty scenario set");
  if (!(coverage >= 0.0 && coverage <= 1.0)) throw InputError("coverage must lie in [0, 1]");
  const double alpha = 1.0 - coverage;
  QuantileBand band;
  band.coverage = coverage;
  for (std::size_t h = 0; h < scenarios.horizon(); ++h) {
    const std::vector<double> col = scenarios.sorted_hour(h);
    band.median.push_back(empirical_quantile(col, 0.5));
    if (alpha >= 1.0) {
      band.lower.push_back(band.median.back());
      band.upper.push_back(band.median.back());
    } else {
      band.lower.push_back(empirical_quantile(col, alpha / 2.0));
      band.upper.push_back(empirical_quantile(col, 1.0 - alpha / 2.0));
    }
  }
  return band;
}

double deviation(double y, double lower, double upper) {
  if (y < lower) return lower - y;
  if (y > upper) return y - upper;
  return 0.0;
}

std::vector<double> default_coverage_grid() {
  std::vector<double> grid;
  for (int i = 0; i <= 10; ++i) grid.push_back(i / 10.0);
  return grid;
}

namespace {

void check_aligned(const std::vector<ScenarioSet>& scenarios, const Array& realized) {
  if (realized.rank() != 2 || realized.extent(0) != scenarios.size()) {
    throw InputError("realized values cover " +
                     std::to_string(realized.rank() == 2 ? realized.extent(0) : 0) +
                     " windows but there are " + std::to_string(scenarios.size()) + " scenario sets");
  }
  if (scenarios.empty()) throw InputError("no windows to evaluate");
  for (const auto& s : scenarios) {
    if (s.horizon() != realized.extent(1)) throw InputError("scenario horizon does not match realized data");
  }
}

}  // namespace

CoverageCurve deviation_coverage(const std::vector<ScenarioSet>& scenarios, const Array& realized,
                                 const std::vector<double>& grid) {
  check_aligned(scenarios, realized);
  CoverageCurve curve{grid, std::vector<double>(grid.size(), 0.0)};
  const std::size_t k = realized.extent(1);
  for (std::size_t w = 0; w < scenarios.size(); ++w) {
    for (std::size_t h = 0; h < k; ++h) {
      const std::vector<double> col = scenarios[w].sorted_hour(h);
      for (std::size_t g = 0; g < grid.size(); ++g) {
        const double alpha = 1.0 - grid[g];
        double lo, hi;
        if (alpha >= 1.0) {
          lo = hi = empirical_quantile(col, 0.5);
        } else {
          lo = empirical_quantile(col, alpha / 2.0);
          hi = empirical_quantile(col, 1.0 - alpha / 2.0);
        }
        curve.deviation[g] += deviation(realized(w, h), lo, hi);
      }
    }
  }
  const double t = static_cast<double>(scenarios.size() * k);
  for (double& d : curve.deviation) d /= t;
  return curve;
}

std::vector<QuantileBand> quantile_bands(const std::vector<ScenarioSet>& scenarios, double coverage) {
  std::vector<QuantileBand> out;
  out.reserve(scenarios.size());
  for (const auto& s : scenarios) out.push_back(quantile_band(s, coverage));
  return out;
}

std::vector<double> pi_width_profile(const std::vector<QuantileBand>& bands) {
  if (bands.empty()) return {};
  std::vector<double> width(bands.front().size(), 0.0);
  for (const auto& b : bands) {
    if (b.size() != width.size()) throw InputError("bands differ in length");
    for (std::size_t h = 0; h < width.size(); ++h) width[h] += b.upper[h] - b.lower[h];
  }
  for (double& w : width) w /= static_cast<double>(bands.size());
  return width;
}

double empirical_coverage(const std::vector<ScenarioSet>& scenarios, const Array& realized,
                          double coverage) {
  check_aligned(scenarios, realized);
  std::size_t inside = 0;
  for (std::size_t w = 0; w < scenarios.size(); ++w) {
    const QuantileBand band = quantile_band(scenarios[w], coverage);
    for (std::size_t h = 0; h < band.size(); ++h) {
      if (deviation(realized(w, h), band.lower[h], band.upper[h]) == 0.0) ++inside;
    }
  }
  return static_cast<double>(inside) / static_cast<double>(realized.size());
}

void write_coverage_csv(const std::filesystem::path& path, const CoverageCurve& curve) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << "coverage,deviation\n";
  for (std::size_t i = 0; i < curve.coverage.size(); ++i) {
    out << format_double(curve.coverage[i]) << ',' << format_double(curve.deviation[i]) << '\n';
  }
}

void write_width_csv(const std::filesystem::path& path, const std::vector<double>& widths) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << "hour,width\n";
  for (std::size_t h = 0; h < widths.size(); ++h) out << h << ',' << format_double(widths[h]) << '\n';
}

}  // namespace flowcast::evaluation
