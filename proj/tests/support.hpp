#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <random>
#include <string>
#include <vector>

#include "flowcast/flow/flow_model.hpp"
#include "flowcast/numerics/graph.hpp"
#include "flowcast/numerics/random.hpp"

namespace flowcast::testing {

using numerics::Array;
using numerics::Graph;
using numerics::ParameterPtr;
using numerics::Var;

inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

/// Scalar loss of the current parameter values, rebuilt from scratch each call.
using LossBuilder = std::function<Var(Graph&)>;

struct GradCheck {
  double max_relative_error = 0.0;
  std::size_t checked = 0;
};

/// Compares backward() against central differences for the given parameters.
/// `stride` > 1 checks every stride-th entry of each tensor.
inline GradCheck check_parameter_gradients(const std::vector<ParameterPtr>& params, const LossBuilder& loss,
                                           double step = 1e-5, std::size_t stride = 1,
                                           double floor = 1e-6) {
  for (const auto& p : params) p->zero_grad();
  {
    Graph g;
    g.backward(loss(g));
  }
  GradCheck out;
  for (const auto& p : params) {
    for (std::size_t i = 0; i < p->value.size(); i += stride) {
      const double original = p->value[i];
      p->value[i] = original + step;
      double up;
      {
        Graph g;
        up = loss(g).value().item();
      }
      p->value[i] = original - step;
      double down;
      {
        Graph g;
        down = loss(g).value().item();
      }
      p->value[i] = original;
      const double numeric = (up - down) / (2.0 * step);
      out.max_relative_error = std::max(out.max_relative_error, relative_error(p->grad[i], numeric, floor));
      ++out.checked;
    }
  }
  return out;
}

/// Sets every tensor of a model to random values so that no net is the
/// identity; running variances stay positive.
inline void randomize(flow::FlowModel& model, std::uint64_t seed, double scale = 0.3) {
  numerics::Rng rng(seed);
  model.visit([&](const std::string& name, Array& t) {
    const bool variance = name.find("running_var") != std::string::npos;
    for (double& v : t.values()) v = variance ? rng.uniform(0.5, 1.5) : rng.uniform(-scale, scale);
  });
}

/// Numerical Jacobian of f: R^n -> R^m at x, row-major [m][n].
inline std::vector<std::vector<double>> numeric_jacobian(const std::function<std::vector<double>(const std::vector<double>&)>& f,
                                                         const std::vector<double>& x, double step = 1e-6) {
  const std::size_t n = x.size();
  const std::size_t m = f(x).size();
  std::vector<std::vector<double>> jac(m, std::vector<double>(n));
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<double> up = x, down = x;
    up[j] += step;
    down[j] -= step;
    const auto fu = f(up);
    const auto fd = f(down);
    for (std::size_t i = 0; i < m; ++i) jac[i][j] = (fu[i] - fd[i]) / (2.0 * step);
  }
  return jac;
}

/// log|det| by partial-pivot Gaussian elimination.
inline double log_abs_det(std::vector<std::vector<double>> a) {
  const std::size_t n = a.size();
  double result = 0.0;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    }
    std::swap(a[col], a[pivot]);
    result += std::log(std::abs(a[col][col]));
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a[r][col] / a[col][col];
      for (std::size_t k = col; k < n; ++k) a[r][k] -= f * a[col][k];
    }
  }
  return result;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("flowcast_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::vector<double> to_vector(const Array& a) { return {a.values().begin(), a.values().end()}; }

}  // namespace flowcast::testing
