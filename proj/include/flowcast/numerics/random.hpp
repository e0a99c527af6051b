#pragma once

#include <cstdint>
#include <random>

#include "flowcast/numerics/array.hpp"

namespace flowcast::numerics {

/// Seeded 64-bit Mersenne Twister with the draws this project needs.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  double normal() { return normal_(engine_); }
  std::size_t index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
  }

  Array normal_array(Shape shape) {
    Array out(std::move(shape));
    for (double& v : out.values()) v = normal();
    return out;
  }
  Array uniform_array(Shape shape, double lo, double hi) {
    Array out(std::move(shape));
    for (double& v : out.values()) v = uniform(lo, hi);
    return out;
  }

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Derives an independent stream seed from a base seed and a stream index.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) noexcept;

}  // namespace flowcast::numerics
