#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace flowcast::numerics {

using Shape = std::vector<std::size_t>;

std::size_t element_count(const Shape& shape);
std::string to_string(const Shape& shape);

/// Dense row-major array of doubles. A rank-0 array holds one scalar.
class Array {
 public:
  Array() : shape_{0} {}
  explicit Array(Shape shape, double fill = 0.0);
  Array(Shape shape, std::vector<double> values);

  static Array scalar(double value);
  static Array from(std::initializer_list<double> values);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t extent(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }
  double* data() noexcept { return values_.data(); }
  const double* data() const noexcept { return values_.data(); }

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  double& operator()(std::size_t i, std::size_t j) { return values_[i * shape_[1] + j]; }
  double operator()(std::size_t i, std::size_t j) const { return values_[i * shape_[1] + j]; }

  double& operator()(std::size_t i, std::size_t j, std::size_t k) {
    return values_[(i * shape_[1] + j) * shape_[2] + k];
  }
  double operator()(std::size_t i, std::size_t j, std::size_t k) const {
    return values_[(i * shape_[1] + j) * shape_[2] + k];
  }

  /// Value of a single-element array.
  double item() const;

  bool all_finite() const noexcept;
  double max_abs() const noexcept;

  /// Same values under a new shape with the same element count.
  Array reshaped(Shape shape) const;

  /// Rows [begin, end) of a rank >= 1 array.
  Array rows(std::size_t begin, std::size_t end) const;
  /// Copy of row i of a rank-2 array as a rank-1 array.
  std::vector<double> row(std::size_t i) const;

  void fill(double value) noexcept;

  friend bool operator==(const Array&, const Array&) = default;

 private:
  Shape shape_;
  std::vector<double> values_;
};

/// Stacks equal-length rows into a rank-2 array.
Array stack_rows(const std::vector<std::vector<double>>& rows);

double max_abs_difference(const Array& a, const Array& b);

}  // namespace flowcast::numerics
