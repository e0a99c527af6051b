#include "flowcast/numerics/array.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "flowcast/error.hpp"

namespace flowcast::numerics {

std::size_t element_count(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string to_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) out += ", ";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

Array::Array(Shape shape, double fill)
    : shape_(std::move(shape)), values_(element_count(shape_), fill) {}

Array::Array(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  if (element_count(shape_) != values_.size()) {
    throw DimensionError("array shape " + to_string(shape_) + " does not match " +
                         std::to_string(values_.size()) + " values");
  }
}

Array Array::scalar(double value) { return Array(Shape{}, std::vector<double>{value}); }

Array Array::from(std::initializer_list<double> values) {
  return Array(Shape{values.size()}, std::vector<double>(values));
}

double Array::item() const {
  if (values_.size() != 1) {
    throw DimensionError("item() on array of shape " + to_string(shape_));
  }
  return values_[0];
}

bool Array::all_finite() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

double Array::max_abs() const noexcept {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

Array Array::reshaped(Shape shape) const {
  if (element_count(shape) != values_.size()) {
    throw DimensionError("cannot reshape " + to_string(shape_) + " to " + to_string(shape));
  }
  return Array(std::move(shape), values_);
}

Array Array::rows(std::size_t begin, std::size_t end) const {
  if (rank() == 0 || begin > end || end > shape_[0]) {
    throw DimensionError("row range out of bounds for shape " + to_string(shape_));
  }
  const std::size_t stride = shape_[0] == 0 ? 0 : values_.size() / shape_[0];
  Shape shape = shape_;
  shape[0] = end - begin;
  return Array(std::move(shape),
               std::vector<double>(values_.begin() + static_cast<std::ptrdiff_t>(begin * stride),
                                   values_.begin() + static_cast<std::ptrdiff_t>(end * stride)));
}

std::vector<double> Array::row(std::size_t i) const {
  if (rank() != 2 || i >= shape_[0]) {
    throw DimensionError("row index out of bounds for shape " + to_string(shape_));
  }
  const auto first = values_.begin() + static_cast<std::ptrdiff_t>(i * shape_[1]);
  return {first, first + static_cast<std::ptrdiff_t>(shape_[1])};
}

void Array::fill(double value) noexcept { std::fill(values_.begin(), values_.end(), value); }

Array stack_rows(const std::vector<std::vector<double>>& rows) {
  const std::size_t width = rows.empty() ? 0 : rows.front().size();
  std::vector<double> values;
  values.reserve(rows.size() * width);
  for (const auto& r : rows) {
    if (r.size() != width) throw DimensionError("stack_rows: ragged rows");
    values.insert(values.end(), r.begin(), r.end());
  }
  return Array(Shape{rows.size(), width}, std::move(values));
}

double max_abs_difference(const Array& a, const Array& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError("shape mismatch " + to_string(a.shape()) + " vs " + to_string(b.shape()));
  }
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace flowcast::numerics
