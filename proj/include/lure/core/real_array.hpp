#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace lure {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);

// Dense row-major array of doubles. Matrices use shape {rows, cols}.
class RealArray {
 public:
  RealArray() = default;
  explicit RealArray(Shape shape, double fill = 0.0);
  RealArray(Shape shape, std::vector<double> data);

  static RealArray matrix(std::size_t rows, std::size_t cols, double fill = 0.0) {
    return RealArray({rows, cols}, fill);
  }
  static RealArray vector(std::initializer_list<double> values);
  static RealArray identity(std::size_t n);

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  std::size_t rank() const { return shape_.size(); }
  // Rank-1 arrays are treated as a single row.
  std::size_t rows() const { return shape_.size() >= 2 ? shape_[0] : 1; }
  std::size_t cols() const { return shape_.empty() ? 0 : shape_.back(); }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols(), cols()}; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols(), cols()}; }

  bool all_finite() const;
  // Throws NumericFailure naming `what` if any entry is NaN/Inf.
  const RealArray& require_finite(const char* what) const;

  RealArray transposed() const;
  double max_abs() const;

  friend bool operator==(const RealArray&, const RealArray&) = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

RealArray matmul(const RealArray& a, const RealArray& b);

}  // namespace lure
