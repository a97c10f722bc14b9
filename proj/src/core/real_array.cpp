#include "lure/core/real_array.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lure/core/errors.hpp"

namespace lure {

std::size_t shape_size(const Shape& shape) {
  if (shape.empty()) return 0;
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

RealArray::RealArray(Shape shape, double fill) : shape_(std::move(shape)) {
  for (auto d : shape_) {
    if (d == 0) throw InvalidArgument("RealArray: zero-sized dimension");
  }
  if (shape_.empty()) throw InvalidArgument("RealArray: empty shape");
  data_.assign(shape_size(shape_), fill);
}

RealArray::RealArray(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_.empty() || shape_size(shape_) != data_.size()) {
    throw InvalidArgument("RealArray: shape does not match data length");
  }
}

RealArray RealArray::vector(std::initializer_list<double> values) {
  return RealArray({values.size()}, std::vector<double>(values));
}

RealArray RealArray::identity(std::size_t n) {
  RealArray out = matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) out(i, i) = 1.0;
  return out;
}

bool RealArray::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

const RealArray& RealArray::require_finite(const char* what) const {
  if (!all_finite()) throw NumericFailure(std::string("non-finite values in ") + what);
  return *this;
}

RealArray RealArray::transposed() const {
  const std::size_t r = rows(), c = cols();
  RealArray out = matrix(c, r);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out(j, i) = (*this)(i, j);
  return out;
}

double RealArray::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

RealArray matmul(const RealArray& a, const RealArray& b) {
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  if (b.rows() != k) throw InvalidArgument("matmul: inner dimensions differ");
  RealArray out = RealArray::matrix(n, m);
  const double* pa = a.values().data();
  const double* pb = b.values().data();
  double* po = out.values().data();
  for (std::size_t i = 0; i < n; ++i) {
    double* orow = po + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = pa[i * k + p];
      if (av == 0.0) continue;
      const double* brow = pb + p * m;
      for (std::size_t j = 0; j < m; ++j) orow[j] += av * brow[j];
    }
  }
  return out;
}

}  // namespace lure
