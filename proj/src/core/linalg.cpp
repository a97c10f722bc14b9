#include "lure/core/linalg.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "lure/core/errors.hpp"

namespace lure {
namespace {

struct Lu {
  RealArray lu;
  std::vector<std::size_t> perm;
  bool singular = false;
  double min_pivot = 0.0;
  double max_pivot = 0.0;
};

RealArray damped(const RealArray& m, double damping) {
  if (m.rank() != 2 || m.rows() != m.cols()) throw InvalidArgument("matrix must be square");
  if (damping < 0.0) throw InvalidArgument("damping must be non-negative");
  RealArray a = m;
  for (std::size_t i = 0; i < a.rows(); ++i) a(i, i) += damping;
  return a;
}

Lu factor(RealArray a) {
  const std::size_t n = a.rows();
  Lu out{std::move(a), std::vector<std::size_t>(n), false,
         std::numeric_limits<double>::infinity(), 0.0};
  for (std::size_t i = 0; i < n; ++i) out.perm[i] = i;
  RealArray& lu = out.lu;
  const double scale = std::max(lu.max_abs(), std::numeric_limits<double>::min());
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t r = k + 1; r < n; ++r)
      if (std::abs(lu(r, k)) > std::abs(lu(piv, k))) piv = r;
    if (piv != k) {
      for (std::size_t c = 0; c < n; ++c) std::swap(lu(k, c), lu(piv, c));
      std::swap(out.perm[k], out.perm[piv]);
    }
    const double p = lu(k, k);
    out.min_pivot = std::min(out.min_pivot, std::abs(p));
    out.max_pivot = std::max(out.max_pivot, std::abs(p));
    if (std::abs(p) <= 1e-14 * scale) {
      out.singular = true;
      return out;
    }
    for (std::size_t r = k + 1; r < n; ++r) {
      const double f = lu(r, k) / p;
      lu(r, k) = f;
      if (f == 0.0) continue;
      for (std::size_t c = k + 1; c < n; ++c) lu(r, c) -= f * lu(k, c);
    }
  }
  return out;
}

std::vector<double> lu_solve(const Lu& f, std::span<const double> b) {
  const std::size_t n = f.lu.rows();
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = b[f.perm[i]];
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < i; ++k) x[i] -= f.lu(i, k) * x[k];
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t k = i + 1; k < n; ++k) x[i] -= f.lu(i, k) * x[k];
    x[i] /= f.lu(i, i);
  }
  return x;
}

// Solve with one step of iterative refinement against the unfactored matrix.
std::vector<double> refined_solve(const Lu& f, const RealArray& a, std::span<const double> b) {
  std::vector<double> x = lu_solve(f, b);
  const std::size_t n = a.rows();
  std::vector<double> r(n);
  for (std::size_t i = 0; i < n; ++i) {
    long double acc = b[i];
    for (std::size_t k = 0; k < n; ++k) acc -= static_cast<long double>(a(i, k)) * x[k];
    r[i] = static_cast<double>(acc);
  }
  const std::vector<double> dx = lu_solve(f, r);
  for (std::size_t i = 0; i < n; ++i) x[i] += dx[i];
  return x;
}

double norm1(const RealArray& a) {
  double best = 0.0;
  for (std::size_t c = 0; c < a.cols(); ++c) {
    double s = 0.0;
    for (std::size_t r = 0; r < a.rows(); ++r) s += std::abs(a(r, c));
    best = std::max(best, s);
  }
  return best;
}

[[noreturn]] void throw_singular(const Lu& f) {
  std::ostringstream msg;
  const double est = f.min_pivot > 0 ? f.max_pivot / f.min_pivot
                                     : std::numeric_limits<double>::infinity();
  msg << "matrix is singular even after damping (pivot-ratio condition estimate " << est << ")";
  throw NumericFailure(msg.str());
}

RealArray invert_factored(const Lu& f, const RealArray& a) {
  const std::size_t n = a.rows();
  RealArray inv = RealArray::matrix(n, n);
  std::vector<double> e(n, 0.0);
  for (std::size_t c = 0; c < n; ++c) {
    e[c] = 1.0;
    const auto col = refined_solve(f, a, e);
    e[c] = 0.0;
    for (std::size_t r = 0; r < n; ++r) inv(r, c) = col[r];
  }
  return inv;
}

}  // namespace

RealArray damped_inverse(const RealArray& m, double damping) {
  RealArray a = damped(m, damping);
  const Lu f = factor(a);
  if (f.singular) throw_singular(f);
  return invert_factored(f, a).require_finite("damped_inverse");
}

RealArray damped_solve(const RealArray& m, double damping, const RealArray& b) {
  RealArray a = damped(m, damping);
  if (b.size() != a.rows()) throw InvalidArgument("damped_solve: rhs length mismatch");
  const Lu f = factor(a);
  if (f.singular) throw_singular(f);
  auto x = refined_solve(f, a, b.values());
  const std::size_t n = x.size();
  RealArray out({n}, std::move(x));
  return out.require_finite("damped_solve");
}

double condition_estimate(const RealArray& m, double damping) {
  RealArray a = damped(m, damping);
  const Lu f = factor(a);
  if (f.singular) return std::numeric_limits<double>::infinity();
  return norm1(a) * norm1(invert_factored(f, a));
}

double identity_residual(const RealArray& a, const RealArray& b) {
  RealArray p = matmul(a, b);
  for (std::size_t i = 0; i < p.rows(); ++i) p(i, i) -= 1.0;
  return p.max_abs();
}

}  // namespace lure
