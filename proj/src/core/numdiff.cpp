#include "lure/core/numdiff.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <vector>

#include "lure/core/errors.hpp"

namespace lure {

double fd_step(double h, double x) { return h * std::max(1.0, std::abs(x)); }

namespace {

double central_component(const LossFn& loss, const ParamVector& params, std::size_t i,
                         double h) {
  ParamVector probe = params;
  const double step = fd_step(h, params[i]);
  const auto at = [&](double k) {
    probe[i] = params[i] + k * step;
    return evaluate(loss, probe);
  };
  return (-at(2.0) + 8.0 * at(1.0) - 8.0 * at(-1.0) + at(-2.0)) / (12.0 * step);
}

void check_step(double h) {
  if (!(h > 0.0)) throw InvalidArgument("finite difference step must be positive");
}

}  // namespace

ParamVector finite_diff_grad_serial(const LossFn& loss, const ParamVector& params, double h) {
  check_step(h);
  ParamVector out = params.zeros_like();
  for (std::size_t i = 0; i < params.size(); ++i) out[i] = central_component(loss, params, i, h);
  return out;
}

ParamVector finite_diff_grad(const LossFn& loss, const ParamVector& params, double h) {
  check_step(h);
  ParamVector out = params.zeros_like();
  const auto n = static_cast<long>(params.size());
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 4)
  for (long i = 0; i < n; ++i) {
    try {
      out[static_cast<std::size_t>(i)] =
          central_component(loss, params, static_cast<std::size_t>(i), h);
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

std::vector<double> finite_diff_grad(const VectorFn& f, std::span<const double> x, double h) {
  check_step(h);
  std::vector<double> p(x.begin(), x.end()), out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double step = fd_step(h, x[i]);
    p[i] = x[i] + step;
    const double plus = f(p);
    p[i] = x[i] - step;
    const double minus = f(p);
    p[i] = x[i];
    if (!std::isfinite(plus) || !std::isfinite(minus))
      throw NumericFailure("finite_diff_grad: non-finite function value");
    out[i] = (plus - minus) / (2.0 * step);
  }
  return out;
}

RealArray finite_diff_hessian(const VectorFn& f, std::span<const double> x, double h) {
  check_step(h);
  const std::size_t n = x.size();
  if (n == 0) throw InvalidArgument("finite_diff_hessian: empty point");
  if (n > kMaxHessianDim) throw InvalidArgument("finite_diff_hessian: dimension exceeds 256");

  std::vector<double> steps(n);
  for (std::size_t i = 0; i < n; ++i) steps[i] = fd_step(h, x[i]);
  const double f0 = f(x);
  if (!std::isfinite(f0)) throw NumericFailure("finite_diff_hessian: non-finite f(x)");

  RealArray hess = RealArray::matrix(n, n);
  const auto pairs = static_cast<long>(n * (n + 1) / 2);
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 8)
  for (long k = 0; k < pairs; ++k) {
    // Unrank k into (i, j) with j <= i.
    std::size_t i = 0;
    auto rem = static_cast<std::size_t>(k);
    while (rem > i) {
      rem -= i + 1;
      ++i;
    }
    const std::size_t j = rem;
    try {
      std::vector<double> p(x.begin(), x.end());
      const double hi = steps[i], hj = steps[j];
      double value;
      if (i == j) {
        p[i] = x[i] + hi;
        const double fp = f(p);
        p[i] = x[i] - hi;
        const double fm = f(p);
        value = (fp - 2.0 * f0 + fm) / (hi * hi);
      } else {
        p[i] = x[i] + hi;
        p[j] = x[j] + hj;
        const double fpp = f(p);
        p[j] = x[j] - hj;
        const double fpm = f(p);
        p[i] = x[i] - hi;
        const double fmm = f(p);
        p[j] = x[j] + hj;
        const double fmp = f(p);
        value = (fpp - fpm - fmp + fmm) / (4.0 * hi * hj);
      }
      if (!std::isfinite(value)) throw NumericFailure("finite_diff_hessian: non-finite entry");
      hess(i, j) = value;
      hess(j, i) = value;
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  // Entries are filled symmetrically; the explicit pass keeps the contract
  // independent of how the stencil above is organized.
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double s = 0.5 * (hess(i, j) + hess(j, i));
      hess(i, j) = s;
      hess(j, i) = s;
    }
  return hess;
}

}  // namespace lure
