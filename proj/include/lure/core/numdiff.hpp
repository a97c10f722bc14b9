#pragma once

#include <functional>
#include <vector>
#include <span>

#include "lure/core/autodiff.hpp"
#include "lure/core/param_vector.hpp"
#include "lure/core/real_array.hpp"

namespace lure {

using VectorFn = std::function<double(std::span<const double>)>;

inline constexpr double kDefaultFdStep = 1e-5;
// Five-point stencil step for parameter gradients. Smaller steps lose
// components near 1e-8 to rounding in the loss.
inline constexpr double kGradCheckStep = 2e-3;
inline constexpr std::size_t kMaxHessianDim = 256;

// Step used for coordinate value x: h * max(1, |x|).
double fd_step(double h, double x);

// Fourth-order central differences per coordinate,
// (-f(x+2s) + 8f(x+s) - 8f(x-s) + f(x-2s)) / 12s. Coordinates are evaluated
// in parallel; `loss` must be reentrant.
ParamVector finite_diff_grad(const LossFn& loss, const ParamVector& params,
                             double h = kGradCheckStep);
ParamVector finite_diff_grad_serial(const LossFn& loss, const ParamVector& params,
                                    double h = kGradCheckStep);

// Central differences of a plain vector function (serial).
std::vector<double> finite_diff_grad(const VectorFn& f, std::span<const double> x,
                                     double h = kDefaultFdStep);

// Central-difference Hessian, symmetrized as (H + H^T) / 2 before returning.
RealArray finite_diff_hessian(const VectorFn& f, std::span<const double> x, double h);

}  // namespace lure
