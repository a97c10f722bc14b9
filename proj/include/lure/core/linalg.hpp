#pragma once

#include "lure/core/real_array.hpp"

namespace lure {

// (m + damping * I)^-1 via LU with partial pivoting and one refinement step.
// Throws NumericFailure (message carries a condition estimate) when the
// damped matrix is numerically singular.
RealArray damped_inverse(const RealArray& m, double damping);

// Solves (m + damping * I) x = b for a single right-hand side.
RealArray damped_solve(const RealArray& m, double damping, const RealArray& b);

// 1-norm condition number estimate of (m + damping * I); +inf when singular.
double condition_estimate(const RealArray& m, double damping = 0.0);

// max |a * b - I|.
double identity_residual(const RealArray& a, const RealArray& b);

}  // namespace lure
