#include "lure/diffusion/schedule.hpp"

#include <cmath>

#include "lure/core/errors.hpp"

namespace lure {

NoiseSchedule make_schedule(int steps, double beta_start, double beta_end) {
  if (steps < 1) throw InvalidArgument("schedule needs at least one step");
  if (!(beta_start > 0.0) || !(beta_start <= beta_end) || !(beta_end < 1.0))
    throw InvalidArgument("schedule requires 0 < beta_start <= beta_end < 1");
  NoiseSchedule s;
  s.steps = steps;
  s.beta_start = beta_start;
  s.beta_end = beta_end;
  const auto n = static_cast<std::size_t>(steps);
  s.beta.resize(n);
  s.alpha.resize(n);
  s.alpha_bar.resize(n);
  double running = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double frac = steps == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(steps - 1);
    s.beta[i] = beta_start + (beta_end - beta_start) * frac;
    s.alpha[i] = 1.0 - s.beta[i];
    running *= s.alpha[i];
    s.alpha_bar[i] = running;
  }
  return s;
}

Point2 forward_noise(const NoiseSchedule& s, Point2 z0, int t, Point2 eps) {
  if (t < 1 || t > s.steps) throw InvalidArgument("forward_noise: timestep out of range");
  const double a = std::sqrt(s.alpha_bar_at(t));
  const double b = std::sqrt(1.0 - s.alpha_bar_at(t));
  return {a * z0[0] + b * eps[0], a * z0[1] + b * eps[1]};
}

}  // namespace lure
