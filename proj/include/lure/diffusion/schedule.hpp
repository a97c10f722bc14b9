#pragma once

#include <vector>

#include "lure/world/concept_world.hpp"

namespace lure {

// Coefficients indexed by timestep t in [1, T]; index 0 of each vector is t = 1.
struct NoiseSchedule {
  int steps = 0;
  double beta_start = 0.0;
  double beta_end = 0.0;
  std::vector<double> beta;
  std::vector<double> alpha;
  std::vector<double> alpha_bar;

  double beta_at(int t) const { return beta[static_cast<std::size_t>(t - 1)]; }
  double alpha_at(int t) const { return alpha[static_cast<std::size_t>(t - 1)]; }
  double alpha_bar_at(int t) const { return alpha_bar[static_cast<std::size_t>(t - 1)]; }
};

// Linear beta ramp from beta_start (t = 1) to beta_end (t = T).
NoiseSchedule make_schedule(int steps, double beta_start, double beta_end);

// sqrt(abar_t) z0 + sqrt(1 - abar_t) eps.
Point2 forward_noise(const NoiseSchedule& s, Point2 z0, int t, Point2 eps);

}  // namespace lure
