#pragma once

#include <functional>
#include <span>
#include <vector>

#include "lure/core/rng.hpp"
#include "lure/diffusion/denoiser.hpp"
#include "lure/kernels/exec.hpp"

namespace lure {

struct SampleResult {
  Point2 z0{};
  // z_T, z_{T-1}, ..., z_0 (T + 1 points).
  std::vector<Point2> trajectory;
};

using NoisePredictor = std::function<Point2(Point2 z_t, int t)>;

// Ancestral reverse process from a given z_T, with sigma_t = sqrt(beta_t) for
// t > 1 and no noise on the last step.
SampleResult ddpm_sample_from(const NoisePredictor& predict, const NoiseSchedule& s, Point2 z_T,
                              SeededRng& rng);

// z_T ~ N(0, I) drawn from `rng`, then the reverse process.
SampleResult ddpm_sample(const Denoiser& d, const NoiseSchedule& s, std::span<const double> cond,
                         SeededRng& rng);

// n independent draws; draw i uses base.split(i). Results are ordered by i and
// identical under both execution policies.
std::vector<Point2> sample_many(const Denoiser& d, const NoiseSchedule& s, int cond_id,
                                std::size_t n, const SeededRng& base, Exec exec = Exec::parallel);

}  // namespace lure
