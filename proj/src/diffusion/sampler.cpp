#include "lure/diffusion/sampler.hpp"

#include <cmath>
#include <string>

#include "lure/core/errors.hpp"

namespace lure {

SampleResult ddpm_sample_from(const NoisePredictor& predict, const NoiseSchedule& s, Point2 z_T,
                              SeededRng& rng) {
  SampleResult out;
  out.trajectory.reserve(static_cast<std::size_t>(s.steps) + 1);
  Point2 z = z_T;
  out.trajectory.push_back(z);
  for (int t = s.steps; t >= 1; --t) {
    const Point2 eps = predict(z, t);
    const double a = s.alpha_at(t);
    const double coef = (1.0 - a) / std::sqrt(1.0 - s.alpha_bar_at(t));
    const double inv = 1.0 / std::sqrt(a);
    z = {inv * (z[0] - coef * eps[0]), inv * (z[1] - coef * eps[1])};
    if (t > 1) {
      const double sigma = std::sqrt(s.beta_at(t));
      const double n0 = rng.normal();
      const double n1 = rng.normal();
      z = {z[0] + sigma * n0, z[1] + sigma * n1};
    }
    if (!std::isfinite(z[0]) || !std::isfinite(z[1]))
      throw NumericFailure("sampler state became non-finite at step " + std::to_string(t));
    out.trajectory.push_back(z);
  }
  out.z0 = z;
  return out;
}

SampleResult ddpm_sample(const Denoiser& d, const NoiseSchedule& s, std::span<const double> cond,
                         SeededRng& rng) {
  const Point2 z_T{rng.normal(), rng.normal()};
  return ddpm_sample_from([&](Point2 z, int t) { return d.predict(z, t, cond); }, s, z_T, rng);
}

std::vector<Point2> sample_many(const Denoiser& d, const NoiseSchedule& s, int cond_id,
                                std::size_t n, const SeededRng& base, Exec exec) {
  const auto cond = d.embedding_row(cond_id);
  std::vector<Point2> out(n);
  for_each_index(exec, n, [&](std::size_t i) {
    SeededRng rng = base.split(i);
    out[i] = ddpm_sample(d, s, cond, rng).z0;
  });
  return out;
}

}  // namespace lure
