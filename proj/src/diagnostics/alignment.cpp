#include <algorithm>
#include <cmath>

#include "lure/core/errors.hpp"
#include "lure/diagnostics/diagnostics.hpp"

namespace lure {

AlignmentDraws draw_alignment(std::size_t n_mc, int time_steps, SeededRng& rng) {
  if (n_mc < 1) throw InvalidArgument("alignment_F: n_mc must be positive");
  AlignmentDraws d;
  for (std::size_t i = 0; i < n_mc; ++i) {
    d.t.push_back(static_cast<int>(rng.uniform_int(1, time_steps)));
    d.eps.push_back({rng.normal(), rng.normal()});
  }
  return d;
}

double alignment_F(const Verifier& v, const Denoiser& d, const NoiseSchedule& s, int concept_id,
                   Point2 z0, const AlignmentDraws& draws) {
  if (draws.t.empty() || draws.t.size() != draws.eps.size())
    throw InvalidArgument("alignment_F: malformed draws");
  if (concept_id < 0 || static_cast<std::size_t>(concept_id) >= v.arch().num_concepts)
    throw InvalidArgument("alignment_F: concept id out of range");
  const auto c = static_cast<std::size_t>(concept_id);
  double total = 0.0;
  for (std::size_t k = 0; k < draws.t.size(); ++k) {
    const int t = draws.t[k];
    const Point2 zt = forward_noise(s, z0, t, draws.eps[k]);
    const Point2 eh = d.predict(zt, t, concept_id);
    const double a = std::sqrt(s.alpha_bar_at(t));
    const double b = std::sqrt(1.0 - s.alpha_bar_at(t));
    const Point2 zhat{(zt[0] - b * eh[0]) / a, (zt[1] - b * eh[1]) / a};
    total -= std::max(verify_log(v, zhat, 0)[c], kLogProbFloor);
  }
  return total / static_cast<double>(draws.t.size());
}

double alignment_F(const Verifier& v, const Denoiser& d, const NoiseSchedule& s, int concept_id,
                   Point2 z0, std::size_t n_mc, SeededRng& rng) {
  return alignment_F(v, d, s, concept_id, z0, draw_alignment(n_mc, s.steps, rng));
}

}  // namespace lure
