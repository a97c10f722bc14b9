#include <algorithm>
#include <cmath>

#include "lure/core/errors.hpp"
#include "lure/diagnostics/diagnostics.hpp"

namespace lure {

GradientAlignment gradient_cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidArgument("gradient_cosine: length mismatch");
  const double na = l2_norm(a), nb = l2_norm(b);
  if (na < kDegenerateNorm || nb < kDegenerateNorm) return {0.0, true};
  const double rho = dot(a, b) / (na * nb);
  return {std::clamp(rho, -1.0, 1.0), false};
}

GradientAlignment gradient_alignment(const LossFn& li, const LossFn& lj, const ParamVector& params) {
  const auto gi = grad(li, params);
  const auto gj = grad(lj, params);
  return gradient_cosine(gi.values(), gj.values());
}

namespace {

struct SharedRows {
  std::vector<Point2> u;
  std::vector<int> t;
  std::vector<Point2> eps;
};

SharedRows draw_shared(std::size_t n, int time_steps, SeededRng& rng) {
  if (n < 1) throw InvalidArgument("batch spec needs at least one row");
  SharedRows r;
  for (std::size_t i = 0; i < n; ++i) {
    r.u.push_back({rng.normal(), rng.normal()});
    r.t.push_back(static_cast<int>(rng.uniform_int(1, time_steps)));
    r.eps.push_back({rng.normal(), rng.normal()});
  }
  return r;
}

// Gradient of concept c's reconstruction loss, restricted to the network
// weights (the condition table is not part of the optimized parameters).
std::vector<double> concept_gradient(const Denoiser& d, const ConceptWorld& world,
                                     const NoiseSchedule& s, int c, const SharedRows& rows) {
  const auto& spec = world.concept_spec(c);
  std::vector<NoiseDraw> batch(rows.u.size());
  for (std::size_t i = 0; i < batch.size(); ++i)
    batch[i] = {{spec.mean[0] + spec.stdev * rows.u[i][0], spec.mean[1] + spec.stdev * rows.u[i][1]},
                rows.t[i],
                rows.eps[i]};
  const auto g = grad(recon_loss_fn(d, s, world, c, std::move(batch)), d.params());
  const std::size_t skip = d.params().layout()[0].size();
  return {g.values().begin() + static_cast<long>(skip), g.values().end()};
}

}  // namespace

GradientAlignment gradient_alignment(const Denoiser& d, const ConceptWorld& world,
                                     const NoiseSchedule& s, int i, int j, BatchSpec spec,
                                     SeededRng& rng) {
  world.concept_spec(i);
  world.concept_spec(j);
  const auto rows = draw_shared(spec.n, s.steps, rng);
  const auto gi = concept_gradient(d, world, s, i, rows);
  const auto gj = i == j ? gi : concept_gradient(d, world, s, j, rows);
  return gradient_cosine(gi, gj);
}

RhoMatrix rho_matrix(const Denoiser& d, const ConceptWorld& world, const NoiseSchedule& s,
                     BatchSpec spec, SeededRng& rng) {
  const std::size_t n = world.num_concepts();
  const auto rows = draw_shared(spec.n, s.steps, rng);
  std::vector<std::vector<double>> grads;
  for (std::size_t c = 0; c < n; ++c)
    grads.push_back(concept_gradient(d, world, s, static_cast<int>(c), rows));
  RhoMatrix m{RealArray::matrix(n, n), std::vector<bool>(n, false)};
  for (std::size_t a = 0; a < n; ++a) {
    m.degenerate[a] = l2_norm(grads[a]) < kDegenerateNorm;
    for (std::size_t b = a; b < n; ++b) {
      const double r = gradient_cosine(grads[a], grads[b]).rho;
      m.entries(a, b) = r;
      m.entries(b, a) = r;
    }
  }
  return m;
}

std::vector<LatentDraw> draw_latent_batch(const ConceptWorld& world, const NoiseSchedule& s,
                                          std::size_t n, SeededRng& rng) {
  std::vector<LatentDraw> out;
  const int d = static_cast<int>(world.num_concepts());
  for (std::size_t i = 0; i < n; ++i) {
    const int c = static_cast<int>(rng.uniform_int(0, d - 1));
    const auto& spec = world.concept_spec(c);
    const Point2 x{spec.mean[0] + spec.stdev * rng.normal(), spec.mean[1] + spec.stdev * rng.normal()};
    const int t = static_cast<int>(rng.uniform_int(1, s.steps));
    const Point2 eps{rng.normal(), rng.normal()};
    out.push_back({forward_noise(s, x, t, eps), t});
  }
  return out;
}

RealArray entanglement_from_features(const FeatureBatch& fb) {
  const std::size_t n = fb.predictions.size();
  if (n == 0 || fb.latents.empty()) throw InvalidArgument("entanglement: empty feature batch");
  const std::size_t rows = fb.latents.size();
  RealArray m = RealArray::matrix(n, n);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a; b < n; ++b) {
      double acc = 0.0;
      for (std::size_t r = 0; r < rows; ++r) {
        const auto& va = fb.predictions[a];
        const auto& vb = fb.predictions[b];
        const double na = std::hypot(va(r, 0), va(r, 1));
        const double nb = std::hypot(vb(r, 0), vb(r, 1));
        if (na == 0.0 || nb == 0.0) continue;
        acc += std::min(1.0, std::abs(va(r, 0) * vb(r, 0) + va(r, 1) * vb(r, 1)) / (na * nb));
      }
      m(a, b) = m(b, a) = acc / static_cast<double>(rows);
    }
  }
  return m;
}

RealArray entanglement_report(const Denoiser& d, const ConceptWorld& world,
                              std::span<const LatentDraw> latents) {
  return entanglement_from_features(compute_features(d, world, latents));
}

double mean_pair_entanglement(const RealArray& m, std::span<const int> ids) {
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t a = 0; a < ids.size(); ++a)
    for (std::size_t b = a + 1; b < ids.size(); ++b) {
      total += m(static_cast<std::size_t>(ids[a]), static_cast<std::size_t>(ids[b]));
      ++count;
    }
  return count == 0 ? 0.0 : total / static_cast<double>(count);
}

}  // namespace lure
