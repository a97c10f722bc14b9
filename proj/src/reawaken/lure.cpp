#include "lure/reawaken/lure.hpp"

#include <algorithm>

#include "lure/core/errors.hpp"
#include "lure/core/optimizer.hpp"
#include "lure/diffusion/training.hpp"

namespace lure {

void LureConfig::validate() const {
  if (!(lambda >= 0.0)) throw InvalidArgument("lure: lambda must be non-negative");
  if (!(xi > 0.0)) throw InvalidArgument("lure: xi must be positive");
  if (!(lr > 0.0)) throw InvalidArgument("lure: lr must be positive");
  if (batch < 1) throw InvalidArgument("lure: batch must be at least 1");
  if (exemplars_per_concept < 1) throw InvalidArgument("lure: need at least one exemplar");
}

namespace {

ad::Var latent_input(ad::Graph& g, std::span<const LatentDraw> latents, std::vector<int>& t) {
  RealArray z = RealArray::matrix(latents.size(), 2);
  t.resize(latents.size());
  for (std::size_t r = 0; r < latents.size(); ++r) {
    z(r, 0) = latents[r].z[0];
    z(r, 1) = latents[r].z[1];
    t[r] = latents[r].t;
  }
  return g.constant(std::move(z));
}

std::vector<ad::Var> branch_predictions(ad::Graph& g, const Denoiser& d, const ParamBinding& p,
                                        std::size_t num_concepts,
                                        std::span<const LatentDraw> latents) {
  std::vector<int> t;
  const ad::Var z = latent_input(g, latents, t);
  std::vector<ad::Var> v;
  for (std::size_t c = 0; c < num_concepts; ++c) {
    const std::vector<std::size_t> ids(latents.size(), c);
    v.push_back(d.forward(g, p, z, t, ids));
  }
  return v;
}

}  // namespace

FeatureBatch compute_features(const Denoiser& d, const ConceptWorld& world,
                              std::span<const LatentDraw> latents) {
  if (latents.empty()) throw InvalidArgument("compute_features: empty latent batch");
  FeatureBatch fb{{latents.begin(), latents.end()}, {}};
  for (std::size_t c = 0; c < world.num_concepts(); ++c) {
    RealArray v = RealArray::matrix(latents.size(), 2);
    for (std::size_t r = 0; r < latents.size(); ++r) {
      const Point2 y = d.predict(latents[r].z, latents[r].t, static_cast<int>(c));
      v(r, 0) = y[0];
      v(r, 1) = y[1];
    }
    fb.predictions.push_back(std::move(v));
  }
  return fb;
}

ad::Var bind_loss(ad::Graph& g, const Denoiser& d, const ParamBinding& p, const NoiseSchedule& s,
                  const ExemplarSet& exemplars, std::span<const ExemplarDraw> batch) {
  if (exemplars.samples.empty()) throw InvalidArgument("bind_loss: empty exemplar set");
  if (batch.empty()) throw InvalidArgument("bind_loss: empty batch");
  std::vector<NoiseDraw> draws(batch.size());
  for (std::size_t r = 0; r < batch.size(); ++r) {
    if (batch[r].index >= exemplars.samples.size())
      throw InvalidArgument("bind_loss: exemplar index out of range");
    draws[r] = {exemplars.samples[batch[r].index], batch[r].t, batch[r].eps};
  }
  const std::vector<std::size_t> ids(batch.size(), static_cast<std::size_t>(exemplars.concept_id));
  return noise_prediction_loss(g, d, p, s, draws, ids);
}

double bind_loss(const Denoiser& d, const NoiseSchedule& s, const ExemplarSet& exemplars,
                 const ConceptWorld& world, std::span<const ExemplarDraw> batch) {
  world.concept_spec(exemplars.concept_id);
  ad::Graph g;
  const ParamBinding p(g, d.params(), false);
  return bind_loss(g, d, p, s, exemplars, batch).scalar();
}

ad::Var orth_terms(ad::Graph& g, std::span<const ad::Var> v, std::span<const int> erased,
                   double xi) {
  if (!(xi > 0.0)) throw InvalidArgument("orth_loss: xi must be positive");
  if (v.empty()) throw InvalidArgument("orth_loss: no branches");
  std::vector<ad::Var> sq;
  for (const auto& x : v) sq.push_back(g.row_sum(g.square(x)));
  const std::size_t n = g.value(v[0]).rows();
  ad::Var total = g.constant(RealArray::matrix(n, 1));
  for (const int m : erased) {
    for (std::size_t c = 0; c < v.size(); ++c) {
      if (static_cast<int>(c) == m) continue;  // self-pair excluded
      const ad::Var inner = g.abs(g.row_sum(g.mul(v[static_cast<std::size_t>(m)], v[c])));
      const ad::Var norms = g.sqrt(g.mul(sq[static_cast<std::size_t>(m)], sq[c]));
      total = g.add(total, g.div(inner, g.add_scalar(norms, xi)));
    }
  }
  return g.mean(total);
}

ad::Var orth_loss(ad::Graph& g, const Denoiser& d, const ParamBinding& p, const ConceptWorld& world,
                  std::span<const LatentDraw> latents, double xi) {
  if (latents.empty()) throw InvalidArgument("orth_loss: empty latent batch");
  const auto v = branch_predictions(g, d, p, world.num_concepts(), latents);
  return orth_terms(g, v, world.erased_ids(), xi);
}

double orth_loss(const Denoiser& d, const ConceptWorld& world, std::span<const LatentDraw> latents,
                 double xi) {
  ad::Graph g;
  const ParamBinding p(g, d.params(), false);
  return orth_loss(g, d, p, world, latents, xi).scalar();
}

LureResult lure_finetune(const Denoiser& erased, const std::vector<ExemplarSet>& exemplar_sets,
                         const ConceptWorld& world, const NoiseSchedule& s, const LureConfig& cfg) {
  cfg.validate();
  const auto& ce = world.erased_ids();
  if (exemplar_sets.size() != ce.size())
    throw InvalidArgument("lure: need exactly one exemplar set per erased concept");
  for (std::size_t i = 0; i < ce.size(); ++i) {
    if (exemplar_sets[i].concept_id != ce[i])
      throw InvalidArgument("lure: exemplar set " + std::to_string(i) + " is for concept " +
                            std::to_string(exemplar_sets[i].concept_id) + ", expected " +
                            std::to_string(ce[i]));
    if (exemplar_sets[i].samples.empty()) throw InvalidArgument("lure: empty exemplar set");
  }

  LureResult result{erased, {}};
  if (ce.empty()) return result;
  Denoiser& model = result.model;
  Adam opt(model.params(), {cfg.lr}, {kEmbeddingSegment});
  SeededRng rng(cfg.seed, hash_string("lure"));
  const auto& preserved = world.preserved_ids();

  std::vector<std::vector<ExemplarDraw>> bind_batches(ce.size(), std::vector<ExemplarDraw>(cfg.batch));
  std::vector<LatentDraw> latents;
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    latents.clear();
    for (std::size_t m = 0; m < ce.size(); ++m) {
      const auto& ex = exemplar_sets[m];
      for (auto& row : bind_batches[m]) {
        row.index = static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<std::int64_t>(ex.samples.size()) - 1));
        row.t = static_cast<int>(rng.uniform_int(1, s.steps));
        row.eps = {rng.normal(), rng.normal()};
      }
    }
    // Orthogonality latents: noised exemplars from every erased concept plus
    // as many noised preserved-concept draws.
    const std::size_t n_ex = ce.size() * cfg.batch;
    for (std::size_t r = 0; r < n_ex; ++r) {
      const auto& ex = exemplar_sets[r % ce.size()];
      const auto& x = ex.samples[static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<std::int64_t>(ex.samples.size()) - 1))];
      const int t = static_cast<int>(rng.uniform_int(1, s.steps));
      const Point2 eps{rng.normal(), rng.normal()};
      latents.push_back({forward_noise(s, x, t, eps), t});
    }
    if (!preserved.empty()) {
      for (std::size_t r = 0; r < n_ex; ++r) {
        const int c = preserved[static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<std::int64_t>(preserved.size()) - 1))];
        const auto& spec = world.concept_spec(c);
        const Point2 x{spec.mean[0] + spec.stdev * rng.normal(),
                       spec.mean[1] + spec.stdev * rng.normal()};
        const int t = static_cast<int>(rng.uniform_int(1, s.steps));
        const Point2 eps{rng.normal(), rng.normal()};
        latents.push_back({forward_noise(s, x, t, eps), t});
      }
    }

    double bind_total = 0.0;
    double orth = 0.0;
    const LossFn loss = [&](ad::Graph& g, const ParamBinding& p) {
      ad::Var bind = bind_loss(g, model, p, s, exemplar_sets[0], bind_batches[0]);
      for (std::size_t m = 1; m < ce.size(); ++m)
        bind = g.add(bind, bind_loss(g, model, p, s, exemplar_sets[m], bind_batches[m]));
      const ad::Var o = orth_loss(g, model, p, world, latents, cfg.xi);
      bind_total = bind.scalar();
      orth = o.scalar();
      return g.add(bind, g.scale(o, cfg.lambda));
    };
    auto [value, gradient] = value_and_grad(loss, model.params());
    check_divergence(value, step, "reawakening");
    opt.step(model.params(), gradient);
    result.trace.push_back({step, bind_total, orth, value});
  }
  return result;
}

}  // namespace lure
