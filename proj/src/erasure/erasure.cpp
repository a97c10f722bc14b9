#include "lure/erasure/erasure.hpp"

#include "lure/core/errors.hpp"
#include "lure/core/optimizer.hpp"

namespace lure {

void ErasureConfig::validate() const {
  if (!(gamma >= 0.0)) throw InvalidArgument("erasure: gamma must be non-negative");
  if (!(lr > 0.0)) throw InvalidArgument("erasure: lr must be positive");
  if (batch < 1) throw InvalidArgument("erasure: batch must be at least 1");
}

ErasureResult erase_concepts(const Denoiser& base, const ConceptWorld& world,
                             const NoiseSchedule& s, const ErasureConfig& cfg) {
  cfg.validate();
  const auto& erased = world.erased_ids();
  ErasureResult result{base, {}};
  Denoiser& model = result.model;
  const ParamVector& theta0 = base.params();
  Adam opt(model.params(), {cfg.lr}, {kEmbeddingSegment});
  SeededRng rng(cfg.seed, hash_string("erase"));

  std::vector<NoiseDraw> batch(erased.empty() ? 0 : cfg.batch);
  std::vector<std::size_t> cond(batch.size());
  RealArray target = RealArray::matrix(std::max<std::size_t>(batch.size(), 1), 2);
  const std::size_t emb_size = theta0.layout()[0].size();
  double running = 0.0;
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    for (std::size_t r = 0; r < batch.size(); ++r) {
      const int c = erased[static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<std::int64_t>(erased.size()) - 1))];
      const auto& spec = world.concept_spec(c);
      batch[r].x = {spec.mean[0] + spec.stdev * rng.normal(),
                    spec.mean[1] + spec.stdev * rng.normal()};
      batch[r].t = static_cast<int>(rng.uniform_int(1, s.steps));
      batch[r].eps = {rng.normal(), rng.normal()};
      cond[r] = static_cast<std::size_t>(c);
      const Point2 zt = forward_noise(s, batch[r].x, batch[r].t, batch[r].eps);
      const Point2 y = base.predict(zt, batch[r].t, base.null_id());
      target(r, 0) = y[0];
      target(r, 1) = y[1];
    }

    double value = 0.0;
    ParamVector gradient = model.params().zeros_like();
    if (!batch.empty()) {
      const LossFn loss = [&](ad::Graph& g, const ParamBinding& p) {
        std::vector<int> t(batch.size());
        for (std::size_t r = 0; r < batch.size(); ++r) t[r] = batch[r].t;
        const ad::Var pred = model.forward(g, p, g.constant(noised_latents(s, batch)), t, cond);
        return g.scale(g.mean(g.square(g.sub(pred, g.constant(target)))), 2.0);
      };
      auto vg = value_and_grad(loss, model.params());
      value = vg.value;
      gradient = std::move(vg.gradient);
    }
    // Proximity term, added analytically. The embedding rows never move, so
    // they contribute nothing.
    const auto theta = model.params().values();
    auto gv = gradient.values();
    double prox = 0.0;
    for (std::size_t i = emb_size; i < theta.size(); ++i) {
      const double diff = theta[i] - theta0[i];
      prox += diff * diff;
      gv[i] += 2.0 * cfg.gamma * diff;
    }
    value += cfg.gamma * prox;
    check_divergence(value, step, "erasure");
    opt.step(model.params(), gradient);
    running = step == 0 ? value : 0.99 * running + 0.01 * value;
    result.curve.push_back({step, value, running});
  }
  return result;
}

ErasureReport erasure_report(const Denoiser& base, const Denoiser& erased, const ConceptWorld& world,
                             const NoiseSchedule& s, std::size_t n_per_concept, const SeededRng& rng) {
  if (n_per_concept < 1) throw InvalidArgument("erasure_report: n_per_concept must be positive");
  // Same streams for both checkpoints so that erased == base gives identical rows.
  const auto before = evaluate_concepts(base, s, world, n_per_concept, rng);
  const auto after = evaluate_concepts(erased, s, world, n_per_concept, rng);
  ErasureReport rep;
  for (std::size_t c = 0; c < before.size(); ++c) {
    const int id = static_cast<int>(c);
    rep.rows.push_back({id, world.is_erased(id), before[c].accuracy, after[c].accuracy,
                        before[c].mmd2, after[c].mmd2});
  }
  rep.param_distance = l2_distance(base.params(), erased.params());
  return rep;
}

}  // namespace lure
