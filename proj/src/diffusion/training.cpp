#include "lure/diffusion/training.hpp"

#include <cmath>
#include <string>

#include "lure/core/errors.hpp"
#include "lure/core/optimizer.hpp"

namespace lure {

void TrainConfig::validate() const {
  if (steps < 1) throw InvalidArgument("train: steps must be at least 1");
  if (!(lr > 0.0)) throw InvalidArgument("train: lr must be positive");
  if (batch < 1) throw InvalidArgument("train: batch must be at least 1");
  if (!(null_prob >= 0.0 && null_prob < 1.0)) throw InvalidArgument("train: null_prob must be in [0,1)");
  if (hidden.empty()) throw InvalidArgument("train: at least one hidden layer");
}

void check_divergence(double loss, std::size_t step, const char* phase) {
  if (!std::isfinite(loss) || loss > kDivergenceBound)
    throw NumericFailure(std::string(phase) + " diverged at step " + std::to_string(step) +
                         " (loss " + std::to_string(loss) + ")");
}

TrainResult train_base(const ConceptWorld& world, const NoiseSchedule& s, const TrainConfig& cfg) {
  cfg.validate();
  SeededRng rng(cfg.seed, hash_string("train-base"));
  DenoiserArch arch{world.num_concepts(), world.embed_dim(), cfg.time_embed_dim, cfg.hidden,
                    s.steps};
  SeededRng init = rng.split(0);
  TrainResult result{Denoiser::create(arch, world.embeddings(), init), {}, 0.0};
  Denoiser& model = result.model;
  Adam opt(model.params(), {cfg.lr, cfg.beta1, cfg.beta2});

  const int d = static_cast<int>(world.num_concepts());
  std::vector<NoiseDraw> batch(cfg.batch);
  std::vector<std::size_t> cond(cfg.batch);
  double running = 0.0;
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    for (std::size_t r = 0; r < cfg.batch; ++r) {
      const int c = static_cast<int>(rng.uniform_int(0, d - 1));
      const auto& spec = world.concept_spec(c);
      batch[r].x = {spec.mean[0] + spec.stdev * rng.normal(),
                    spec.mean[1] + spec.stdev * rng.normal()};
      batch[r].t = static_cast<int>(rng.uniform_int(1, s.steps));
      batch[r].eps = {rng.normal(), rng.normal()};
      const bool drop = rng.uniform() < cfg.null_prob;
      cond[r] = static_cast<std::size_t>(drop ? d : c);
    }
    const LossFn loss = [&](ad::Graph& g, const ParamBinding& p) {
      return noise_prediction_loss(g, model, p, s, batch, cond);
    };
    auto [value, gradient] = value_and_grad(loss, model.params());
    check_divergence(value, step, "base training");
    opt.step(model.params(), gradient);
    running = step == 0 ? value : 0.99 * running + 0.01 * value;
    result.curve.push_back({step, value, running});
  }
  result.final_running_loss = running;
  return result;
}

}  // namespace lure
