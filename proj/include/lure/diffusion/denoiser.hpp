#pragma once

#include <span>
#include <vector>

#include "lure/core/autodiff.hpp"
#include "lure/diffusion/mlp.hpp"
#include "lure/diffusion/schedule.hpp"
#include "lure/world/concept_world.hpp"

namespace lure {

struct DenoiserArch {
  std::size_t num_concepts = 0;
  std::size_t embed_dim = 0;
  std::size_t time_embed_dim = 8;
  std::vector<std::size_t> hidden{64, 64};
  int time_steps = 100;

  MlpArch mlp() const { return {2 + time_embed_dim + embed_dim, hidden, 2}; }
  friend bool operator==(const DenoiserArch&, const DenoiserArch&) = default;
};

inline constexpr const char* kEmbeddingSegment = "embedding";

// Conditional noise predictor eps_theta(z_t, t, y). The condition table is a
// parameter segment so base training can adapt it while later phases freeze it.
class Denoiser {
 public:
  Denoiser(DenoiserArch arch, ParamVector params);

  // Fresh network around the world's embedding table; final layer zeroed.
  static Denoiser create(const DenoiserArch& arch, const RealArray& embeddings, SeededRng& rng);

  const DenoiserArch& arch() const { return arch_; }
  const ParamVector& params() const { return params_; }
  ParamVector& params() { return params_; }
  int null_id() const { return static_cast<int>(arch_.num_concepts); }

  // Row `id` of the condition table; id == null_id() is the null condition.
  std::span<const double> embedding_row(int id) const;

  // Noise prediction for one latent with an explicit condition vector.
  Point2 predict(Point2 z_t, int t, std::span<const double> cond) const;
  Point2 predict(Point2 z_t, int t, int cond_id) const { return predict(z_t, t, embedding_row(cond_id)); }

  // Batched prediction on a graph with parameters from `params`. `z` is n x 2;
  // cond_ids index the bound condition table.
  ad::Var forward(ad::Graph& g, const ParamBinding& params, ad::Var z, std::span<const int> t,
                  std::span<const std::size_t> cond_ids) const;

 private:
  DenoiserArch arch_;
  ParamVector params_;
};

Point2 denoise_predict(const Denoiser& d, Point2 z_t, int t, std::span<const double> cond);

// One (x, t, eps) training triple.
struct NoiseDraw {
  Point2 x{};
  int t = 1;
  Point2 eps{};
};

// mean_b |eps_b - eps_theta(sqrt(abar) x_b + sqrt(1-abar) eps_b, t_b, y_{cond_b})|^2
ad::Var noise_prediction_loss(ad::Graph& g, const Denoiser& d, const ParamBinding& params,
                              const NoiseSchedule& s, std::span<const NoiseDraw> batch,
                              std::span<const std::size_t> cond_ids);

// Forward-noised latents of a batch as an n x 2 constant.
RealArray noised_latents(const NoiseSchedule& s, std::span<const NoiseDraw> batch);

// Reconstruction loss for one concept (all rows conditioned on it).
double recon_loss(const Denoiser& d, const NoiseSchedule& s, const ConceptWorld& world,
                  int concept_id, std::span<const NoiseDraw> batch);
LossFn recon_loss_fn(const Denoiser& d, const NoiseSchedule& s, const ConceptWorld& world,
                     int concept_id, std::vector<NoiseDraw> batch);

// Draws n triples for a concept: x ~ p(x|c), t ~ U{1..T}, eps ~ N(0, I).
std::vector<NoiseDraw> draw_noise_batch(const ConceptWorld& world, const NoiseSchedule& s,
                                        int concept_id, std::size_t n, SeededRng& rng);

}  // namespace lure
