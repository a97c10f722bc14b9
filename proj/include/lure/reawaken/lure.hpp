#pragma once

#include <cstdint>
#include <vector>

#include "lure/diffusion/denoiser.hpp"

namespace lure {

struct LureConfig {
  double lambda = 0.1;
  double xi = 1e-8;
  std::size_t steps = 1000;
  double lr = 1e-4;
  std::size_t batch = 4;
  std::size_t exemplars_per_concept = 3;
  std::uint64_t seed = 0;

  void validate() const;
};

// One row of a re-binding batch: which exemplar, at what timestep, with what noise.
struct ExemplarDraw {
  std::size_t index = 0;
  int t = 1;
  Point2 eps{};
};

// A noised latent shared by every condition branch.
struct LatentDraw {
  Point2 z{};
  int t = 1;
};

// Predictions of every condition branch on one shared latent batch.
// predictions[c] is n x 2 for concept c.
struct FeatureBatch {
  std::vector<LatentDraw> latents;
  std::vector<RealArray> predictions;
};

FeatureBatch compute_features(const Denoiser& d, const ConceptWorld& world,
                              std::span<const LatentDraw> latents);

double bind_loss(const Denoiser& d, const NoiseSchedule& s, const ExemplarSet& exemplars,
                 const ConceptWorld& world, std::span<const ExemplarDraw> batch);
ad::Var bind_loss(ad::Graph& g, const Denoiser& d, const ParamBinding& p, const NoiseSchedule& s,
                  const ExemplarSet& exemplars, std::span<const ExemplarDraw> batch);

// Mean over the latent batch of sum_{m in erased} sum_{c != m} |<v_m, v_c>| / (|v_m||v_c| + xi).
double orth_loss(const Denoiser& d, const ConceptWorld& world, std::span<const LatentDraw> latents,
                 double xi);
ad::Var orth_loss(ad::Graph& g, const Denoiser& d, const ParamBinding& p, const ConceptWorld& world,
                  std::span<const LatentDraw> latents, double xi);
// Same sum over precomputed per-row vectors; used by tests and reports.
ad::Var orth_terms(ad::Graph& g, std::span<const ad::Var> v, std::span<const int> erased,
                   double xi);

struct LureStep {
  std::size_t step = 0;
  double bind_total = 0.0;
  double orth = 0.0;
  double total = 0.0;
};

struct LureResult {
  Denoiser model;
  std::vector<LureStep> trace;
};

// Fine-tunes the erased model on sum_m bind_m + lambda * orth with the
// condition table frozen. exemplar_sets must cover the erased set exactly.
LureResult lure_finetune(const Denoiser& erased, const std::vector<ExemplarSet>& exemplar_sets,
                         const ConceptWorld& world, const NoiseSchedule& s, const LureConfig& cfg);

}  // namespace lure
