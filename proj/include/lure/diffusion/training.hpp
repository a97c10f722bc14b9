#pragma once

#include <cstdint>
#include <vector>

#include "lure/core/rng.hpp"
#include "lure/diffusion/denoiser.hpp"

namespace lure {

struct TrainConfig {
  std::size_t steps = 8000;
  double lr = 1e-3;
  std::size_t batch = 128;
  double beta1 = 0.9;
  double beta2 = 0.999;
  std::uint64_t seed = 0;
  // Probability that a training row uses the null condition instead of its concept.
  double null_prob = 0.1;
  std::size_t time_embed_dim = 8;
  std::vector<std::size_t> hidden{64, 64};

  void validate() const;
};

struct LossRecord {
  std::size_t step = 0;
  double loss = 0.0;
  double running = 0.0;  // exponential moving average, decay 0.99
};

struct TrainResult {
  Denoiser model;
  std::vector<LossRecord> curve;
  double final_running_loss = 0.0;
};

// Reconstruction-loss training over all concepts with per-row uniform concept,
// timestep and noise draws. Deterministic given cfg.seed.
TrainResult train_base(const ConceptWorld& world, const NoiseSchedule& s, const TrainConfig& cfg);

// Throws NumericFailure if a loss value is non-finite or exceeds the divergence bound.
void check_divergence(double loss, std::size_t step, const char* phase);

inline constexpr double kDivergenceBound = 1e6;

}  // namespace lure
