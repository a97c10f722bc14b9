#pragma once

#include <cstdint>
#include <vector>

#include "lure/diffusion/denoiser.hpp"
#include "lure/diffusion/evaluation.hpp"
#include "lure/diffusion/training.hpp"

namespace lure {

struct ErasureConfig {
  double gamma = 0.01;
  std::size_t steps = 2000;
  double lr = 1e-3;
  std::size_t batch = 64;
  std::uint64_t seed = 0;

  void validate() const;
};

struct ErasureResult {
  Denoiser model;
  std::vector<LossRecord> curve;
};

// Pulls the erased concepts' conditional predictions onto the base model's
// null-condition prediction, with a proximity penalty gamma * |theta - theta0|^2.
// The null-branch target is evaluated with the frozen base parameters and the
// embedding table is never updated.
ErasureResult erase_concepts(const Denoiser& base, const ConceptWorld& world,
                             const NoiseSchedule& s, const ErasureConfig& cfg);

struct ErasureConceptRow {
  int concept_id = 0;
  bool erased = false;
  double base_accuracy = 0.0;
  double erased_accuracy = 0.0;
  double base_mmd2 = 0.0;
  double erased_mmd2 = 0.0;
};

struct ErasureReport {
  std::vector<ErasureConceptRow> rows;
  double param_distance = 0.0;
};

ErasureReport erasure_report(const Denoiser& base, const Denoiser& erased, const ConceptWorld& world,
                             const NoiseSchedule& s, std::size_t n_per_concept, const SeededRng& rng);

}  // namespace lure
