#pragma once

#include <vector>

#include "lure/diffusion/denoiser.hpp"
#include "lure/kernels/exec.hpp"

namespace lure {

struct ConceptEval {
  int concept_id = 0;
  double accuracy = 0.0;
  double mmd2 = 0.0;
  std::vector<Point2> samples;
};

// Draws n ancestral samples per concept and scores them against n fresh
// ground-truth draws. bandwidth <= 0 selects the median heuristic on the
// reference sample. Concept c uses rng.split(c) for sampling and
// rng.split(c + 1000003) for its reference set.
std::vector<ConceptEval> evaluate_concepts(const Denoiser& d, const NoiseSchedule& s,
                                           const ConceptWorld& world, std::size_t n,
                                           const SeededRng& rng, double bandwidth = 0.0,
                                           Exec exec = Exec::parallel);

std::vector<Point2> reference_samples(const ConceptWorld& world, int concept_id, std::size_t n,
                                      const SeededRng& rng);

}  // namespace lure
