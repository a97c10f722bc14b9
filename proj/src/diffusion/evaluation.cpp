#include "lure/diffusion/evaluation.hpp"

#include "lure/core/errors.hpp"
#include "lure/diffusion/sampler.hpp"
#include "lure/world/oracle.hpp"

namespace lure {

namespace {
constexpr std::uint64_t kReferenceOffset = 1000003;
}

std::vector<Point2> reference_samples(const ConceptWorld& world, int concept_id, std::size_t n,
                                      const SeededRng& rng) {
  SeededRng r = rng.split(static_cast<std::uint64_t>(concept_id) + kReferenceOffset);
  return sample_concept_data(world, concept_id, n, r);
}

std::vector<ConceptEval> evaluate_concepts(const Denoiser& d, const NoiseSchedule& s,
                                           const ConceptWorld& world, std::size_t n,
                                           const SeededRng& rng, double bandwidth, Exec exec) {
  if (n == 0) throw InvalidArgument("evaluate_concepts: n must be positive");
  std::vector<ConceptEval> out;
  for (std::size_t c = 0; c < world.num_concepts(); ++c) {
    const int id = static_cast<int>(c);
    ConceptEval e;
    e.concept_id = id;
    e.samples = sample_many(d, s, id, n, rng.split(c), exec);
    const auto ref = reference_samples(world, id, n, rng);
    e.accuracy = oracle_accuracy(world, e.samples, id);
    e.mmd2 = mmd2(e.samples, ref, bandwidth > 0.0 ? bandwidth : median_bandwidth(ref));
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace lure
