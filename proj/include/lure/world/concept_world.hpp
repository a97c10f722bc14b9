#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "lure/core/real_array.hpp"
#include "lure/core/rng.hpp"

namespace lure {

using Point2 = std::array<double, 2>;

struct ConceptSpec {
  int id = 0;
  Point2 mean{};
  double stdev = 1.0;
  std::string label;

  friend bool operator==(const ConceptSpec&, const ConceptSpec&) = default;
};

// Ground-truth concept universe: D isotropic Gaussians, a disjoint
// erased/preserved partition, and a (D+1) x E condition table whose last row
// is the null condition.
class ConceptWorld {
 public:
  ConceptWorld(std::vector<ConceptSpec> concepts, std::vector<int> erased_ids,
               RealArray embeddings, std::uint64_t seed = 0);

  std::size_t num_concepts() const { return concepts_.size(); }
  std::size_t embed_dim() const { return embeddings_.cols(); }
  std::uint64_t seed() const { return seed_; }
  int null_id() const { return static_cast<int>(concepts_.size()); }

  const std::vector<ConceptSpec>& concepts() const { return concepts_; }
  const ConceptSpec& concept_spec(int id) const;
  const std::vector<int>& erased_ids() const { return erased_; }
  const std::vector<int>& preserved_ids() const { return preserved_; }
  bool is_erased(int id) const;
  const RealArray& embeddings() const { return embeddings_; }

  // Same concepts and embeddings under a different partition.
  ConceptWorld with_erased(std::vector<int> erased_ids) const;

  friend bool operator==(const ConceptWorld&, const ConceptWorld&) = default;

 private:
  std::vector<ConceptSpec> concepts_;
  std::vector<int> erased_;
  std::vector<int> preserved_;
  RealArray embeddings_;
  std::uint64_t seed_ = 0;
};

// Exemplar images for one concept.
struct ExemplarSet {
  int concept_id = 0;
  std::vector<Point2> samples;
};

// Means at angle 2*pi*i/d on a circle; embeddings are one-hot of width d+1,
// zero-padded to `embed_dim` (0 selects d+1); the null row is all zeros.
ConceptWorld default_world(int d, double radius, double stdev, std::vector<int> erased_ids,
                           std::uint64_t seed, std::size_t embed_dim = 0);

std::vector<Point2> sample_concept_data(const ConceptWorld& world, int concept_id, std::size_t n,
                                        SeededRng& rng);

ExemplarSet make_exemplars(const ConceptWorld& world, int concept_id, std::size_t count,
                           SeededRng& rng);

std::string serialize_world(const ConceptWorld& world);
ConceptWorld parse_world(std::string_view text);
std::uint64_t world_hash(const ConceptWorld& world);

}  // namespace lure
