#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "lure/core/real_array.hpp"

namespace lure {

// 64-bit mixer used for seed and stream derivation.
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b);
std::uint64_t hash_string(std::string_view s);

// Reproducible generator addressed by (seed, stream). Distinct streams are
// independent sub-sequences; the bit-to-real conversions are done here so the
// draws do not depend on the standard library's distribution implementations.
class SeededRng {
 public:
  SeededRng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  // Child generator for sub-stream `index`; does not advance this generator.
  SeededRng split(std::uint64_t index) const;

  std::uint64_t next_u64() { return engine_(); }
  // Uniform in [0, 1).
  double uniform();
  // Uniform integer in [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  double normal();

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Standard-normal array of the given shape.
RealArray gaussian_sample(SeededRng& rng, const Shape& shape);

}  // namespace lure
