#pragma once

#include <cstdint>
#include <vector>

#include "lure/diffusion/checkpoint.hpp"
#include "lure/diffusion/denoiser.hpp"
#include "lure/kernels/exec.hpp"

namespace lure {

struct VerifierArch {
  std::size_t num_concepts = 0;
  std::size_t time_embed_dim = 8;
  std::vector<std::size_t> hidden{32, 32};
  int time_steps = 100;

  MlpArch mlp() const { return {2 + time_embed_dim, hidden, num_concepts}; }
  friend bool operator==(const VerifierArch&, const VerifierArch&) = default;
};

// Concept posterior from a latent and its timestep (t = 0 is a clean sample).
class Verifier {
 public:
  Verifier(VerifierArch arch, ParamVector params);
  // Zero final layer, so the posterior starts uniform.
  static Verifier create(const VerifierArch& arch, SeededRng& rng);

  const VerifierArch& arch() const { return arch_; }
  const ParamVector& params() const { return params_; }
  ParamVector& params() { return params_; }

  std::vector<double> logits(Point2 z, int t) const;
  // n x D log-softmax on a graph; z is n x 2.
  ad::Var log_probs(ad::Graph& g, const ParamBinding& p, ad::Var z, std::span<const int> t) const;

 private:
  VerifierArch arch_;
  ParamVector params_;
};

std::vector<double> verify(const Verifier& v, Point2 z, int t);
std::vector<double> verify_log(const Verifier& v, Point2 z, int t);

struct LsisConfig {
  std::size_t max_retries = 10;
  std::vector<int> check_timesteps{0};
  std::size_t train_steps = 3000;
  double lr = 1e-3;
  std::size_t batch = 128;
  std::uint64_t seed = 0;
  std::size_t heldout = 2000;
  std::vector<std::size_t> hidden{32, 32};
  std::size_t time_embed_dim = 8;
  // Training timesteps are drawn uniformly from {0} and [1, max_train_t];
  // -1 selects T.
  int max_train_t = -1;

  void validate(int time_steps) const;
};

struct VerifierTrainResult {
  Verifier verifier;
  double heldout_accuracy = 0.0;
  double final_loss = 0.0;
};

VerifierTrainResult train_verifier(const ConceptWorld& world, const NoiseSchedule& s,
                                   const LsisConfig& cfg);

struct LsisOutcome {
  Point2 sample{};
  bool accepted = false;
  std::size_t attempts = 0;
};

// Ancestral sampling with verifier accept/reject. Attempts draw sequentially
// from `rng`, so the first attempt equals ddpm_sample with the same generator.
LsisOutcome lsis_sample(const Denoiser& d, const Verifier& v, const NoiseSchedule& s, int target_id,
                        const LsisConfig& cfg, SeededRng& rng);

// n draws; draw i uses base.split(i), matching sample_many's streams.
std::vector<LsisOutcome> lsis_sample_many(const Denoiser& d, const Verifier& v,
                                          const NoiseSchedule& s, int target_id, std::size_t n,
                                          const LsisConfig& cfg, const SeededRng& base,
                                          Exec exec = Exec::parallel);

Checkpoint verifier_checkpoint(const Verifier& v, std::uint64_t world_hash);
Verifier verifier_from_checkpoint(const Checkpoint& c);

}  // namespace lure
