#pragma once

#include <cstdint>
#include <vector>

#include "lure/diffusion/denoiser.hpp"
#include "lure/lsis/lsis.hpp"
#include "lure/reawaken/lure.hpp"

namespace lure {

// ---- alignment function -------------------------------------------------

// Fixed (t, eps) draws so that F can be compared across parameters and latents
// with common random numbers.
struct AlignmentDraws {
  std::vector<int> t;
  std::vector<Point2> eps;
};
AlignmentDraws draw_alignment(std::size_t n_mc, int time_steps, SeededRng& rng);

inline constexpr double kLogProbFloor = -27.631021115928547;  // log(1e-12)

// -E[log p(c | z0_hat)], z0_hat = (z_t - sqrt(1 - abar) eps_hat) / sqrt(abar),
// scored by the verifier at t = 0.
double alignment_F(const Verifier& v, const Denoiser& d, const NoiseSchedule& s, int concept_id,
                   Point2 z0, const AlignmentDraws& draws);
double alignment_F(const Verifier& v, const Denoiser& d, const NoiseSchedule& s, int concept_id,
                   Point2 z0, std::size_t n_mc, SeededRng& rng);

// ---- gradient alignment ---------------------------------------------------

struct GradientAlignment {
  double rho = 0.0;
  bool degenerate = false;
};

inline constexpr double kDegenerateNorm = 1e-12;

// Cosine between two gradient vectors; degenerate when either norm < 1e-12.
GradientAlignment gradient_cosine(std::span<const double> a, std::span<const double> b);
// Cosine between the parameter gradients of two arbitrary losses.
GradientAlignment gradient_alignment(const LossFn& li, const LossFn& lj, const ParamVector& params);

// Shared base draws: every concept uses x = mu_c + sigma_c * u with the same
// (u, t, eps) rows.
struct BatchSpec {
  std::size_t n = 64;
};

GradientAlignment gradient_alignment(const Denoiser& d, const ConceptWorld& world,
                                     const NoiseSchedule& s, int i, int j, BatchSpec spec,
                                     SeededRng& rng);

struct RhoMatrix {
  RealArray entries;
  std::vector<bool> degenerate;  // per concept
};
RhoMatrix rho_matrix(const Denoiser& d, const ConceptWorld& world, const NoiseSchedule& s,
                     BatchSpec spec, SeededRng& rng);

// ---- entanglement -----------------------------------------------------------

std::vector<LatentDraw> draw_latent_batch(const ConceptWorld& world, const NoiseSchedule& s,
                                          std::size_t n, SeededRng& rng);
// D x D mean |cos| between per-concept predictions on a shared latent batch.
RealArray entanglement_report(const Denoiser& d, const ConceptWorld& world,
                              std::span<const LatentDraw> latents);
RealArray entanglement_from_features(const FeatureBatch& fb);
// Mean over unordered pairs of distinct ids; 0 when fewer than two ids.
double mean_pair_entanglement(const RealArray& m, std::span<const int> ids);

// ---- implicit-function recovery check ---------------------------------------

struct IftConfig {
  double radius = 1.0;
  double stdev = 0.5;
  std::vector<std::size_t> hidden{6};
  std::size_t time_embed_dim = 2;
  int time_steps = 100;
  double beta_start = 1e-4;
  double beta_end = 0.02;

  std::size_t base_steps = 3000;
  double base_lr = 1e-2;
  std::size_t base_batch = 64;

  std::size_t verifier_steps = 1000;
  double verifier_lr = 1e-2;
  std::vector<std::size_t> verifier_hidden{16};

  double erase_gamma = 0.01;
  std::size_t erase_steps = 2000;
  double erase_lr = 1e-2;
  std::size_t erase_batch = 64;

  std::size_t n_mc = 64;
  std::size_t zmin_steps = 500;
  double zmin_lr = 1e-2;
  std::size_t zmin_restarts = 4;

  double hessian_step = 1e-4;
  double damping = 0.1;
  bool skip_erasure = false;

  void validate() const;
};

inline constexpr std::size_t kMaxMicroParams = 64;

struct IftReport {
  double F_base = 0.0;    // F(theta0, z0)
  double F_before = 0.0;  // F(theta_e, z_e)
  double F_after = 0.0;   // F(theta_e + d_theta, z_e + d_z)
  double delta_theta_norm = 0.0;
  double delta_z_norm = 0.0;
  double grad_diff_norm = 0.0;
  double cond_h_theta = 0.0;
  double cond_h_z = 0.0;
  double damping_used = 0.0;
  std::size_t param_count = 0;
  Point2 z0{};
  Point2 z_e{};
  bool delta_theta_zero = false;  // every component exactly 0
};

IftReport ift_recovery_check(const IftConfig& cfg, std::uint64_t seed);

}  // namespace lure
