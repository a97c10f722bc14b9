#include <cmath>
#include <limits>

#include "lure/core/errors.hpp"
#include "lure/core/linalg.hpp"
#include "lure/core/numdiff.hpp"
#include "lure/diagnostics/diagnostics.hpp"
#include "lure/diffusion/training.hpp"
#include "lure/erasure/erasure.hpp"

namespace lure {

void IftConfig::validate() const {
  if (!(radius > 0.0) || !(stdev > 0.0)) throw InvalidArgument("ift: radius and stdev must be positive");
  if (n_mc < 1 || zmin_restarts < 1) throw InvalidArgument("ift: n_mc and restarts must be positive");
  if (!(damping >= 0.0)) throw InvalidArgument("ift: damping must be non-negative");
  if (!(hessian_step > 0.0)) throw InvalidArgument("ift: hessian_step must be positive");
}

namespace {

constexpr int kConcept = 0;  // the erased concept of the two-concept world

// F as a function of the network weights (condition table held fixed) and z.
class MicroObjective {
 public:
  MicroObjective(const Denoiser& d, const Verifier& v, const NoiseSchedule& s, AlignmentDraws draws)
      : model_(d), v_(v), s_(s), draws_(std::move(draws)), offset_(d.params().layout()[0].size()) {}

  std::size_t param_count() const { return model_.params().size() - offset_; }

  std::vector<double> theta_of(const Denoiser& d) const {
    const auto all = d.params().values();
    return {all.begin() + static_cast<long>(offset_), all.end()};
  }

  double operator()(std::span<const double> theta, Point2 z) const {
    Denoiser d = model_;
    auto dst = d.params().values();
    std::copy(theta.begin(), theta.end(), dst.begin() + static_cast<long>(offset_));
    return alignment_F(v_, d, s_, kConcept, z, draws_);
  }

  // Joint vector (theta, z).
  double joint(std::span<const double> x) const {
    const std::size_t p = param_count();
    return (*this)(x.first(p), Point2{x[p], x[p + 1]});
  }

 private:
  Denoiser model_;
  const Verifier& v_;
  const NoiseSchedule& s_;
  AlignmentDraws draws_;
  std::size_t offset_;
};

struct ZMin {
  Point2 z{};
  double f = std::numeric_limits<double>::infinity();
};

// Gradient descent on z from the concept mean and from jittered restarts;
// the restart offsets come from `restarts` so repeated calls share them.
ZMin argmin_z(const MicroObjective& F, std::span<const double> theta, Point2 mean, double stdev,
              const IftConfig& cfg, SeededRng restarts) {
  ZMin best;
  for (std::size_t r = 0; r < cfg.zmin_restarts; ++r) {
    Point2 z = mean;
    if (r > 0) {
      z[0] += stdev * restarts.normal();
      z[1] += stdev * restarts.normal();
    }
    const VectorFn fz = [&](std::span<const double> p) { return F(theta, Point2{p[0], p[1]}); };
    for (std::size_t k = 0; k < cfg.zmin_steps; ++k) {
      const auto g = finite_diff_grad(fz, std::span<const double>(z.data(), 2));
      z[0] -= cfg.zmin_lr * g[0];
      z[1] -= cfg.zmin_lr * g[1];
    }
    const double f = F(theta, z);
    if (f < best.f) best = {z, f};
  }
  return best;
}

}  // namespace

IftReport ift_recovery_check(const IftConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const ConceptWorld world = default_world(2, cfg.radius, cfg.stdev, {kConcept}, seed);
  const NoiseSchedule s = make_schedule(cfg.time_steps, cfg.beta_start, cfg.beta_end);
  SeededRng root(seed, hash_string("ift"));

  TrainConfig tc;
  tc.steps = cfg.base_steps;
  tc.lr = cfg.base_lr;
  tc.batch = cfg.base_batch;
  tc.seed = root.split(0).next_u64();
  tc.time_embed_dim = cfg.time_embed_dim;
  tc.hidden = cfg.hidden;
  if (tc.hidden.size() != 1) throw InvalidArgument("ift: the micro model has one hidden layer");
  const Denoiser theta0_model = train_base(world, s, tc).model;

  LsisConfig vc;
  vc.train_steps = cfg.verifier_steps;
  vc.lr = cfg.verifier_lr;
  vc.hidden = cfg.verifier_hidden;
  vc.time_embed_dim = cfg.time_embed_dim;
  vc.max_train_t = 0;
  vc.heldout = 0;
  vc.seed = root.split(1).next_u64();
  const Verifier verifier = train_verifier(world, s, vc).verifier;

  Denoiser theta_e_model = theta0_model;
  if (!cfg.skip_erasure) {
    ErasureConfig ec{cfg.erase_gamma, cfg.erase_steps, cfg.erase_lr, cfg.erase_batch,
                     root.split(2).next_u64()};
    theta_e_model = erase_concepts(theta0_model, world, s, ec).model;
  }

  SeededRng draw_rng = root.split(3);
  const MicroObjective F(theta0_model, verifier, s, draw_alignment(cfg.n_mc, s.steps, draw_rng));
  IftReport rep;
  rep.param_count = F.param_count();
  if (rep.param_count > kMaxMicroParams)
    throw InvalidArgument("ift: micro model has " + std::to_string(rep.param_count) +
                          " parameters, limit is 64");
  rep.damping_used = cfg.damping;

  const auto th0 = F.theta_of(theta0_model);
  const auto the = F.theta_of(theta_e_model);
  const auto& spec = world.concept_spec(kConcept);
  const ZMin m0 = argmin_z(F, th0, spec.mean, spec.stdev, cfg, root.split(4));
  const ZMin me = argmin_z(F, the, spec.mean, spec.stdev, cfg, root.split(4));
  rep.z0 = m0.z;
  rep.z_e = me.z;
  rep.F_base = m0.f;
  rep.F_before = me.f;

  const std::size_t p = rep.param_count;
  std::vector<double> joint(the);
  joint.push_back(me.z[0]);
  joint.push_back(me.z[1]);
  const VectorFn fj = [&](std::span<const double> x) { return F.joint(x); };
  const RealArray H = finite_diff_hessian(fj, joint, cfg.hessian_step);

  RealArray h_theta = RealArray::matrix(p, p);
  RealArray h_z = RealArray::matrix(2, 2);
  RealArray h_ztheta = RealArray::matrix(2, p);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < p; ++j) h_theta(i, j) = H(i, j);
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 2; ++j) h_z(i, j) = H(p + i, p + j);
    for (std::size_t j = 0; j < p; ++j) h_ztheta(i, j) = H(p + i, j);
  }
  rep.cond_h_theta = condition_estimate(h_theta, cfg.damping);
  rep.cond_h_z = condition_estimate(h_z, cfg.damping);

  const auto grad_theta = [&](std::span<const double> theta, Point2 z) {
    const VectorFn f = [&](std::span<const double> t) { return F(t, z); };
    return finite_diff_grad(f, theta);
  };
  const auto g0 = grad_theta(th0, m0.z);
  const auto ge = grad_theta(the, me.z);
  RealArray diff = RealArray::matrix(p, 1);
  for (std::size_t i = 0; i < p; ++i) diff[i] = g0[i] - ge[i];
  rep.grad_diff_norm = l2_norm(diff.values());

  RealArray d_theta, d_z;
  try {
    d_theta = damped_solve(h_theta, cfg.damping, diff);
    RealArray coupling = RealArray::matrix(2, 1);
    for (std::size_t i = 0; i < 2; ++i)
      for (std::size_t j = 0; j < p; ++j) coupling[i] += h_ztheta(i, j) * d_theta[j];
    d_z = damped_solve(h_z, cfg.damping, coupling);
  } catch (const NumericFailure& e) {
    throw NumericFailure(std::string(e.what()) + " (cond H_theta " + std::to_string(rep.cond_h_theta) +
                         ", cond H_z " + std::to_string(rep.cond_h_z) + ")");
  }
  for (double& v : d_z.values()) v = -v;
  rep.delta_theta_norm = l2_norm(d_theta.values());
  rep.delta_z_norm = l2_norm(d_z.values());
  rep.delta_theta_zero = true;
  for (double v : d_theta.values()) rep.delta_theta_zero = rep.delta_theta_zero && v == 0.0;

  std::vector<double> theta_new(the);
  for (std::size_t i = 0; i < p; ++i) theta_new[i] += d_theta[i];
  rep.F_after = F(theta_new, Point2{me.z[0] + d_z[0], me.z[1] + d_z[1]});
  if (!std::isfinite(rep.F_after) || !std::isfinite(rep.F_before))
    throw NumericFailure("ift: non-finite alignment value");
  return rep;
}

}  // namespace lure
