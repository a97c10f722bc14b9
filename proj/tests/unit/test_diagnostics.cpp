#include <doctest.h>

#include <cmath>
#include <numbers>

#include "lure/core/errors.hpp"
#include "lure/core/linalg.hpp"
#include "lure/diagnostics/diagnostics.hpp"

using namespace lure;

namespace {

Denoiser noisy(const ConceptWorld& w, int T, std::uint64_t seed = 3) {
  SeededRng r(seed);
  Denoiser d = Denoiser::create({w.num_concepts(), w.embed_dim(), 4, {8}, T}, w.embeddings(), r);
  for (double& v : d.params().values()) v += 0.2 * r.normal();
  return d;
}

}  // namespace

TEST_CASE("alignment F: uniform and certain verifiers") {
  const auto w = default_world(8, 4.0, 0.3, {0}, 0);
  const auto s = make_schedule(20, 1e-3, 0.1);
  const Denoiser d = noisy(w, 20);
  SeededRng r(1);
  Verifier v = Verifier::create({8, 4, {8}, 20}, r);
  const auto draws = draw_alignment(32, 20, r);
  for (int c : {0, 5})
    CHECK(std::abs(alignment_F(v, d, s, c, {0.3, -1.0}, draws) - std::log(8.0)) <= 1e-9);

  v.params().segment(bias_name(1))[5] = 1000.0;
  CHECK(alignment_F(v, d, s, 5, {0.3, -1.0}, draws) == doctest::Approx(0.0).epsilon(1e-12));
  // Log floor keeps an impossible concept finite.
  const double f = alignment_F(v, d, s, 2, {0.3, -1.0}, draws);
  CHECK(std::isfinite(f));
  CHECK(f == doctest::Approx(-kLogProbFloor));

  SeededRng a(4), b(4);
  CHECK(alignment_F(v, d, s, 1, {1, 1}, 16, a) == alignment_F(v, d, s, 1, {1, 1}, 16, b));
  CHECK_THROWS_AS(alignment_F(v, d, s, 8, {1, 1}, draws), InvalidArgument);
}

TEST_CASE("gradient cosine: hand values and degeneracy") {
  const std::vector<double> a{1, 1}, b{1, 0}, z{0, 0};
  CHECK(gradient_cosine(a, b).rho == doctest::Approx(1 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK(gradient_cosine(a, a).rho == doctest::Approx(1.0));
  CHECK(gradient_cosine(a, z).degenerate);
  CHECK(gradient_cosine(a, z).rho == 0.0);

  ParamVector p;
  p.add_segment("x", {2});
  p[0] = 0.5;
  p[1] = -0.25;
  const LossFn li = [](ad::Graph& g, const ParamBinding& pb) { return g.sum(pb[0]); };
  const LossFn lj = [](ad::Graph& g, const ParamBinding& pb) {
    return g.sum(g.mul(pb[0], g.constant(RealArray::vector({1.0, 0.0}))));
  };
  CHECK(gradient_alignment(li, lj, p).rho == doctest::Approx(0.70711).epsilon(1e-5));
  const LossFn flat = [](ad::Graph& g, const ParamBinding&) { return g.sum(g.constant(RealArray::vector({1.0}))); };
  CHECK(gradient_alignment(li, flat, p).degenerate);
}

TEST_CASE("rho matrix: unit diagonal, symmetric, bounded") {
  const auto w = default_world(4, 2.0, 0.3, {0}, 0);
  const auto s = make_schedule(20, 1e-3, 0.1);
  const Denoiser d = noisy(w, 20);
  SeededRng r(2);
  const auto m = rho_matrix(d, w, s, {16}, r);
  for (int i = 0; i < 4; ++i) {
    CHECK(std::abs(m.entries(i, i) - 1.0) <= 1e-6);
    CHECK_FALSE(m.degenerate[i]);
    for (int j = 0; j < 4; ++j) {
      CHECK(m.entries(i, j) == m.entries(j, i));
      CHECK(std::abs(m.entries(i, j)) <= 1.0 + 1e-12);
    }
  }
  SeededRng r1(9), r2(9);
  CHECK(gradient_alignment(d, w, s, 1, 1, {16}, r1).rho == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(gradient_alignment(d, w, s, 0, 2, {16}, r2).rho == doctest::Approx(m.entries(0, 2)).epsilon(0.5));
}

TEST_CASE("entanglement: orthogonal and identical predictions") {
  FeatureBatch fb;
  fb.latents = {{{0, 0}, 1}, {{1, 1}, 2}};
  fb.predictions.assign(3, RealArray::matrix(2, 2));
  fb.predictions[0](0, 0) = 1;
  fb.predictions[0](1, 0) = 2;
  fb.predictions[1](0, 1) = 3;
  fb.predictions[1](1, 1) = -1;
  fb.predictions[2] = fb.predictions[0];
  const auto m = entanglement_from_features(fb);
  CHECK(m(0, 1) == 0.0);
  CHECK(m(0, 2) == doctest::Approx(1.0));
  CHECK(m(1, 0) == m(0, 1));
  const std::vector<int> ids{0, 1, 2};
  CHECK(mean_pair_entanglement(m, ids) == doctest::Approx(1.0 / 3.0));
  const std::vector<int> one{1};
  CHECK(mean_pair_entanglement(m, one) == 0.0);

  const auto w = default_world(3, 2.0, 0.3, {0}, 0);
  const auto s = make_schedule(20, 1e-3, 0.1);
  SeededRng r(3);
  const auto lat = draw_latent_batch(w, s, 20, r);
  const auto e = entanglement_report(noisy(w, 20), w, lat);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      CHECK(e(i, j) >= 0.0);
      CHECK(e(i, j) <= 1.0 + 1e-12);
    }
}

TEST_CASE("damped solve: identity passes the gradient through") {
  const RealArray g = RealArray::vector({0.5, -2.0, 3.0});
  const auto x = damped_solve(RealArray::identity(3), 0.0, g);
  for (int i = 0; i < 3; ++i) CHECK(x[i] == doctest::Approx(g[i]).epsilon(1e-14));
}

TEST_CASE("ift: skipping erasure gives a zero step; runs are reproducible") {
  IftConfig cfg;
  cfg.base_steps = 300;
  cfg.verifier_steps = 200;
  cfg.erase_steps = 100;
  cfg.zmin_steps = 50;
  cfg.n_mc = 16;
  cfg.skip_erasure = true;
  const auto a = ift_recovery_check(cfg, 1);
  CHECK(a.delta_theta_zero);
  CHECK(a.delta_theta_norm == 0.0);
  CHECK(a.F_after == a.F_before);
  CHECK(a.param_count <= kMaxMicroParams);

  cfg.skip_erasure = false;
  const auto b = ift_recovery_check(cfg, 2);
  const auto c = ift_recovery_check(cfg, 2);
  CHECK(b.F_after == c.F_after);
  CHECK(b.delta_theta_norm > 0.0);
  CHECK(std::isfinite(b.cond_h_theta));

  cfg.hidden = {64};
  CHECK_THROWS_AS(ift_recovery_check(cfg, 1), InvalidArgument);
}
