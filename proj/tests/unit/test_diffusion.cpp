#include <doctest.h>

#include <cmath>

#include "lure/core/errors.hpp"
#include "lure/diffusion/checkpoint.hpp"
#include "lure/diffusion/sampler.hpp"
#include "lure/diffusion/training.hpp"

using namespace lure;

TEST_CASE("schedule: hand products and monotonicity") {
  const auto s = make_schedule(4, 0.1, 0.4);
  const double expect[] = {0.9, 0.72, 0.504, 0.3024};
  for (int t = 1; t <= 4; ++t) CHECK(std::abs(s.alpha_bar_at(t) - expect[t - 1]) < 1e-12);
  CHECK(make_schedule(1000, 1e-4, 0.02).alpha_bar_at(1) == doctest::Approx(0.9999).epsilon(1e-15));
  const auto d = make_schedule(100, 1e-4, 0.02);
  for (int t = 2; t <= 100; ++t) {
    CHECK(d.alpha_bar_at(t) < d.alpha_bar_at(t - 1));
    CHECK(d.alpha_bar_at(t) == d.alpha_bar_at(t - 1) * d.alpha_at(t));
  }
  CHECK(d.beta_at(1) == 1e-4);
  CHECK(d.beta_at(100) == doctest::Approx(0.02).epsilon(1e-14));
  CHECK_THROWS_AS(make_schedule(0, 0.1, 0.2), InvalidArgument);
  CHECK_THROWS_AS(make_schedule(10, 0.3, 0.2), InvalidArgument);
  CHECK_THROWS_AS(make_schedule(10, 0.1, 1.0), InvalidArgument);
}

TEST_CASE("forward noise: hand values and range") {
  const auto s = make_schedule(1, 0.36, 0.36);  // abar = 0.64
  const auto a = forward_noise(s, {1, 1}, 1, {0, 0});
  CHECK(a[0] == doctest::Approx(0.8));
  CHECK(a[1] == doctest::Approx(0.8));
  const auto b = forward_noise(s, {0, 0}, 1, {1, -1});
  CHECK(b[0] == doctest::Approx(0.6));
  CHECK(b[1] == doctest::Approx(-0.6));
  const auto tiny = make_schedule(1, 1e-12, 1e-12);
  const auto c = forward_noise(tiny, {2, -3}, 1, {0, 0});
  CHECK(c[0] == std::sqrt(tiny.alpha_bar_at(1)) * 2);
  CHECK_THROWS_AS(forward_noise(s, {0, 0}, 0, {0, 0}), InvalidArgument);
  CHECK_THROWS_AS(forward_noise(s, {0, 0}, 2, {0, 0}), InvalidArgument);
}

TEST_CASE("forward noise: empirical marginal") {
  const auto s = make_schedule(100, 1e-4, 0.02);
  const Point2 z0{1.5, -2.0};
  const int t = 40;
  SeededRng r(6);
  const int n = 100000;
  double m0 = 0, m1 = 0, c00 = 0, c11 = 0, c01 = 0;
  std::vector<Point2> xs(n);
  for (auto& x : xs) {
    x = forward_noise(s, z0, t, {r.normal(), r.normal()});
    m0 += x[0];
    m1 += x[1];
  }
  m0 /= n;
  m1 /= n;
  for (const auto& x : xs) {
    c00 += (x[0] - m0) * (x[0] - m0);
    c11 += (x[1] - m1) * (x[1] - m1);
    c01 += (x[0] - m0) * (x[1] - m1);
  }
  const double sa = std::sqrt(s.alpha_bar_at(t)), var = 1 - s.alpha_bar_at(t);
  CHECK(std::abs(m0 - sa * z0[0]) < 0.01);
  CHECK(std::abs(m1 - sa * z0[1]) < 0.01);
  CHECK(std::abs(c00 / n - var) < 0.02);
  CHECK(std::abs(c11 / n - var) < 0.02);
  CHECK(std::abs(c01 / n) < 0.02);
}

namespace {

Denoiser small_denoiser(const ConceptWorld& w, std::uint64_t seed, int T = 100) {
  SeededRng r(seed);
  return Denoiser::create({w.num_concepts(), w.embed_dim(), 4, {8, 8}, T}, w.embeddings(), r);
}

}  // namespace

TEST_CASE("denoiser: zero output layer, purity, continuity") {
  const auto w = default_world(4, 2.0, 0.3, {}, 0);
  Denoiser d = small_denoiser(w, 1);
  for (int t : {1, 50, 100}) {
    const auto y = denoise_predict(d, {0.3, -2.0}, t, d.embedding_row(2));
    CHECK(y[0] == 0.0);
    CHECK(y[1] == 0.0);
  }
  SeededRng r(2);
  for (double& v : d.params().values()) v += 0.2 * r.normal();
  const auto a = d.predict({0.1, 0.2}, 7, 1);
  CHECK(a == d.predict({0.1, 0.2}, 7, 1));
  double prev = 1e9;
  for (double delta : {1e-1, 1e-3, 1e-5, 1e-7}) {
    Denoiser e = d;
    e.params()[e.params().size() - 5] += delta;
    const auto b = e.predict({0.1, 0.2}, 7, 1);
    const double change = std::hypot(b[0] - a[0], b[1] - a[1]);
    CHECK(change <= prev);
    prev = change;
  }
  CHECK(prev < 1e-6);
  CHECK_THROWS_AS(d.predict({std::nan(""), 0.0}, 1, 0), InvalidArgument);
  CHECK_THROWS_AS(d.predict({0.0, 0.0}, 101, 0), InvalidArgument);
  CHECK_THROWS_AS(d.predict({0.0, 0.0}, 1, std::vector<double>(3)), InvalidArgument);
}

TEST_CASE("recon loss: zero output gives mean |eps|^2, loss is non-negative") {
  const auto w = default_world(4, 2.0, 0.3, {}, 0);
  const auto s = make_schedule(100, 1e-4, 0.02);
  const Denoiser d = small_denoiser(w, 1);
  SeededRng r(3);
  const auto batch = draw_noise_batch(w, s, 1, 9, r);
  double expect = 0;
  for (const auto& b : batch) expect += b.eps[0] * b.eps[0] + b.eps[1] * b.eps[1];
  CHECK(recon_loss(d, s, w, 1, batch) == doctest::Approx(expect / 9).epsilon(1e-14));

  Denoiser e = d;
  for (double& v : e.params().values()) v += 0.5 * r.normal();
  CHECK(recon_loss(e, s, w, 1, batch) >= 0.0);
}

TEST_CASE("train_base: rejects zero steps, deterministic, loss curve") {
  const auto w = default_world(3, 2.0, 0.3, {}, 0);
  const auto s = make_schedule(20, 1e-3, 0.1);
  TrainConfig cfg;
  cfg.steps = 0;
  CHECK_THROWS_AS(train_base(w, s, cfg), InvalidArgument);
  cfg.steps = 30;
  cfg.batch = 16;
  cfg.hidden = {8, 8};
  cfg.seed = 5;
  const auto a = train_base(w, s, cfg);
  const auto b = train_base(w, s, cfg);
  CHECK(a.model.params() == b.model.params());
  CHECK(a.curve.size() == 30);
  CHECK(a.curve.back().running == a.final_running_loss);
  cfg.seed = 6;
  CHECK_FALSE(train_base(w, s, cfg).model.params() == a.model.params());
}

TEST_CASE("ddpm: one-step hand inversion") {
  const auto s = make_schedule(1, 0.36, 0.36);
  SeededRng r(0);
  const auto res = ddpm_sample_from([](Point2, int) { return Point2{0.5, -0.5}; }, s, {1.1, 0.5}, r);
  CHECK(res.z0[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(res.z0[1] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(res.trajectory.size() == 2);
}

TEST_CASE("ddpm: deterministic trajectory, non-finite state raises") {
  const auto w = default_world(3, 2.0, 0.3, {}, 0);
  const auto s = make_schedule(50, 1e-4, 0.02);
  Denoiser d = small_denoiser(w, 4, 50);
  SeededRng p(1);
  for (double& v : d.params().values()) v += 0.1 * p.normal();
  SeededRng a(9), b(9);
  const auto x = ddpm_sample(d, s, d.embedding_row(0), a);
  const auto y = ddpm_sample(d, s, d.embedding_row(0), b);
  CHECK(x.trajectory == y.trajectory);
  CHECK(x.trajectory.size() == 51);
  SeededRng c(1);
  CHECK_THROWS_AS(ddpm_sample_from([](Point2 z, int) { return Point2{1e200 * (z[0] + 1), 1e200 * (z[1] + 1)}; }, s, {0, 0}, c),
                  NumericFailure);
}

TEST_CASE("sample_many: parallel equals serial equals per-stream ddpm") {
  const auto w = default_world(3, 2.0, 0.3, {}, 0);
  const auto s = make_schedule(30, 1e-4, 0.05);
  Denoiser d = small_denoiser(w, 4, 30);
  SeededRng p(1);
  for (double& v : d.params().values()) v += 0.1 * p.normal();
  const SeededRng base(21, 3);
  const auto ser = sample_many(d, s, 1, 40, base, Exec::serial);
  const auto par = sample_many(d, s, 1, 40, base, Exec::parallel);
  CHECK(ser == par);
  SeededRng r7 = base.split(7);
  CHECK(ddpm_sample(d, s, d.embedding_row(1), r7).z0 == ser[7]);
}

TEST_CASE("checkpoint: bit-exact round trip and kind checks") {
  const auto w = default_world(4, 2.0, 0.3, {1}, 3);
  const auto s = make_schedule(100, 1e-4, 0.02);
  Denoiser d = small_denoiser(w, 4);
  SeededRng p(1);
  for (double& v : d.params().values()) v = p.normal() * std::pow(10.0, p.uniform_int(-12, 5));
  const auto ck = denoiser_checkpoint(d, s, world_hash(w));
  const auto text = serialize_checkpoint(ck);
  const auto back = denoiser_from_checkpoint(parse_checkpoint(text));
  CHECK(back.model.params() == d.params());
  CHECK(back.model.arch() == d.arch());
  CHECK(back.schedule.alpha_bar == s.alpha_bar);
  CHECK(back.world_hash == world_hash(w));
  CHECK(serialize_checkpoint(parse_checkpoint(text)) == text);
  CHECK_THROWS(parse_checkpoint("lure-checkpoint 99\n"));
  auto other = ck;
  other.kind = "verifier";
  CHECK_THROWS_AS(denoiser_from_checkpoint(other), InvalidArgument);
}
