#include <doctest.h>

#include <cmath>

#include "lure/core/errors.hpp"
#include "lure/diffusion/sampler.hpp"
#include "lure/lsis/lsis.hpp"
#include "lure/world/oracle.hpp"

using namespace lure;

namespace {

Verifier zero_verifier(std::size_t d, int T = 20) {
  SeededRng r(1);
  return Verifier::create({d, 4, {8}, T}, r);
}

// Output bias pushes `favourite` to the top everywhere.
Verifier biased_verifier(std::size_t d, std::size_t favourite, int T = 20) {
  Verifier v = zero_verifier(d, T);
  auto bias = v.params().segment(bias_name(1));
  bias[favourite] = 50.0;
  return v;
}

Denoiser noisy(const ConceptWorld& w, int T) {
  SeededRng r(3);
  Denoiser d = Denoiser::create({w.num_concepts(), w.embed_dim(), 4, {8}, T}, w.embeddings(), r);
  for (double& v : d.params().values()) v += 0.1 * r.normal();
  return d;
}

}  // namespace

TEST_CASE("verify: zero logits give a uniform posterior") {
  const Verifier v = zero_verifier(8);
  SeededRng r(2);
  for (int k = 0; k < 20; ++k) {
    const auto p = verify(v, {r.normal() * 3, r.normal() * 3}, static_cast<int>(r.uniform_int(0, 20)));
    double sum = 0;
    for (double x : p) {
      CHECK(x == doctest::Approx(0.125).epsilon(1e-15));
      CHECK(x >= 0.0);
      sum += x;
    }
    CHECK(std::abs(sum - 1.0) < 1e-12);
  }
  CHECK_THROWS_AS(verify(v, {std::nan(""), 0}, 0), InvalidArgument);
}

TEST_CASE("lsis: single-concept world accepts the first attempt") {
  RealArray emb = RealArray::matrix(2, 2);
  emb(0, 0) = 1;
  const ConceptWorld w({{0, {0.0, 0.0}, 0.5, "only"}}, {}, emb);
  const auto s = make_schedule(20, 1e-3, 0.1);
  const Denoiser d = noisy(w, 20);
  const Verifier v = zero_verifier(1);
  LsisConfig cfg;
  SeededRng r(4);
  const auto out = lsis_sample(d, v, s, 0, cfg, r);
  CHECK(out.accepted);
  CHECK(out.attempts == 1);
}

TEST_CASE("lsis: a verifier that never picks the target exhausts retries") {
  const auto w = default_world(3, 2.0, 0.3, {}, 0);
  const auto s = make_schedule(20, 1e-3, 0.1);
  const Denoiser d = noisy(w, 20);
  const Verifier v = biased_verifier(3, 2);
  LsisConfig cfg;
  cfg.max_retries = 4;
  SeededRng r(5);
  const auto out = lsis_sample(d, v, s, 0, cfg, r);
  CHECK_FALSE(out.accepted);
  CHECK(out.attempts == 4);
  CHECK(std::isfinite(out.sample[0]));
}

TEST_CASE("lsis: one retry with an accepting verifier reproduces ddpm_sample") {
  const auto w = default_world(3, 2.0, 0.3, {}, 0);
  const auto s = make_schedule(20, 1e-3, 0.1);
  const Denoiser d = noisy(w, 20);
  const Verifier v = biased_verifier(3, 1);
  LsisConfig cfg;
  cfg.max_retries = 1;
  cfg.check_timesteps = {0, 10, 20};
  SeededRng a(7, 1), b(7, 1);
  const auto out = lsis_sample(d, v, s, 1, cfg, a);
  CHECK(out.accepted);
  CHECK(out.sample == ddpm_sample(d, s, d.embedding_row(1), b).z0);

  const SeededRng base(8);
  const auto many = lsis_sample_many(d, v, s, 1, 12, cfg, base, Exec::parallel);
  const auto plain = sample_many(d, s, 1, 12, base, Exec::serial);
  for (std::size_t i = 0; i < 12; ++i) CHECK(many[i].sample == plain[i]);
  CHECK(lsis_sample_many(d, v, s, 1, 12, cfg, base, Exec::serial)[5].sample == many[5].sample);
}

TEST_CASE("lsis: config validation") {
  LsisConfig cfg;
  cfg.check_timesteps = {5};
  CHECK_THROWS_AS(cfg.validate(20), InvalidArgument);
  cfg.check_timesteps = {0, 21};
  CHECK_THROWS_AS(cfg.validate(20), InvalidArgument);
  cfg.check_timesteps = {0};
  cfg.max_retries = 0;
  CHECK_THROWS_AS(cfg.validate(20), InvalidArgument);
}

TEST_CASE("train_verifier: deterministic, accepted samples obey the rule") {
  const auto w = default_world(4, 3.0, 0.3, {}, 0);
  const auto s = make_schedule(20, 1e-3, 0.1);
  LsisConfig cfg;
  cfg.train_steps = 150;
  cfg.batch = 64;
  cfg.lr = 1e-2;
  cfg.hidden = {16};
  cfg.heldout = 400;
  cfg.seed = 3;
  const auto a = train_verifier(w, s, cfg);
  const auto b = train_verifier(w, s, cfg);
  CHECK(a.verifier.params() == b.verifier.params());
  CHECK(a.heldout_accuracy > 0.9);
  for (int c = 0; c < 4; ++c) CHECK(argmax_lowest(verify(a.verifier, w.concept_spec(c).mean, 0)) == c);

  const Denoiser d = noisy(w, 20);
  cfg.max_retries = 3;
  const auto outs = lsis_sample_many(d, a.verifier, s, 2, 40, cfg, SeededRng(9));
  for (const auto& o : outs) {
    CHECK(o.attempts >= 1);
    CHECK(o.attempts <= 3);
    if (o.accepted) CHECK(argmax_lowest(verify(a.verifier, o.sample, 0)) == 2);
  }

  const auto ck = verifier_checkpoint(a.verifier, world_hash(w));
  const auto back = verifier_from_checkpoint(parse_checkpoint(serialize_checkpoint(ck)));
  CHECK(back.params() == a.verifier.params());
  CHECK(back.arch() == a.verifier.arch());
}
