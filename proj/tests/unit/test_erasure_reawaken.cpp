#include <doctest.h>

#include <cmath>

#include "lure/core/errors.hpp"
#include "lure/core/numdiff.hpp"
#include "lure/erasure/erasure.hpp"
#include "lure/reawaken/lure.hpp"

using namespace lure;

namespace {

// Small random (not trained) denoiser with a non-zero output layer.
Denoiser noisy_denoiser(const ConceptWorld& w, std::uint64_t seed, int T) {
  SeededRng r(seed);
  Denoiser d = Denoiser::create({w.num_concepts(), w.embed_dim(), 4, {8, 8}, T}, w.embeddings(), r);
  const std::size_t emb = d.params().layout()[0].size();
  auto v = d.params().values();
  for (std::size_t i = emb; i < v.size(); ++i) v[i] += 0.3 * r.normal();
  return d;
}

std::span<const double> embedding(const Denoiser& d) { return d.params().segment(kEmbeddingSegment); }

}  // namespace

TEST_CASE("erasure: empty erased set leaves parameters unchanged") {
  const auto w = default_world(3, 2.0, 0.3, {}, 0);
  const auto s = make_schedule(20, 1e-3, 0.1);
  const Denoiser base = noisy_denoiser(w, 1, 20);
  ErasureConfig cfg{1.0, 25, 1e-2, 8, 3};
  const auto out = erase_concepts(base, w, s, cfg);
  for (std::size_t i = 0; i < base.params().size(); ++i)
    CHECK(std::abs(out.model.params()[i] - base.params()[i]) <= 1e-9);
}

TEST_CASE("erasure: embedding table frozen, gamma ordering, determinism") {
  const auto w = default_world(3, 2.0, 0.3, {1}, 0);
  const auto s = make_schedule(20, 1e-3, 0.1);
  const Denoiser base = noisy_denoiser(w, 2, 20);
  double prev = 1e300;
  for (double gamma : {1e-3, 1.0, 1e3}) {
    ErasureConfig cfg{gamma, 60, 1e-2, 16, 4};
    const auto out = erase_concepts(base, w, s, cfg);
    CHECK(std::equal(embedding(out.model).begin(), embedding(out.model).end(), embedding(base).begin()));
    const double dist = l2_distance(out.model.params(), base.params());
    CHECK(dist <= prev);
    prev = dist;
  }
  ErasureConfig lo{1e-3, 60, 1e-2, 16, 4}, hi{1e3, 60, 1e-2, 16, 4};
  CHECK(l2_distance(erase_concepts(base, w, s, hi).model.params(), base.params()) <
        l2_distance(erase_concepts(base, w, s, lo).model.params(), base.params()));
  CHECK(erase_concepts(base, w, s, lo).model.params() == erase_concepts(base, w, s, lo).model.params());
  ErasureConfig bad{-1.0, 1, 1e-2, 1, 0};
  CHECK_THROWS_AS(erase_concepts(base, w, s, bad), InvalidArgument);
}

TEST_CASE("erasure report: identical checkpoints give identical rows") {
  const auto w = default_world(3, 2.0, 0.3, {0}, 0);
  const auto s = make_schedule(20, 1e-3, 0.1);
  const Denoiser base = noisy_denoiser(w, 2, 20);
  const SeededRng rng(5);
  const auto rep = erasure_report(base, base, w, s, 30, rng);
  CHECK(rep.param_distance == 0.0);
  for (const auto& row : rep.rows) {
    CHECK(row.base_accuracy == row.erased_accuracy);
    CHECK(row.base_mmd2 == row.erased_mmd2);
  }
  CHECK(rep.rows[0].erased);
  CHECK_FALSE(rep.rows[1].erased);
  const auto again = erasure_report(base, base, w, s, 30, rng);
  CHECK(again.rows[2].base_mmd2 == rep.rows[2].base_mmd2);
  CHECK_THROWS_AS(erasure_report(base, base, w, s, 0, rng), InvalidArgument);
}

TEST_CASE("bind loss: zero output reduces to mean |eps|^2, pure") {
  const auto w = default_world(3, 2.0, 0.3, {1}, 0);
  const auto s = make_schedule(20, 1e-3, 0.1);
  SeededRng r(1);
  const Denoiser zero = Denoiser::create({3, w.embed_dim(), 4, {8}, 20}, w.embeddings(), r);
  const auto ex = make_exemplars(w, 1, 3, r);
  std::vector<ExemplarDraw> batch;
  double expect = 0;
  for (int i = 0; i < 7; ++i) {
    batch.push_back({static_cast<std::size_t>(i % 3), 1 + i, {r.normal(), r.normal()}});
    expect += batch.back().eps[0] * batch.back().eps[0] + batch.back().eps[1] * batch.back().eps[1];
  }
  CHECK(bind_loss(zero, s, ex, w, batch) == doctest::Approx(expect / 7).epsilon(1e-14));
  const Denoiser d = noisy_denoiser(w, 3, 20);
  CHECK(bind_loss(d, s, ex, w, batch) == bind_loss(d, s, ex, w, batch));
  batch[0].index = 3;
  CHECK_THROWS_AS(bind_loss(d, s, ex, w, batch), InvalidArgument);
}

namespace {

double orth_of(std::vector<std::vector<Point2>> vs, std::vector<int> erased, double xi) {
  ad::Graph g;
  std::vector<ad::Var> v;
  for (const auto& rows : vs) {
    RealArray m = RealArray::matrix(rows.size(), 2);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      m(r, 0) = rows[r][0];
      m(r, 1) = rows[r][1];
    }
    v.push_back(g.constant(std::move(m)));
  }
  return orth_terms(g, v, erased, xi).scalar();
}

}  // namespace

TEST_CASE("orth terms: hand cosines") {
  CHECK(orth_of({{{1, 0}}, {{0, 1}}}, {0}, 1e-8) == 0.0);
  CHECK(orth_of({{{1, 0}}, {{1, 0}}}, {0}, 1e-12) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(std::abs(orth_of({{{1, 0}}, {{1, 1}}}, {0}, 1e-8) - 1 / std::sqrt(2.0)) < 1e-6);
  // Two erased branches both count the pair; the self pair never does.
  CHECK(orth_of({{{1, 0}}, {{1, 0}}}, {0, 1}, 1e-12) == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(orth_of({{{1, 0}}, {{0, 1}}}, {}, 1e-8) == 0.0);
  CHECK_THROWS_AS(orth_of({{{1, 0}}}, {0}, 0.0), InvalidArgument);
}

TEST_CASE("orth terms: invariant to positive rescaling") {
  SeededRng r(2);
  std::vector<std::vector<Point2>> v(3, std::vector<Point2>(5));
  for (auto& rows : v)
    for (auto& p : rows) p = {r.normal(), r.normal()};
  const double base = orth_of(v, {0, 2}, 1e-12);
  for (double c : {0.5, 2.0, 10.0}) {
    auto scaled = v;
    for (auto& p : scaled[1]) p = {c * p[0], c * p[1]};
    CHECK(std::abs(orth_of(scaled, {0, 2}, 1e-12) - base) < 1e-6);
  }
}

TEST_CASE("orth loss: bounds and gradient") {
  const auto w = default_world(4, 2.0, 0.3, {0, 2}, 0);
  const auto s = make_schedule(20, 1e-3, 0.1);
  const Denoiser d = noisy_denoiser(w, 5, 20);
  SeededRng r(3);
  std::vector<LatentDraw> lat;
  for (int i = 0; i < 6; ++i) lat.push_back({{r.normal() * 2, r.normal() * 2}, 1 + i * 3});
  const double o = orth_loss(d, w, lat, 1e-8);
  CHECK(o >= 0.0);
  CHECK(o < 2 * 3);  // M * (D - 1) pair terms, each below 1
  const LossFn f = [&](ad::Graph& g, const ParamBinding& p) { return orth_loss(g, d, p, w, lat, 1e-8); };
  const auto ga = grad(f, d.params());
  const auto gf = finite_diff_grad(f, d.params());
  for (std::size_t i = 0; i < ga.size(); ++i)
    if (std::abs(gf[i]) > 1e-6) CHECK(std::abs(ga[i] - gf[i]) / std::abs(gf[i]) < 1e-4);
}

TEST_CASE("lure: empty erased set, id checks, reproducibility, additivity") {
  const auto s = make_schedule(20, 1e-3, 0.1);
  const auto none = default_world(3, 2.0, 0.3, {}, 0);
  const Denoiser d0 = noisy_denoiser(none, 4, 20);
  LureConfig cfg;
  cfg.steps = 20;
  cfg.lr = 1e-2;
  CHECK(lure_finetune(d0, {}, none, s, cfg).model.params() == d0.params());

  const auto w = default_world(3, 2.0, 0.3, {0, 2}, 0);
  const Denoiser d = noisy_denoiser(w, 4, 20);
  SeededRng r(6);
  std::vector<ExemplarSet> ex = {make_exemplars(w, 0, 3, r), make_exemplars(w, 2, 3, r)};
  auto wrong = ex;
  wrong[1].concept_id = 1;
  CHECK_THROWS_AS(lure_finetune(d, wrong, w, s, cfg), InvalidArgument);
  CHECK_THROWS_AS(lure_finetune(d, {ex[0]}, w, s, cfg), InvalidArgument);

  const auto a = lure_finetune(d, ex, w, s, cfg);
  const auto b = lure_finetune(d, ex, w, s, cfg);
  CHECK(a.model.params() == b.model.params());
  CHECK(a.trace.size() == 20);
  for (const auto& st : a.trace) CHECK(std::abs(st.total - (st.bind_total + cfg.lambda * st.orth)) <= 1e-12);
  CHECK(std::equal(embedding(a.model).begin(), embedding(a.model).end(), embedding(d).begin()));
  CHECK_FALSE(a.model.params() == d.params());
}

TEST_CASE("feature batch: shared latents for every branch") {
  const auto w = default_world(3, 2.0, 0.3, {1}, 0);
  const Denoiser d = noisy_denoiser(w, 4, 20);
  const std::vector<LatentDraw> lat = {{{0.1, 0.2}, 3}, {{-1.0, 0.5}, 9}};
  const auto fb = compute_features(d, w, lat);
  CHECK(fb.predictions.size() == 3);
  const auto y = d.predict(lat[1].z, lat[1].t, 2);
  CHECK(fb.predictions[2](1, 0) == y[0]);
  CHECK(fb.predictions[2](1, 1) == y[1]);
}
