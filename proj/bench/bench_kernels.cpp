// Serial reference vs OpenMP kernels. Arg 0 = serial, 1 = parallel.
#include <benchmark/benchmark.h>

#include "lure/core/numdiff.hpp"
#include "lure/diffusion/sampler.hpp"
#include "lure/kernels/pairwise.hpp"
#include "lure/world/concept_world.hpp"

using namespace lure;

namespace {

Exec policy(const benchmark::State& st) { return st.range(0) ? Exec::parallel : Exec::serial; }

const ConceptWorld& world() {
  static const ConceptWorld w = default_world(8, 4.0, 0.3, {}, 0);
  return w;
}

Denoiser make_denoiser(int T) {
  SeededRng r(1);
  Denoiser d = Denoiser::create({8, world().embed_dim(), 8, {64, 64}, T}, world().embeddings(), r);
  for (double& v : d.params().values()) v += 0.05 * r.normal();
  return d;
}

void BM_Mmd2(benchmark::State& st) {
  SeededRng r(2);
  const auto a = sample_concept_data(world(), 0, 2000, r);
  const auto b = sample_concept_data(world(), 1, 2000, r);
  for (auto _ : st) benchmark::DoNotOptimize(mmd2_with(a, b, 1.0, policy(st)));
}

void BM_SampleMany(benchmark::State& st) {
  const auto s = make_schedule(100, 1e-4, 0.02);
  const Denoiser d = make_denoiser(100);
  const SeededRng base(3);
  for (auto _ : st) benchmark::DoNotOptimize(sample_many(d, s, 2, 200, base, policy(st)));
}

void BM_FiniteDiffGrad(benchmark::State& st) {
  const auto s = make_schedule(100, 1e-4, 0.02);
  const Denoiser d = make_denoiser(100);
  SeededRng r(4);
  const auto batch = draw_noise_batch(world(), s, 1, 16, r);
  const auto loss = recon_loss_fn(d, s, world(), 1, batch);
  for (auto _ : st)
    benchmark::DoNotOptimize(st.range(0) ? finite_diff_grad(loss, d.params())
                                         : finite_diff_grad_serial(loss, d.params()));
}

}  // namespace

BENCHMARK(BM_Mmd2)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SampleMany)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FiniteDiffGrad)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
