#include "lure/diffusion/denoiser.hpp"

#include <cmath>

#include "lure/core/errors.hpp"

namespace lure {

Denoiser::Denoiser(DenoiserArch arch, ParamVector params)
    : arch_(std::move(arch)), params_(std::move(params)) {
  const auto mlp = arch_.mlp();
  if (arch_.time_embed_dim == 0 || arch_.time_embed_dim % 2 != 0)
    throw InvalidArgument("time_embed_dim must be positive and even");
  if (!params_.has_segment(kEmbeddingSegment) ||
      params_.layout()[0].shape != Shape{arch_.num_concepts + 1, arch_.embed_dim})
    throw InvalidArgument("denoiser parameters lack a (D+1) x E embedding segment");
  if (params_.size() != mlp.parameter_count() + (arch_.num_concepts + 1) * arch_.embed_dim)
    throw InvalidArgument("denoiser parameter count does not match its architecture");
}

Denoiser Denoiser::create(const DenoiserArch& arch, const RealArray& embeddings, SeededRng& rng) {
  if (embeddings.rows() != arch.num_concepts + 1 || embeddings.cols() != arch.embed_dim)
    throw InvalidArgument("embedding table does not match denoiser arch");
  ParamVector p;
  const auto e = p.add_segment(kEmbeddingSegment, {arch.num_concepts + 1, arch.embed_dim});
  std::copy(embeddings.values().begin(), embeddings.values().end(), p.segment(e).begin());
  add_mlp_params(p, arch.mlp(), rng, /*zero_output=*/true);
  return Denoiser(arch, std::move(p));
}

std::span<const double> Denoiser::embedding_row(int id) const {
  if (id < 0 || id > null_id()) throw InvalidArgument("condition id out of range");
  return params_.segment(0).subspan(static_cast<std::size_t>(id) * arch_.embed_dim,
                                    arch_.embed_dim);
}

Point2 Denoiser::predict(Point2 z_t, int t, std::span<const double> cond) const {
  if (cond.size() != arch_.embed_dim) throw InvalidArgument("condition has wrong width");
  if (!std::isfinite(z_t[0]) || !std::isfinite(z_t[1]))
    throw InvalidArgument("denoise_predict: non-finite latent");
  if (t < 0 || t > arch_.time_steps) throw InvalidArgument("denoise_predict: timestep out of range");
  const auto mlp = arch_.mlp();
  thread_local std::vector<double> input;
  input.resize(mlp.input_dim);
  input[0] = z_t[0];
  input[1] = z_t[1];
  time_embedding(t, arch_.time_steps, std::span(input).subspan(2, arch_.time_embed_dim));
  std::copy(cond.begin(), cond.end(), input.begin() + 2 + static_cast<long>(arch_.time_embed_dim));
  Point2 out{};
  mlp_forward(mlp, params_, input, out);
  return out;
}

ad::Var Denoiser::forward(ad::Graph& g, const ParamBinding& params, ad::Var z,
                          std::span<const int> t, std::span<const std::size_t> cond_ids) const {
  const std::size_t n = t.size();
  if (g.value(z).rows() != n || g.value(z).cols() != 2 || cond_ids.size() != n)
    throw InvalidArgument("Denoiser::forward: batch size mismatch");
  RealArray temb = RealArray::matrix(n, arch_.time_embed_dim);
  for (std::size_t r = 0; r < n; ++r) time_embedding(t[r], arch_.time_steps, temb.row(r));
  const ad::Var cond = g.gather_rows(params[std::size_t{0}], cond_ids);
  const ad::Var parts[] = {z, g.constant(std::move(temb)), cond};
  return mlp_forward(g, arch_.mlp(), params, g.concat_cols(parts));
}

Point2 denoise_predict(const Denoiser& d, Point2 z_t, int t, std::span<const double> cond) {
  return d.predict(z_t, t, cond);
}

RealArray noised_latents(const NoiseSchedule& s, std::span<const NoiseDraw> batch) {
  RealArray z = RealArray::matrix(batch.size(), 2);
  for (std::size_t r = 0; r < batch.size(); ++r) {
    const Point2 zt = forward_noise(s, batch[r].x, batch[r].t, batch[r].eps);
    z(r, 0) = zt[0];
    z(r, 1) = zt[1];
  }
  return z;
}

ad::Var noise_prediction_loss(ad::Graph& g, const Denoiser& d, const ParamBinding& params,
                              const NoiseSchedule& s, std::span<const NoiseDraw> batch,
                              std::span<const std::size_t> cond_ids) {
  if (batch.empty()) throw InvalidArgument("loss batch is empty");
  std::vector<int> t(batch.size());
  RealArray eps = RealArray::matrix(batch.size(), 2);
  for (std::size_t r = 0; r < batch.size(); ++r) {
    t[r] = batch[r].t;
    eps(r, 0) = batch[r].eps[0];
    eps(r, 1) = batch[r].eps[1];
  }
  const ad::Var pred = d.forward(g, params, g.constant(noised_latents(s, batch)), t, cond_ids);
  const ad::Var err = g.sub(g.constant(std::move(eps)), pred);
  // mean over rows of the squared norm = 2 * mean over entries.
  return g.scale(g.mean(g.square(err)), 2.0);
}

LossFn recon_loss_fn(const Denoiser& d, const NoiseSchedule& s, const ConceptWorld& world,
                     int concept_id, std::vector<NoiseDraw> batch) {
  world.concept_spec(concept_id);
  return [&d, &s, concept_id, batch = std::move(batch)](ad::Graph& g, const ParamBinding& p) {
    std::vector<std::size_t> ids(batch.size(), static_cast<std::size_t>(concept_id));
    return noise_prediction_loss(g, d, p, s, batch, ids);
  };
}

double recon_loss(const Denoiser& d, const NoiseSchedule& s, const ConceptWorld& world,
                  int concept_id, std::span<const NoiseDraw> batch) {
  const auto fn = recon_loss_fn(d, s, world, concept_id, {batch.begin(), batch.end()});
  return evaluate(fn, d.params());
}

std::vector<NoiseDraw> draw_noise_batch(const ConceptWorld& world, const NoiseSchedule& s,
                                        int concept_id, std::size_t n, SeededRng& rng) {
  const auto xs = sample_concept_data(world, concept_id, n, rng);
  std::vector<NoiseDraw> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i].x = xs[i];
    out[i].t = static_cast<int>(rng.uniform_int(1, s.steps));
    out[i].eps = {rng.normal(), rng.normal()};
  }
  return out;
}

}  // namespace lure
