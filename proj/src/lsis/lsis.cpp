#include "lure/lsis/lsis.hpp"

#include <algorithm>
#include <cmath>

#include "lure/core/errors.hpp"
#include "lure/core/optimizer.hpp"
#include "lure/core/text_io.hpp"
#include "lure/diffusion/sampler.hpp"
#include "lure/diffusion/training.hpp"
#include "lure/world/oracle.hpp"

namespace lure {

Verifier::Verifier(VerifierArch arch, ParamVector params)
    : arch_(std::move(arch)), params_(std::move(params)) {
  if (arch_.num_concepts < 1) throw InvalidArgument("verifier needs at least one concept");
  if (arch_.time_embed_dim == 0 || arch_.time_embed_dim % 2 != 0)
    throw InvalidArgument("verifier time_embed_dim must be positive and even");
  if (params_.size() != arch_.mlp().parameter_count())
    throw InvalidArgument("verifier parameter count does not match its architecture");
}

Verifier Verifier::create(const VerifierArch& arch, SeededRng& rng) {
  ParamVector p;
  add_mlp_params(p, arch.mlp(), rng, /*zero_output=*/true);
  return Verifier(arch, std::move(p));
}

std::vector<double> Verifier::logits(Point2 z, int t) const {
  if (!std::isfinite(z[0]) || !std::isfinite(z[1])) throw InvalidArgument("verify: non-finite latent");
  if (t < 0 || t > arch_.time_steps) throw InvalidArgument("verify: timestep out of range");
  const auto mlp = arch_.mlp();
  std::vector<double> input(mlp.input_dim);
  input[0] = z[0];
  input[1] = z[1];
  time_embedding(t, arch_.time_steps, std::span(input).subspan(2));
  std::vector<double> out(arch_.num_concepts);
  mlp_forward(mlp, params_, input, out);
  return out;
}

ad::Var Verifier::log_probs(ad::Graph& g, const ParamBinding& p, ad::Var z,
                            std::span<const int> t) const {
  const std::size_t n = t.size();
  RealArray temb = RealArray::matrix(n, arch_.time_embed_dim);
  for (std::size_t r = 0; r < n; ++r) time_embedding(t[r], arch_.time_steps, temb.row(r));
  const ad::Var parts[] = {z, g.constant(std::move(temb))};
  return g.log_softmax(mlp_forward(g, arch_.mlp(), p, g.concat_cols(parts)));
}

std::vector<double> verify_log(const Verifier& v, Point2 z, int t) {
  auto l = v.logits(z, t);
  const double mx = *std::max_element(l.begin(), l.end());
  double sum = 0.0;
  for (double x : l) sum += std::exp(x - mx);
  const double lse = mx + std::log(sum);
  for (double& x : l) x -= lse;
  return l;
}

std::vector<double> verify(const Verifier& v, Point2 z, int t) {
  auto p = verify_log(v, z, t);
  for (double& x : p) x = std::exp(x);
  return p;
}

void LsisConfig::validate(int time_steps) const {
  if (max_retries < 1) throw InvalidArgument("lsis: max_retries must be at least 1");
  if (check_timesteps.empty() ||
      std::find(check_timesteps.begin(), check_timesteps.end(), 0) == check_timesteps.end())
    throw InvalidArgument("lsis: check_timesteps must contain 0");
  for (int t : check_timesteps)
    if (t < 0 || t > time_steps) throw InvalidArgument("lsis: check timestep out of range");
  if (!(lr > 0.0)) throw InvalidArgument("lsis: lr must be positive");
  if (train_steps < 1 || batch < 1) throw InvalidArgument("lsis: train steps and batch must be positive");
  if (max_train_t > time_steps) throw InvalidArgument("lsis: max_train_t exceeds T");
  if (hidden.empty()) throw InvalidArgument("lsis: at least one hidden layer");
}

namespace {

// (z_t, t, label) with t uniform over {0} and [1, tmax].
void draw_labelled(const ConceptWorld& world, const NoiseSchedule& s, int tmax, SeededRng& rng,
                   Point2& z, int& t, std::size_t& label) {
  const int d = static_cast<int>(world.num_concepts());
  const int c = static_cast<int>(rng.uniform_int(0, d - 1));
  const auto& spec = world.concept_spec(c);
  const Point2 x{spec.mean[0] + spec.stdev * rng.normal(), spec.mean[1] + spec.stdev * rng.normal()};
  t = static_cast<int>(rng.uniform_int(0, tmax));
  if (t == 0) {
    z = x;
  } else {
    const Point2 eps{rng.normal(), rng.normal()};
    z = forward_noise(s, x, t, eps);
  }
  label = static_cast<std::size_t>(c);
}

}  // namespace

VerifierTrainResult train_verifier(const ConceptWorld& world, const NoiseSchedule& s,
                                   const LsisConfig& cfg) {
  cfg.validate(s.steps);
  const int tmax = cfg.max_train_t < 0 ? s.steps : cfg.max_train_t;
  SeededRng rng(cfg.seed, hash_string("train-verifier"));
  SeededRng init = rng.split(0);
  VerifierArch arch{world.num_concepts(), cfg.time_embed_dim, cfg.hidden, s.steps};
  VerifierTrainResult result{Verifier::create(arch, init), 0.0, 0.0};
  Verifier& v = result.verifier;
  Adam opt(v.params(), {cfg.lr});

  RealArray z = RealArray::matrix(cfg.batch, 2);
  std::vector<int> t(cfg.batch);
  std::vector<std::size_t> labels(cfg.batch);
  for (std::size_t step = 0; step < cfg.train_steps; ++step) {
    for (std::size_t r = 0; r < cfg.batch; ++r) {
      Point2 zr;
      draw_labelled(world, s, tmax, rng, zr, t[r], labels[r]);
      z(r, 0) = zr[0];
      z(r, 1) = zr[1];
    }
    const LossFn loss = [&](ad::Graph& g, const ParamBinding& p) {
      const ad::Var lp = v.log_probs(g, p, g.constant(z), t);
      return g.scale(g.mean(g.pick(lp, labels)), -1.0);
    };
    auto [value, gradient] = value_and_grad(loss, v.params());
    check_divergence(value, step, "verifier training");
    opt.step(v.params(), gradient);
    result.final_loss = value;
  }

  SeededRng held = rng.split(1);
  const int d = static_cast<int>(world.num_concepts());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < cfg.heldout; ++i) {
    const int c = static_cast<int>(i % static_cast<std::size_t>(d));
    const auto x = sample_concept_data(world, c, 1, held)[0];
    if (argmax_lowest(verify(v, x, 0)) == c) ++hits;
  }
  result.heldout_accuracy =
      cfg.heldout == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(cfg.heldout);
  return result;
}

LsisOutcome lsis_sample(const Denoiser& d, const Verifier& v, const NoiseSchedule& s, int target_id,
                        const LsisConfig& cfg, SeededRng& rng) {
  cfg.validate(s.steps);
  if (target_id < 0 || static_cast<std::size_t>(target_id) >= v.arch().num_concepts)
    throw InvalidArgument("lsis: target out of range");
  LsisOutcome best;
  double best_score = -1.0;
  for (std::size_t attempt = 1; attempt <= cfg.max_retries; ++attempt) {
    const auto res = ddpm_sample(d, s, d.embedding_row(target_id), rng);
    bool ok = true;
    for (int t : cfg.check_timesteps) {
      const Point2 z = res.trajectory[static_cast<std::size_t>(s.steps - t)];
      if (argmax_lowest(verify(v, z, t)) != target_id) {
        ok = false;
        break;
      }
    }
    if (ok) return {res.z0, true, attempt};
    const double score = verify(v, res.z0, 0)[static_cast<std::size_t>(target_id)];
    if (score > best_score) {
      best_score = score;
      best.sample = res.z0;
    }
  }
  best.accepted = false;
  best.attempts = cfg.max_retries;
  return best;
}

std::vector<LsisOutcome> lsis_sample_many(const Denoiser& d, const Verifier& v,
                                          const NoiseSchedule& s, int target_id, std::size_t n,
                                          const LsisConfig& cfg, const SeededRng& base, Exec exec) {
  std::vector<LsisOutcome> out(n);
  for_each_index(exec, n, [&](std::size_t i) {
    SeededRng rng = base.split(i);
    out[i] = lsis_sample(d, v, s, target_id, cfg, rng);
  });
  return out;
}

Checkpoint verifier_checkpoint(const Verifier& v, std::uint64_t world_hash) {
  Checkpoint c;
  c.kind = "verifier";
  const auto& a = v.arch();
  c.set("arch.num_concepts", std::to_string(a.num_concepts));
  c.set("arch.time_embed_dim", std::to_string(a.time_embed_dim));
  c.set("arch.hidden", join_sizes(a.hidden));
  c.set("arch.time_steps", std::to_string(a.time_steps));
  c.set("world_hash", hex64(world_hash));
  c.params = v.params();
  return c;
}

Verifier verifier_from_checkpoint(const Checkpoint& c) {
  if (c.kind != "verifier") throw InvalidArgument("checkpoint kind is " + c.kind + ", not verifier");
  VerifierArch a;
  a.num_concepts = static_cast<std::size_t>(parse_int(c.field("arch.num_concepts")));
  a.time_embed_dim = static_cast<std::size_t>(parse_int(c.field("arch.time_embed_dim")));
  a.hidden = split_sizes(c.field("arch.hidden"));
  a.time_steps = static_cast<int>(parse_int(c.field("arch.time_steps")));
  return Verifier(std::move(a), c.params);
}

}  // namespace lure
