// One PASS/FAIL line per acceptance criterion. Exit status is the number of
// failures (capped at 1). Optional argv[1]: scratch directory for the runs.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

#include <json.hpp>

#include "lure/core/errors.hpp"
#include "lure/core/numdiff.hpp"
#include "lure/core/text_io.hpp"
#include "lure/diagnostics/diagnostics.hpp"
#include "lure/diffusion/checkpoint.hpp"
#include "lure/diffusion/evaluation.hpp"
#include "lure/pipeline/config.hpp"
#include "lure/pipeline/stages.hpp"
#include "lure/world/oracle.hpp"

using namespace lure;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const char* title, const std::function<Verdict()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Verdict v;
  try {
    v = body();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!v.pass) ++failures;
  std::printf("criterion %2d %s  %s: %s (%.1fs)\n", id, v.pass ? "PASS" : "FAIL", title, v.detail.c_str(), secs);
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

const fs::path kConfigFile = fs::path(LURE_SOURCE_DIR) / "configs" / "default.cfg";

}  // namespace

int main(int argc, char** argv) {
  const fs::path scratch = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "lure_acceptance";
  fs::remove_all(scratch);
  fs::create_directories(scratch);
  const fs::path dir_a = scratch / "run_a", dir_b = scratch / "run_b";

  // Default pipeline, run once up front; criteria 2-4, 6, 9 and 10 read it.
  const auto t_run = std::chrono::steady_clock::now();
  const RunConfig cfg = load_config(kConfigFile, {{"output.root", dir_a.string()}});
  run_all(cfg);
  std::printf("default pipeline finished in %.1fs\n", seconds_since(t_run));
  const json metrics = json::parse(slurp(dir_a / artifact::kMetrics));
  const json timings = json::parse(slurp(dir_a / artifact::kTimings));
  const ConceptWorld world = parse_world(read_file(dir_a / artifact::kWorld));
  const auto base = denoiser_from_checkpoint(load_checkpoint(dir_a / artifact::kBase));

  report(1, "gradient engine", [] {
    const auto t0 = std::chrono::steady_clock::now();
    const NoiseSchedule s = make_schedule(100, 1e-4, 0.02);
    double worst = 0.0;
    std::size_t checked = 0;
    for (std::uint64_t k = 0; k < 100; ++k) {
      SeededRng rng(20240, k);
      const int d = 2 + static_cast<int>(rng.uniform_int(0, 7));
      const auto w = default_world(d, 4.0, 0.3, {}, k);
      std::vector<std::size_t> hidden;
      for (int l = 0, n = 1 + static_cast<int>(rng.uniform_int(0, 1)); l < n; ++l)
        hidden.push_back(static_cast<std::size_t>(rng.uniform_int(4, 24)));
      Denoiser den = Denoiser::create({static_cast<std::size_t>(d), w.embed_dim(), 8, hidden, s.steps},
                                      w.embeddings(), rng);
      for (double& v : den.params().values()) v += 0.3 * rng.normal();
      const int c = static_cast<int>(rng.uniform_int(0, d - 1));
      const auto batch = draw_noise_batch(w, s, c, 1 + rng.uniform_int(0, 15), rng);
      const auto loss = recon_loss_fn(den, s, w, c, batch);
      const auto g = grad(loss, den.params());
      const auto f = finite_diff_grad(loss, den.params());
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (std::abs(f[i]) <= 1e-8) continue;
        worst = std::max(worst, std::abs(g[i] - f[i]) / std::abs(f[i]));
        ++checked;
      }
    }
    const double secs = seconds_since(t0);
    return Verdict{worst <= 1e-4 && secs < 120.0,
                   fmt("max rel err %.2e over %zu components (<= 1e-4), %.1fs (< 120s)", worst, checked, secs)};
  });

  report(2, "base fidelity", [&] {
    double lo = 1.0;
    for (const auto& c : metrics["concepts"]) lo = std::min(lo, c["base"]["accuracy"].get<double>());
    const double secs = timings["train-base"].get<double>() + timings["evaluate"].get<double>();
    return Verdict{lo >= 0.90 && secs < 600.0,
                   fmt("min accuracy %.3f over 500 draws/concept (>= 0.90), train+eval %.1fs", lo, secs)};
  });

  report(3, "erasure", [&] {
    double worst_erased = 0.0, worst_shift = 0.0;
    for (const auto& c : metrics["concepts"]) {
      const double b = c["base"]["accuracy"], e = c["erased"]["accuracy"];
      if (c["is_erased"].get<bool>())
        worst_erased = std::max(worst_erased, e);
      else
        worst_shift = std::max(worst_shift, std::abs(e - b));
    }
    return Verdict{worst_erased <= 0.10 && worst_shift <= 0.10,
                   fmt("max erased accuracy %.3f (<= 0.10), max preserved shift %.3f (<= 0.10)", worst_erased,
                       worst_shift)};
  });

  report(4, "reawakening", [&] {
    double lo_erased = 1.0, worst_shift = 0.0, worst_ratio = 0.0;
    for (const auto& c : metrics["concepts"]) {
      const double b = c["base"]["accuracy"], r = c["reawakened"]["accuracy"];
      if (c["is_erased"].get<bool>()) {
        lo_erased = std::min(lo_erased, r);
        worst_ratio = std::max(worst_ratio, c["reawakened"]["mmd2"].get<double>() / c["erased"]["mmd2"].get<double>());
      } else {
        worst_shift = std::max(worst_shift, std::abs(r - b));
      }
    }
    return Verdict{lo_erased >= 0.80 && worst_shift <= 0.10 && worst_ratio <= 0.5,
                   fmt("min erased accuracy %.3f (>= 0.80), max preserved shift %.3f (<= 0.10), "
                       "max mmd2 ratio %.3f (<= 0.5)",
                       lo_erased, worst_shift, worst_ratio)};
  });

  report(5, "orthogonalization ablation", [&] {
    const auto w4 = world.with_erased({0, 2, 4, 6});
    const auto& s = base.schedule;
    ErasureConfig ec = cfg.erasure;
    ec.seed = stage_seed(cfg.seed, "ablation-erase");
    const auto erased = erase_concepts(base.model, w4, s, ec).model;
    SeededRng ex_rng(stage_seed(cfg.seed, "ablation-exemplars"));
    std::vector<ExemplarSet> sets;
    for (int m : w4.erased_ids()) sets.push_back(make_exemplars(w4, m, cfg.lure.exemplars_per_concept, ex_rng));
    SeededRng lat_rng(stage_seed(cfg.seed, "ablation-latents"));
    const auto latents = draw_latent_batch(w4, s, cfg.diagnose.entangle_batch, lat_rng);
    const SeededRng eval_rng(stage_seed(cfg.seed, "ablation-eval"));

    double acc[2] = {0, 0}, ent[2] = {0, 0};
    const double lambdas[2] = {cfg.lure.lambda, 0.0};
    for (int k = 0; k < 2; ++k) {
      LureConfig lc = cfg.lure;
      lc.lambda = lambdas[k];
      lc.seed = stage_seed(cfg.seed, "ablation-lure");  // paired across both arms
      const auto model = lure_finetune(erased, sets, w4, s, lc).model;
      const auto evals = evaluate_concepts(model, s, w4, cfg.eval.n_per_concept, eval_rng, cfg.eval.bandwidth);
      for (int m : w4.erased_ids()) acc[k] += evals[static_cast<std::size_t>(m)].accuracy / 4.0;
      ent[k] = mean_pair_entanglement(entanglement_report(model, w4, latents), w4.erased_ids());
    }
    return Verdict{acc[0] > acc[1] && ent[0] < ent[1],
                   fmt("mean erased accuracy %.3f (lambda=%.2g) vs %.3f (lambda=0); erased-pair entanglement "
                       "%.4f vs %.4f",
                       acc[0], cfg.lure.lambda, acc[1], ent[0], ent[1])};
  });

  report(6, "lsis ablation", [&] {
    const Verifier v = verifier_from_checkpoint(load_checkpoint(dir_a / artifact::kVerifier));
    const auto rows = parse_samples_csv(read_file(dir_a / artifact::kSamplesLsis));
    std::size_t accepted = 0, obey = 0;
    for (const auto& r : rows) {
      if (!r.accepted) continue;
      ++accepted;
      bool ok = true;
      for (int t : cfg.lsis.check_timesteps) ok = ok && argmax_lowest(verify(v, r.z, t)) == r.concept_id;
      obey += ok;
    }
    bool dir_ok = true;
    std::string per;
    for (const auto& c : metrics["concepts"]) {
      if (!c["is_erased"].get<bool>()) continue;
      const auto& l = c["lsis"];
      const bool ok = l["accepted_accuracy"].get<double>() >= l["unfiltered_accuracy"].get<double>() &&
                      l["accepted_mmd2"].get<double>() <= l["unfiltered_mmd2"].get<double>();
      dir_ok = dir_ok && ok;
      per += fmt(" c%d acc %.3f/%.3f mmd2 %.4f/%.4f;", c["concept_id"].get<int>(), l["accepted_accuracy"].get<double>(),
                 l["unfiltered_accuracy"].get<double>(), l["accepted_mmd2"].get<double>(),
                 l["unfiltered_mmd2"].get<double>());
    }
    return Verdict{dir_ok && accepted > 0 && obey == accepted,
                   fmt("accepted vs unfiltered:%s rule holds for %zu/%zu accepted", per.c_str(), obey, accepted)};
  });

  // Criteria 7 and 8 share the 20 micro trials.
  std::vector<IftReport> trials;
  const auto t_ift = std::chrono::steady_clock::now();
  for (std::size_t k = 0; k < 20; ++k) trials.push_back(ift_recovery_check(cfg.diagnose.ift, stage_seed(cfg.seed, "diagnose-ift", k)));
  const double ift_secs = seconds_since(t_ift);

  report(7, "alignment disruption", [&] {
    int holds = 0;
    for (const auto& r : trials) holds += r.F_before > r.F_base;
    return Verdict{holds == 20, fmt("F(theta_e, z_e) > F(theta0, z0) in %d/20 seeds", holds)};
  });

  report(8, "ift recovery", [&] {
    int wins = 0;
    for (const auto& r : trials) wins += r.F_after < r.F_before;
    IftConfig control = cfg.diagnose.ift;
    control.skip_erasure = true;
    const auto c = ift_recovery_check(control, stage_seed(cfg.seed, "diagnose-ift", 0));
    return Verdict{wins >= 16 && c.delta_theta_zero && ift_secs < 300.0,
                   fmt("F_after < F_before in %d/20 (>= 16), control delta_theta %s, %.1fs (< 300s)", wins,
                       c.delta_theta_zero ? "exactly 0" : "non-zero", ift_secs)};
  });

  report(9, "rho properties", [&] {
    SeededRng rng(stage_seed(cfg.seed, "acceptance-rho"));
    const auto m = rho_matrix(base.model, world, base.schedule, {cfg.diagnose.rho_batch}, rng);
    const std::size_t d = world.num_concepts();
    double diag_err = 0.0, max_abs = 0.0, max_off = 0.0;
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) {
        const double r = m.entries(i, j);
        max_abs = std::max(max_abs, std::abs(r));
        if (i == j)
          diag_err = std::max(diag_err, std::abs(r - 1.0));
        else
          max_off = std::max(max_off, std::abs(r));
      }
    return Verdict{diag_err <= 1e-6 && max_abs <= 1.0 && max_off > 1e-6,
                   fmt("max |rho_ii - 1| %.1e, max |rho_ij| %.6f, max off-diagonal %.4f", diag_err, max_abs, max_off)};
  });

  report(10, "determinism and persistence", [&] {
    run_all(load_config(kConfigFile, {{"output.root", dir_b.string()}}));
    const bool same = slurp(dir_a / artifact::kMetrics) == slurp(dir_b / artifact::kMetrics);
    int round_trips = 0, total = 0;
    for (const char* name : {artifact::kBase, artifact::kErased, artifact::kReawakened, artifact::kVerifier}) {
      ++total;
      const std::string text = slurp(dir_a / name);
      const Checkpoint ck = parse_checkpoint(text);
      bool ok = serialize_checkpoint(ck) == text;
      if (ck.kind == "verifier") {
        const Verifier v = verifier_from_checkpoint(ck);
        ok = ok && verifier_from_checkpoint(parse_checkpoint(serialize_checkpoint(verifier_checkpoint(v, 0))))
                           .params() == v.params();
      } else {
        const auto ld = denoiser_from_checkpoint(ck);
        const auto back = denoiser_from_checkpoint(
            parse_checkpoint(serialize_checkpoint(denoiser_checkpoint(ld.model, ld.schedule, ld.world_hash))));
        ok = ok && back.model.params() == ld.model.params() && back.schedule.steps == ld.schedule.steps;
      }
      round_trips += ok;
    }
    return Verdict{same && round_trips == total,
                   fmt("metrics byte-identical across runs: %s; checkpoints round-tripped %d/%d",
                       same ? "yes" : "no", round_trips, total)};
  });

  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
