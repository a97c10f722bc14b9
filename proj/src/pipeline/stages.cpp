#include "lure/pipeline/stages.hpp"

#include <chrono>
#include <cstdio>
#include <map>
#include <sstream>

#include <json.hpp>

#include "lure/core/errors.hpp"
#include "lure/core/text_io.hpp"
#include "lure/diagnostics/diagnostics.hpp"
#include "lure/diffusion/checkpoint.hpp"
#include "lure/diffusion/evaluation.hpp"
#include "lure/diffusion/sampler.hpp"
#include "lure/world/oracle.hpp"

namespace lure {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

const std::vector<std::string>& stage_names() {
  static const std::vector<std::string> names = {"init",   "train-base", "erase",    "reawaken",
                                                 "train-verifier", "sample", "evaluate", "diagnose",
                                                 "report"};
  return names;
}

namespace {

struct Run {
  const RunConfig& cfg;
  fs::path dir;

  fs::path at(const char* name) const { return dir / name; }

  fs::path need(const char* name) const {
    const fs::path p = at(name);
    if (!fs::exists(p)) throw DependencyError(p.string());
    return p;
  }

  std::uint64_t seed(std::string_view stage, std::uint64_t index = 0) const {
    return stage_seed(cfg.seed, stage, index);
  }
};

ConceptWorld load_world(const Run& run) { return parse_world(read_file(run.need(artifact::kWorld))); }

LoadedDenoiser load_denoiser(const Run& run, const char* name, const ConceptWorld& world) {
  auto ld = denoiser_from_checkpoint(load_checkpoint(run.need(name)));
  if (ld.world_hash != world_hash(world))
    throw DependencyError(run.at(name).string() + " (built for a different world)");
  return ld;
}

Verifier load_verifier(const Run& run) {
  return verifier_from_checkpoint(load_checkpoint(run.need(artifact::kVerifier)));
}

void write_json(const fs::path& p, const json& j) { atomic_write_file(p, j.dump(2) + "\n"); }

json read_json(const fs::path& p) {
  try {
    return json::parse(read_file(p));
  } catch (const json::exception& e) {
    throw NumericFailure("cannot parse " + p.string() + ": " + e.what());
  }
}

std::string loss_csv(const std::vector<LossRecord>& curve) {
  std::string out = "step,loss,running\n";
  for (const auto& r : curve)
    out += std::to_string(r.step) + "," + format_real(r.loss) + "," + format_real(r.running) + "\n";
  return out;
}

// ---- stages ---------------------------------------------------------------

void stage_init(const Run& run) {
  const auto& w = run.cfg.world;
  const auto world = default_world(w.concepts, w.radius, w.stdev, w.erased, run.seed("world"), w.embed_dim);
  atomic_write_file(run.at(artifact::kWorld), serialize_world(world));
  atomic_write_file(run.at(artifact::kConfig), canonical_config(run.cfg));
}

NoiseSchedule schedule_of(const RunConfig& cfg) {
  return make_schedule(cfg.schedule.steps, cfg.schedule.beta_start, cfg.schedule.beta_end);
}

void stage_train_base(const Run& run) {
  const auto world = load_world(run);
  const auto s = schedule_of(run.cfg);
  TrainConfig tc = run.cfg.train;
  tc.seed = run.seed("train-base");
  const auto res = train_base(world, s, tc);
  atomic_write_file(run.at(artifact::kLossBase), loss_csv(res.curve));
  auto ck = denoiser_checkpoint(res.model, s, world_hash(world));
  ck.set("final_running_loss", format_real(res.final_running_loss));
  save_checkpoint(run.at(artifact::kBase), ck);
}

void stage_erase(const Run& run) {
  const auto world = load_world(run);
  const auto base = load_denoiser(run, artifact::kBase, world);
  ErasureConfig ec = run.cfg.erasure;
  ec.seed = run.seed("erase");
  const auto res = erase_concepts(base.model, world, base.schedule, ec);
  atomic_write_file(run.at(artifact::kLossErase), loss_csv(res.curve));
  auto ck = denoiser_checkpoint(res.model, base.schedule, world_hash(world));
  ck.set("param_distance", format_real(l2_distance(base.model.params(), res.model.params())));
  save_checkpoint(run.at(artifact::kErased), ck);
}

void stage_reawaken(const Run& run) {
  const auto world = load_world(run);
  const auto erased = load_denoiser(run, artifact::kErased, world);
  LureConfig lc = run.cfg.lure;
  lc.seed = run.seed("reawaken");
  SeededRng ex_rng(run.seed("reawaken", 1));
  std::vector<ExemplarSet> sets;
  std::string ex_csv = "concept_id,x,y\n";
  for (int m : world.erased_ids()) {
    sets.push_back(make_exemplars(world, m, lc.exemplars_per_concept, ex_rng));
    for (const auto& x : sets.back().samples)
      ex_csv += std::to_string(m) + "," + format_real(x[0]) + "," + format_real(x[1]) + "\n";
  }
  const auto res = lure_finetune(erased.model, sets, world, erased.schedule, lc);
  std::string trace = "step,bind_total,orth,total\n";
  for (const auto& r : res.trace)
    trace += std::to_string(r.step) + "," + format_real(r.bind_total) + "," + format_real(r.orth) +
             "," + format_real(r.total) + "\n";
  atomic_write_file(run.at(artifact::kExemplars), ex_csv);
  atomic_write_file(run.at(artifact::kLossLure), trace);
  save_checkpoint(run.at(artifact::kReawakened),
                  denoiser_checkpoint(res.model, erased.schedule, world_hash(world)));
}

void stage_train_verifier(const Run& run) {
  const auto world = load_world(run);
  const auto s = schedule_of(run.cfg);
  LsisConfig lc = run.cfg.lsis;
  lc.seed = run.seed("train-verifier");
  const auto res = train_verifier(world, s, lc);
  auto ck = verifier_checkpoint(res.verifier, world_hash(world));
  ck.set("heldout_accuracy", format_real(res.heldout_accuracy));
  save_checkpoint(run.at(artifact::kVerifier), ck);
}

void stage_sample(const Run& run) {
  const auto world = load_world(run);
  const auto base = load_denoiser(run, artifact::kBase, world);
  const auto erased = load_denoiser(run, artifact::kErased, world);
  const auto star = load_denoiser(run, artifact::kReawakened, world);
  const auto verifier = load_verifier(run);
  const std::size_t n = run.cfg.eval.n_per_concept;
  const SeededRng root(run.seed("sample"));

  const auto plain = [&](const Denoiser& d) {
    std::vector<SampleRow> rows;
    for (std::size_t c = 0; c < world.num_concepts(); ++c)
      for (const auto& z : sample_many(d, base.schedule, static_cast<int>(c), n, root.split(c)))
        rows.push_back({z, static_cast<int>(c), true});
    return rows;
  };
  atomic_write_file(run.at(artifact::kSamplesBase), samples_csv(plain(base.model)));
  atomic_write_file(run.at(artifact::kSamplesErased), samples_csv(plain(erased.model)));
  atomic_write_file(run.at(artifact::kSamplesReawakened), samples_csv(plain(star.model)));

  // Same per-draw streams as the unfiltered reawakened samples, so a first
  // attempt reproduces the unfiltered draw.
  std::vector<SampleRow> rows;
  std::string attempts = "concept_id,attempts\n";
  for (std::size_t c = 0; c < world.num_concepts(); ++c) {
    const auto out = lsis_sample_many(star.model, verifier, star.schedule, static_cast<int>(c), n,
                                      run.cfg.lsis, root.split(c));
    for (const auto& o : out) {
      rows.push_back({o.sample, static_cast<int>(c), o.accepted});
      attempts += std::to_string(c) + "," + std::to_string(o.attempts) + "\n";
    }
  }
  atomic_write_file(run.at(artifact::kSamplesLsis), samples_csv(rows));
  atomic_write_file(run.at(artifact::kLsisStats), attempts);
}

std::vector<std::vector<Point2>> by_concept(const std::vector<SampleRow>& rows, std::size_t d,
                                            bool accepted_only) {
  std::vector<std::vector<Point2>> out(d);
  for (const auto& r : rows) {
    if (r.concept_id < 0 || static_cast<std::size_t>(r.concept_id) >= d)
      throw NumericFailure("sample file has an out-of-range concept id");
    if (!accepted_only || r.accepted) out[static_cast<std::size_t>(r.concept_id)].push_back(r.z);
  }
  return out;
}

json nullable(double v, bool present) { return present ? json(v) : json(nullptr); }

void stage_evaluate(const Run& run) {
  const auto world = load_world(run);
  const auto verifier = load_verifier(run);
  const std::size_t d = world.num_concepts();
  const std::size_t n = run.cfg.eval.n_per_concept;
  const SeededRng ref_rng(run.seed("evaluate"));

  std::vector<std::vector<Point2>> refs;
  std::vector<double> bw;
  for (std::size_t c = 0; c < d; ++c) {
    refs.push_back(reference_samples(world, static_cast<int>(c), n, ref_rng));
    bw.push_back(run.cfg.eval.bandwidth > 0.0 ? run.cfg.eval.bandwidth : median_bandwidth(refs.back()));
  }

  json checkpoints = json::object();
  const std::pair<const char*, const char*> sets[] = {{"base", artifact::kSamplesBase},
                                                      {"erased", artifact::kSamplesErased},
                                                      {"reawakened", artifact::kSamplesReawakened}};
  for (const auto& [name, file] : sets) {
    const auto grouped = by_concept(parse_samples_csv(read_file(run.need(file))), d, false);
    json per = json::array();
    for (std::size_t c = 0; c < d; ++c) {
      const int id = static_cast<int>(c);
      per.push_back({{"concept_id", id},
                     {"accuracy", oracle_accuracy(world, grouped[c], id)},
                     {"mmd2", mmd2(grouped[c], refs[c], bw[c])}});
    }
    checkpoints[name] = per;
  }

  const auto lsis_rows = parse_samples_csv(read_file(run.need(artifact::kSamplesLsis)));
  const auto all = by_concept(lsis_rows, d, false);
  const auto accepted = by_concept(lsis_rows, d, true);
  const auto unfiltered =
      by_concept(parse_samples_csv(read_file(run.need(artifact::kSamplesReawakened))), d, false);
  std::vector<double> attempts_sum(d, 0.0);
  {
    const auto text = read_file(run.need(artifact::kLsisStats));
    LineReader lines(text, artifact::kLsisStats);
    lines.next();  // header
    while (!lines.done()) {
      const auto tok = lines.next();
      const std::string line(tok[0]);
      const auto comma = line.find(',');
      attempts_sum[static_cast<std::size_t>(parse_int(line.substr(0, comma)))] +=
          static_cast<double>(parse_int(line.substr(comma + 1)));
    }
  }
  json lsis = json::array();
  for (std::size_t c = 0; c < d; ++c) {
    const int id = static_cast<int>(c);
    const bool any = !accepted[c].empty();
    std::size_t rule_ok = 0;
    for (const auto& z : accepted[c])
      if (argmax_lowest(verify(verifier, z, 0)) == id) ++rule_ok;
    lsis.push_back(
        {{"concept_id", id},
         {"acceptance_rate", static_cast<double>(accepted[c].size()) / static_cast<double>(all[c].size())},
         {"mean_attempts", attempts_sum[c] / static_cast<double>(all[c].size())},
         {"accepted_count", accepted[c].size()},
         {"accepted_accuracy", nullable(any ? oracle_accuracy(world, accepted[c], id) : 0.0, any)},
         {"accepted_mmd2", nullable(any ? mmd2(accepted[c], refs[c], bw[c]) : 0.0, any)},
         {"unfiltered_accuracy", oracle_accuracy(world, unfiltered[c], id)},
         {"unfiltered_mmd2", mmd2(unfiltered[c], refs[c], bw[c])},
         {"accepted_rule_rate", nullable(any ? static_cast<double>(rule_ok) / accepted[c].size() : 0.0, any)}});
  }
  write_json(run.at(artifact::kEval), {{"checkpoints", checkpoints}, {"lsis", lsis}});
}

json matrix_json(const RealArray& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (std::size_t c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

std::string matrix_csv(const RealArray& m) {
  std::string out;
  for (std::size_t c = 0; c < m.cols(); ++c) out += (c ? ",c" : "row,c") + std::to_string(c);
  out += "\n";
  for (std::size_t r = 0; r < m.rows(); ++r) {
    out += std::to_string(r);
    for (std::size_t c = 0; c < m.cols(); ++c) out += "," + format_real(m(r, c));
    out += "\n";
  }
  return out;
}

void stage_diagnose(const Run& run) {
  const auto world = load_world(run);
  const auto base = load_denoiser(run, artifact::kBase, world);
  const auto erased = load_denoiser(run, artifact::kErased, world);
  const auto star = load_denoiser(run, artifact::kReawakened, world);
  const auto verifier = load_verifier(run);
  const auto& dp = run.cfg.diagnose;
  const auto& s = base.schedule;

  SeededRng rho_rng(run.seed("diagnose", 0));
  const auto rho = rho_matrix(base.model, world, s, {dp.rho_batch}, rho_rng);
  atomic_write_file(run.dir / "rho.csv", matrix_csv(rho.entries));

  SeededRng ent_rng(run.seed("diagnose", 1));
  const auto latents = draw_latent_batch(world, s, dp.entangle_batch, ent_rng);
  json ent = json::object();
  const std::pair<const char*, const Denoiser*> models[] = {
      {"base", &base.model}, {"erased", &erased.model}, {"reawakened", &star.model}};
  for (const auto& [name, model] : models) {
    const auto m = entanglement_report(*model, world, latents);
    atomic_write_file(run.dir / (std::string("entanglement_") + name + ".csv"), matrix_csv(m));
    ent[name] = {{"matrix", matrix_json(m)},
                 {"mean_erased_pairs", mean_pair_entanglement(m, world.erased_ids())}};
  }

  SeededRng f_rng(run.seed("diagnose", 2));
  const auto draws = draw_alignment(dp.alignment_mc, s.steps, f_rng);
  json align = json::object();
  for (const auto& [name, model] : models) {
    json per = json::array();
    for (std::size_t c = 0; c < world.num_concepts(); ++c) {
      const int id = static_cast<int>(c);
      per.push_back(alignment_F(verifier, *model, s, id, world.concept_spec(id).mean, draws));
    }
    align[name] = per;
  }

  json trials = json::array();
  std::size_t wins = 0, disrupted = 0;
  for (std::size_t k = 0; k < dp.ift_seeds; ++k) {
    const auto r = ift_recovery_check(dp.ift, run.seed("diagnose-ift", k));
    wins += r.F_after < r.F_before;
    disrupted += r.F_before > r.F_base;
    trials.push_back({{"F_base", r.F_base},
                      {"F_before", r.F_before},
                      {"F_after", r.F_after},
                      {"delta_theta_norm", r.delta_theta_norm},
                      {"delta_z_norm", r.delta_z_norm},
                      {"cond_h_theta", r.cond_h_theta},
                      {"cond_h_z", r.cond_h_z}});
  }
  write_json(run.at(artifact::kDiagnostics),
             {{"rho", matrix_json(rho.entries)},
              {"entanglement", ent},
              {"alignment_F", align},
              {"ift",
               {{"damping", dp.ift.damping},
                {"trials", trials},
                {"recovered", wins},
                {"disrupted", disrupted}}}});
}

std::string hex_of(std::uint64_t v) { return hex64(v); }

std::string fixed(double v, int prec = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

void stage_report(const Run& run) {
  const auto world = load_world(run);
  const auto eval = read_json(run.need(artifact::kEval));
  const auto diag = read_json(run.need(artifact::kDiagnostics));
  const auto base_ck = load_checkpoint(run.need(artifact::kBase));
  const auto erased_ck = load_checkpoint(run.need(artifact::kErased));
  const auto ver_ck = load_checkpoint(run.need(artifact::kVerifier));
  const auto lure_trace = read_file(run.need(artifact::kLossLure));

  json concepts = json::array();
  for (std::size_t c = 0; c < world.num_concepts(); ++c) {
    const int id = static_cast<int>(c);
    json row = {{"concept_id", id}, {"label", world.concept_spec(id).label}, {"is_erased", world.is_erased(id)}};
    for (const char* name : {"base", "erased", "reawakened"}) {
      const auto& e = eval["checkpoints"][name][c];
      row[name] = {{"accuracy", e["accuracy"]},
                   {"mmd2", e["mmd2"]},
                   {"alignment_F", diag["alignment_F"][name][c]}};
    }
    json l = eval["lsis"][c];
    l.erase("concept_id");
    row["lsis"] = l;
    concepts.push_back(row);
  }

  // Last line of the reawakening trace.
  json lure_final = nullptr;
  {
    std::istringstream in(lure_trace);
    std::string line, last;
    std::getline(in, line);
    while (std::getline(in, line))
      if (!line.empty()) last = line;
    if (!last.empty()) {
      std::vector<std::string> parts;
      std::size_t start = 0;
      for (std::size_t p; (p = last.find(',', start)) != std::string::npos; start = p + 1)
        parts.push_back(last.substr(start, p - start));
      parts.push_back(last.substr(start));
      lure_final = {{"step", parse_int(parts[0])},
                    {"bind_total", parse_real(parts[1])},
                    {"orth", parse_real(parts[2])},
                    {"total", parse_real(parts[3])}};
    }
  }

  json metrics = {{"format_version", kMetricsFormatVersion},
                  {"config_hash", hex_of(config_hash(run.cfg))},
                  {"master_seed", run.cfg.seed},
                  {"world_hash", hex_of(world_hash(world))},
                  {"erased_ids", world.erased_ids()},
                  {"base_training", {{"final_running_loss", parse_real(base_ck.field("final_running_loss"))}}},
                  {"erasure", {{"param_distance", parse_real(erased_ck.field("param_distance"))}}},
                  {"reawakening", lure_final},
                  {"verifier", {{"heldout_accuracy", parse_real(ver_ck.field("heldout_accuracy"))}}},
                  {"concepts", concepts},
                  {"rho", diag["rho"]},
                  {"entanglement", diag["entanglement"]},
                  {"ift", diag["ift"]}};
  write_json(run.at(artifact::kMetrics), metrics);

  std::string table =
      "concept  label      erased  base   erased  reawakened  lsis\n"
      "-------  ---------  ------  -----  ------  ----------  -----\n";
  for (const auto& row : concepts) {
    char buf[160];
    const auto& acc = row["lsis"]["accepted_accuracy"];
    std::snprintf(buf, sizeof buf, "%7d  %-9s  %-6s  %5s  %6s  %10s  %5s\n", row["concept_id"].get<int>(),
                  row["label"].get<std::string>().c_str(), row["is_erased"].get<bool>() ? "yes" : "no",
                  fixed(row["base"]["accuracy"].get<double>()).c_str(),
                  fixed(row["erased"]["accuracy"].get<double>()).c_str(),
                  fixed(row["reawakened"]["accuracy"].get<double>()).c_str(),
                  acc.is_null() ? "-" : fixed(acc.get<double>()).c_str());
    table += buf;
  }
  table += "\noracle accuracy of " + std::to_string(run.cfg.eval.n_per_concept) +
           " samples per concept; lsis = accepted samples of the reawakened model\n";
  atomic_write_file(run.at(artifact::kReport), table);
  emit_plot_data(run.dir);
}

void record_timing(const fs::path& dir, const std::string& stage, double seconds) {
  const fs::path p = dir / artifact::kTimings;
  json t = json::object();
  if (fs::exists(p)) {
    try {
      t = json::parse(read_file(p));
    } catch (const json::exception&) {
      t = json::object();
    }
  }
  t[stage] = seconds;
  write_json(p, t);
}

}  // namespace

std::string samples_csv(const std::vector<SampleRow>& rows) {
  std::string out = "x,y,concept_id,accepted_flag\n";
  for (const auto& r : rows)
    out += format_real(r.z[0]) + "," + format_real(r.z[1]) + "," + std::to_string(r.concept_id) + "," +
           (r.accepted ? "1" : "0") + "\n";
  return out;
}

std::vector<SampleRow> parse_samples_csv(std::string_view text) {
  std::vector<SampleRow> rows;
  std::size_t pos = 0;
  bool header = true;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    const auto nl = text.find('\n', pos);
    const auto line = trim(text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos));
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    ++line_no;
    if (line.empty()) continue;
    if (header) {
      if (line != "x,y,concept_id,accepted_flag") throw NumericFailure("samples csv: unexpected header");
      header = false;
      continue;
    }
    std::string_view f[4];
    std::size_t start = 0;
    for (int k = 0; k < 4; ++k) {
      const auto comma = line.find(',', start);
      if ((k < 3) == (comma == std::string_view::npos))
        throw NumericFailure("samples csv: line " + std::to_string(line_no) + " needs 4 fields");
      f[k] = line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
      start = comma + 1;
    }
    if (f[3] != "0" && f[3] != "1") throw NumericFailure("samples csv: accepted_flag must be 0 or 1");
    rows.push_back({{parse_real(f[0]), parse_real(f[1])}, static_cast<int>(parse_int(f[2])), f[3] == "1"});
  }
  return rows;
}

void emit_plot_data(const fs::path& run_dir) {
  const fs::path out = run_dir / artifact::kPlotDir;
  fs::create_directories(out);
  const std::pair<const char*, const char*> sets[] = {{"base", artifact::kSamplesBase},
                                                      {"erased", artifact::kSamplesErased},
                                                      {"reawakened", artifact::kSamplesReawakened},
                                                      {"lsis", artifact::kSamplesLsis}};
  for (const auto& [name, file] : sets) {
    const fs::path src = run_dir / file;
    if (!fs::exists(src)) continue;
    std::map<int, std::vector<SampleRow>> groups;
    for (const auto& r : parse_samples_csv(read_file(src))) groups[r.concept_id].push_back(r);
    for (const auto& [c, rows] : groups)
      atomic_write_file(out / (std::string("samples_") + name + "_c" + std::to_string(c) + ".csv"),
                        samples_csv(rows));
  }
  for (const char* file : {artifact::kLossBase, artifact::kLossErase, artifact::kLossLure}) {
    const fs::path src = run_dir / file;
    if (fs::exists(src)) atomic_write_file(out / file, read_file(src));
  }
}

std::string read_metrics_checked(const fs::path& path) {
  const std::string text = read_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError("format_version", std::string("unreadable metrics document: ") + e.what());
  }
  if (!j.contains("format_version") || !j["format_version"].is_string())
    throw ConfigError("format_version", "missing");
  const std::string v = j["format_version"].get<std::string>();
  const std::string major = v.substr(0, v.find('.'));
  const std::string ours = std::string(kMetricsFormatVersion).substr(0, 1);
  if (major != ours) throw ConfigError("format_version", "unsupported major version " + v);
  return text;
}

void run_stage(const std::string& stage, const RunConfig& cfg) {
  cfg.validate();
  const Run run{cfg, resolve_output_root(cfg)};
  fs::create_directories(run.dir);
  const auto start = std::chrono::steady_clock::now();
  if (stage == "init") stage_init(run);
  else if (stage == "train-base") stage_train_base(run);
  else if (stage == "erase") stage_erase(run);
  else if (stage == "reawaken") stage_reawaken(run);
  else if (stage == "train-verifier") stage_train_verifier(run);
  else if (stage == "sample") stage_sample(run);
  else if (stage == "evaluate") stage_evaluate(run);
  else if (stage == "diagnose") stage_diagnose(run);
  else if (stage == "report") stage_report(run);
  else throw ConfigError("stage", "unknown stage '" + stage + "'");
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  record_timing(run.dir, stage, secs);
}

void run_all(const RunConfig& cfg) {
  for (const auto& s : stage_names()) run_stage(s, cfg);
}

}  // namespace lure
