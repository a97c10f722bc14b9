#include "lure/pipeline/config.hpp"

#include <cstdlib>
#include <functional>
#include <map>

#include "lure/core/errors.hpp"
#include "lure/core/rng.hpp"
#include "lure/core/text_io.hpp"

namespace lure {
namespace {

struct Field {
  std::string key;
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <class T>
T parse_unsigned(std::string_view v) {
  const auto x = parse_int(v);
  if (x < 0) throw InvalidArgument("expected a non-negative integer");
  return static_cast<T>(x);
}

std::vector<std::size_t> parse_size_list(std::string_view v) { return split_sizes(std::string(v)); }

std::vector<int> parse_int_list(std::string_view v) {
  std::vector<int> out;
  const std::string s(trim(v));
  if (s.empty() || s == "none") return out;
  std::size_t start = 0;
  while (true) {
    const auto comma = s.find(',', start);
    out.push_back(static_cast<int>(parse_int(trim(std::string_view(s).substr(
        start, comma == std::string::npos ? std::string::npos : comma - start)))));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string int_list(const std::vector<int>& v) {
  if (v.empty()) return "none";
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

#define REAL(k, path) \
  Field { k, [](RunConfig& c, std::string_view v) { c.path = parse_real(v); }, [](const RunConfig& c) { return format_real(c.path); } }
#define SIZE(k, path) \
  Field { k, [](RunConfig& c, std::string_view v) { c.path = parse_unsigned<std::size_t>(v); }, [](const RunConfig& c) { return std::to_string(c.path); } }
#define INT(k, path) \
  Field { k, [](RunConfig& c, std::string_view v) { c.path = static_cast<int>(parse_int(v)); }, [](const RunConfig& c) { return std::to_string(c.path); } }
#define U64(k, path) \
  Field { k, [](RunConfig& c, std::string_view v) { c.path = parse_unsigned<std::uint64_t>(v); }, [](const RunConfig& c) { return std::to_string(c.path); } }
#define SIZES(k, path) \
  Field { k, [](RunConfig& c, std::string_view v) { c.path = parse_size_list(v); }, [](const RunConfig& c) { return join_sizes(c.path); } }
#define INTS(k, path) \
  Field { k, [](RunConfig& c, std::string_view v) { c.path = parse_int_list(v); }, [](const RunConfig& c) { return int_list(c.path); } }

const std::vector<Field>& fields() {
  static const std::vector<Field> f = {
      U64("seed", seed),
      Field{"output.root", [](RunConfig& c, std::string_view v) { c.output_root = std::string(v); },
            [](const RunConfig& c) { return c.output_root; }},
      INT("world.concepts", world.concepts),
      REAL("world.radius", world.radius),
      REAL("world.stdev", world.stdev),
      INTS("world.erased", world.erased),
      SIZE("world.embed_dim", world.embed_dim),
      INT("schedule.steps", schedule.steps),
      REAL("schedule.beta_start", schedule.beta_start),
      REAL("schedule.beta_end", schedule.beta_end),
      SIZE("train.steps", train.steps),
      REAL("train.lr", train.lr),
      SIZE("train.batch", train.batch),
      REAL("train.beta1", train.beta1),
      REAL("train.beta2", train.beta2),
      REAL("train.null_prob", train.null_prob),
      SIZE("train.time_embed_dim", train.time_embed_dim),
      SIZES("train.hidden", train.hidden),
      REAL("erasure.gamma", erasure.gamma),
      SIZE("erasure.steps", erasure.steps),
      REAL("erasure.lr", erasure.lr),
      SIZE("erasure.batch", erasure.batch),
      REAL("lure.lambda", lure.lambda),
      REAL("lure.xi", lure.xi),
      SIZE("lure.steps", lure.steps),
      REAL("lure.lr", lure.lr),
      SIZE("lure.batch", lure.batch),
      SIZE("lure.exemplars", lure.exemplars_per_concept),
      SIZE("lsis.max_retries", lsis.max_retries),
      INTS("lsis.check_timesteps", lsis.check_timesteps),
      SIZE("lsis.train_steps", lsis.train_steps),
      REAL("lsis.lr", lsis.lr),
      SIZE("lsis.batch", lsis.batch),
      SIZES("lsis.hidden", lsis.hidden),
      SIZE("lsis.time_embed_dim", lsis.time_embed_dim),
      SIZE("lsis.heldout", lsis.heldout),
      SIZE("eval.n_per_concept", eval.n_per_concept),
      Field{"eval.bandwidth",
            [](RunConfig& c, std::string_view v) {
              c.eval.bandwidth = v == "median" ? 0.0 : parse_real(v);
            },
            [](const RunConfig& c) {
              return c.eval.bandwidth == 0.0 ? std::string("median") : format_real(c.eval.bandwidth);
            }},
      SIZE("diagnose.rho_batch", diagnose.rho_batch),
      SIZE("diagnose.entangle_batch", diagnose.entangle_batch),
      SIZE("diagnose.alignment_mc", diagnose.alignment_mc),
      SIZE("diagnose.ift_seeds", diagnose.ift_seeds),
      REAL("diagnose.ift_damping", diagnose.ift.damping),
      SIZE("diagnose.ift_base_steps", diagnose.ift.base_steps),
      SIZE("diagnose.ift_erase_steps", diagnose.ift.erase_steps),
      SIZE("diagnose.ift_zmin_steps", diagnose.ift.zmin_steps),
  };
  return f;
}

#undef REAL
#undef SIZE
#undef INT
#undef U64
#undef SIZES
#undef INTS

const Field& find_field(const std::string& key) {
  for (const auto& f : fields())
    if (f.key == key) return f;
  throw ConfigError(key, "unknown configuration key");
}

void apply(RunConfig& cfg, const std::string& key, std::string_view value) {
  const Field& f = find_field(key);
  try {
    f.set(cfg, trim(value));
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(key, "bad value '" + std::string(trim(value)) + "': " + e.what());
  }
}

// Maps a component's own validation message ("train: lr must ...") onto the
// config key it names, or the section when the word is not a key.
template <class Fn>
void check(const std::string& section, Fn&& fn) {
  try {
    fn();
  } catch (const InvalidArgument& e) {
    std::string_view msg = e.what();
    if (const auto colon = msg.find(": "); colon != std::string_view::npos) msg.remove_prefix(colon + 2);
    const std::string word(msg.substr(0, msg.find(' ')));
    for (const auto& f : fields())
      if (f.key == section + "." + word || f.key == section + "_" + word) throw ConfigError(f.key, e.what());
    throw ConfigError(section, e.what());
  }
}

}  // namespace

void RunConfig::validate() const {
  if (world.concepts < 1) throw ConfigError("world.concepts", "must be at least 1");
  if (!(world.radius > 0.0)) throw ConfigError("world.radius", "must be positive");
  if (!(world.stdev > 0.0)) throw ConfigError("world.stdev", "must be positive");
  for (int id : world.erased)
    if (id < 0 || id >= world.concepts) throw ConfigError("world.erased", "id out of range");
  if (world.embed_dim != 0 && world.embed_dim < static_cast<std::size_t>(world.concepts) + 1)
    throw ConfigError("world.embed_dim", "must be 0 or at least concepts + 1");
  if (schedule.steps < 1) throw ConfigError("schedule.steps", "must be at least 1");
  if (!(schedule.beta_start > 0.0 && schedule.beta_start <= schedule.beta_end && schedule.beta_end < 1.0))
    throw ConfigError("schedule.beta_start", "need 0 < beta_start <= beta_end < 1");
  if (output_root.empty()) throw ConfigError("output.root", "must not be empty");
  check("train", [&] { train.validate(); });
  check("erasure", [&] { erasure.validate(); });
  check("lure", [&] { lure.validate(); });
  check("lsis", [&] { lsis.validate(schedule.steps); });
  check("diagnose.ift", [&] { diagnose.ift.validate(); });
  if (eval.n_per_concept < 1) throw ConfigError("eval.n_per_concept", "must be at least 1");
  if (eval.bandwidth < 0.0) throw ConfigError("eval.bandwidth", "must be positive or 'median'");
  if (diagnose.rho_batch < 1) throw ConfigError("diagnose.rho_batch", "must be at least 1");
  if (diagnose.entangle_batch < 1) throw ConfigError("diagnose.entangle_batch", "must be at least 1");
  if (diagnose.alignment_mc < 1) throw ConfigError("diagnose.alignment_mc", "must be at least 1");
}

Override parse_override(std::string_view arg) {
  const auto eq = arg.find('=');
  if (eq == std::string_view::npos)
    throw ConfigError(std::string(arg), "override must look like key=value");
  return {std::string(trim(arg.substr(0, eq))), std::string(trim(arg.substr(eq + 1)))};
}

RunConfig parse_config(std::string_view text, const std::vector<Override>& overrides) {
  RunConfig cfg;
  std::map<std::string, std::size_t> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("line " + std::to_string(line_no), "expected 'key = value'");
    const std::string key(trim(line.substr(0, eq)));
    if (seen.count(key)) throw ConfigError(key, "set twice (line " + std::to_string(line_no) + ")");
    seen[key] = line_no;
    apply(cfg, key, line.substr(eq + 1));
  }
  for (const auto& [k, v] : overrides) apply(cfg, k, v);
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path, const std::vector<Override>& overrides) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const std::exception& e) {
    throw ConfigError("config", "cannot read " + path.string());
  }
  return parse_config(text, overrides);
}

std::string canonical_config(const RunConfig& cfg) {
  std::string out;
  for (const auto& f : fields()) {
    if (f.key == "output.root") continue;  // where a run lands does not change what it computes
    out += f.key + " = " + f.get(cfg) + "\n";
  }
  return out;
}

std::uint64_t config_hash(const RunConfig& cfg) { return hash_string(canonical_config(cfg)); }

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& f : fields()) keys.push_back(f.key);
  return keys;
}

std::uint64_t stage_seed(std::uint64_t master, std::string_view stage, std::uint64_t index) {
  return hash_combine(hash_combine(master, hash_string(stage)), index);
}

std::filesystem::path resolve_output_root(const RunConfig& cfg) {
  if (const char* env = std::getenv(kOutputRootEnv); env != nullptr && *env != '\0') return env;
  return cfg.output_root;
}

}  // namespace lure
