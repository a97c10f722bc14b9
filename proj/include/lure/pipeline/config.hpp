#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "lure/diagnostics/diagnostics.hpp"
#include "lure/diffusion/training.hpp"
#include "lure/erasure/erasure.hpp"
#include "lure/lsis/lsis.hpp"
#include "lure/reawaken/lure.hpp"

namespace lure {

struct WorldParams {
  int concepts = 8;
  double radius = 4.0;
  double stdev = 0.3;
  std::vector<int> erased{0, 3};
  std::size_t embed_dim = 0;  // 0 selects concepts + 1
};

struct ScheduleParams {
  int steps = 100;
  double beta_start = 1e-4;
  double beta_end = 0.02;
};

struct EvalParams {
  std::size_t n_per_concept = 500;
  double bandwidth = 0.0;  // 0 selects the median heuristic
};

struct DiagnoseParams {
  std::size_t rho_batch = 64;
  std::size_t entangle_batch = 256;
  std::size_t alignment_mc = 256;
  std::size_t ift_seeds = 20;
  IftConfig ift;
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::string output_root = "runs/default";
  WorldParams world;
  ScheduleParams schedule;
  TrainConfig train;
  ErasureConfig erasure;
  LureConfig lure;
  LsisConfig lsis;
  EvalParams eval;
  DiagnoseParams diagnose;

  // Throws ConfigError naming the offending key.
  void validate() const;
};

using Override = std::pair<std::string, std::string>;

// "key = value" lines; '#' starts a comment. Keys are dotted paths such as
// erasure.gamma. Unknown keys and malformed values raise ConfigError.
RunConfig parse_config(std::string_view text, const std::vector<Override>& overrides = {});
RunConfig load_config(const std::filesystem::path& path, const std::vector<Override>& overrides = {});
// Splits "key=value".
Override parse_override(std::string_view arg);

// Every key with its resolved value, one per line, in a fixed order.
std::string canonical_config(const RunConfig& cfg);
std::uint64_t config_hash(const RunConfig& cfg);
std::vector<std::string> config_keys();

// Seed for stage `stage`, sub-task `index`: a hash of (master, stage, index),
// so adding a stage never moves another stage's seed.
std::uint64_t stage_seed(std::uint64_t master, std::string_view stage, std::uint64_t index = 0);

// Environment variable that replaces output.root when set and non-empty.
inline constexpr const char* kOutputRootEnv = "LURE_OUTPUT_ROOT";
std::filesystem::path resolve_output_root(const RunConfig& cfg);

}  // namespace lure
