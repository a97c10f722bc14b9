#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "lure/core/param_vector.hpp"
#include "lure/diffusion/denoiser.hpp"

namespace lure {

inline constexpr int kCheckpointVersion = 1;

// Versioned text checkpoint: header fields followed by parameter segments
// written with 17 significant digits.
struct Checkpoint {
  std::string kind;
  std::vector<std::pair<std::string, std::string>> fields;
  ParamVector params;

  const std::string& field(const std::string& key) const;
  void set(std::string key, std::string value);
};

std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint parse_checkpoint(std::string_view text);

Checkpoint denoiser_checkpoint(const Denoiser& d, const NoiseSchedule& s, std::uint64_t world_hash);

struct LoadedDenoiser {
  Denoiser model;
  NoiseSchedule schedule;
  std::uint64_t world_hash = 0;
};
LoadedDenoiser denoiser_from_checkpoint(const Checkpoint& ckpt);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::string join_sizes(const std::vector<std::size_t>& v);
std::vector<std::size_t> split_sizes(const std::string& s);

}  // namespace lure
