#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "lure/pipeline/config.hpp"

namespace lure {

inline constexpr const char* kMetricsFormatVersion = "1.0";

const std::vector<std::string>& stage_names();

// Artifact file names inside a run directory.
namespace artifact {
inline constexpr const char* kWorld = "world.txt";
inline constexpr const char* kConfig = "config.txt";
inline constexpr const char* kBase = "theta0.ckpt";
inline constexpr const char* kErased = "theta_e.ckpt";
inline constexpr const char* kReawakened = "theta_star.ckpt";
inline constexpr const char* kVerifier = "verifier.ckpt";
inline constexpr const char* kExemplars = "exemplars.csv";
inline constexpr const char* kLossBase = "loss_base.csv";
inline constexpr const char* kLossErase = "loss_erase.csv";
inline constexpr const char* kLossLure = "loss_lure.csv";
inline constexpr const char* kSamplesBase = "samples_base.csv";
inline constexpr const char* kSamplesErased = "samples_erased.csv";
inline constexpr const char* kSamplesReawakened = "samples_reawakened.csv";
inline constexpr const char* kSamplesLsis = "samples_lsis.csv";
inline constexpr const char* kLsisStats = "lsis_attempts.csv";
inline constexpr const char* kEval = "eval.json";
inline constexpr const char* kDiagnostics = "diagnostics.json";
inline constexpr const char* kMetrics = "metrics.json";
inline constexpr const char* kReport = "report.txt";
inline constexpr const char* kTimings = "timings.json";
inline constexpr const char* kPlotDir = "plot";
}  // namespace artifact

// Runs one named stage against the resolved output root. Throws ConfigError
// for unknown stages, DependencyError when an upstream artifact is missing.
void run_stage(const std::string& stage, const RunConfig& cfg);
// Every stage in order.
void run_all(const RunConfig& cfg);

// Per-checkpoint, per-concept scatter CSVs and copies of the loss traces under
// <run_dir>/plot.
void emit_plot_data(const std::filesystem::path& run_dir);

// Parses a metrics document, rejecting a format_version with an unknown major.
std::string read_metrics_checked(const std::filesystem::path& path);

struct SampleRow {
  Point2 z{};
  int concept_id = 0;
  bool accepted = true;
};
std::string samples_csv(const std::vector<SampleRow>& rows);
std::vector<SampleRow> parse_samples_csv(std::string_view text);

}  // namespace lure
