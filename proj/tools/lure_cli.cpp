// Command-line front end: lure_cli <stage> --config <path> [--set key=value]...
#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lure/core/errors.hpp"
#include "lure/pipeline/config.hpp"
#include "lure/pipeline/stages.hpp"

namespace {

enum Exit { kOk = 0, kOther = 1, kConfig = 2, kDependency = 3, kNumeric = 4 };

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"concept erasure / reawakening laboratory"};
  std::string stage;
  std::string config_path;
  std::vector<std::string> sets;
  std::string stages_help = "one of: all";
  for (const auto& s : lure::stage_names()) stages_help += ", " + s;
  app.add_option("stage", stage, stages_help)->required();
  app.add_option("--config", config_path, "run configuration file (key = value lines)")->required();
  app.add_option("--set", sets, "override a configuration key, key=value (repeatable)");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    std::vector<lure::Override> overrides;
    for (const auto& s : sets) overrides.push_back(lure::parse_override(s));
    const auto cfg = lure::load_config(config_path, overrides);
    if (stage == "all") {
      lure::run_all(cfg);
    } else {
      lure::run_stage(stage, cfg);
    }
    std::printf("%s: ok (%s)\n", stage.c_str(), lure::resolve_output_root(cfg).string().c_str());
    return kOk;
  } catch (const lure::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfig;
  } catch (const lure::DependencyError& e) {
    std::fprintf(stderr, "dependency error: %s\n", e.what());
    return kDependency;
  } catch (const lure::NumericFailure& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return kNumeric;
  } catch (const lure::InvalidArgument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kOther;
  }
}
