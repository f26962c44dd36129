#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "actdet/errors.hpp"
#include "actdet/pipeline.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Activity detection pipeline on synthetic surveillance video"};
  std::string stage;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::string out_dir;
  actdet::RunOptions options;

  app.add_option("stage", stage, "generate | track | filter | train | classify | refine | score | all")
      ->required()
      ->check(CLI::IsMember(actdet::stage_names()));
  app.add_option("--config", config_path, "JSON config file");
  app.add_option("--seed", seed, "global seed");
  app.add_option("--jobs", jobs, "worker threads per stage");
  app.add_option("--out-dir", out_dir, "artifact directory");
  app.add_flag("--ablation", options.ablation, "run the head x input ablation after scoring");
  app.add_flag("--skip-filter", options.skip_filter, "keep every proposal in the filter stage");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : actdet::kExitConfig;
  }

  actdet::PipelineConfig config;
  try {
    if (!config_path.empty()) config = actdet::load_config(config_path);
    if (seed) config.seed = *seed;
    if (jobs) {
      if (*jobs < 1) throw actdet::ConfigError("jobs", "must be >= 1");
      config.jobs = *jobs;
    }
    if (!out_dir.empty()) config.out_dir = out_dir;
  } catch (const actdet::ConfigError& e) {
    std::cerr << "config error at '" << e.field() << "': " << e.what() << '\n';
    return actdet::kExitConfig;
  } catch (const actdet::MissingInputError& e) {
    std::cerr << "missing input " << e.artifact() << '\n';
    return actdet::kExitMissingInput;
  }

  try {
    actdet::run_stage(stage, config, options);
  } catch (const actdet::StageError& e) {
    std::cerr << "error in stage " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return actdet::kExitInternal;
  }
  return actdet::kExitOk;
}
