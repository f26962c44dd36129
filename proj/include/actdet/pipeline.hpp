#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "actdet/config.hpp"

namespace actdet {

// Where each stage reads and writes. Ablation variants share the upstream
// directories and get their own model / classify / refine / score folders.
struct RunLayout {
  std::filesystem::path scenes;
  std::filesystem::path track;
  std::filesystem::path filter;
  std::filesystem::path models;
  std::filesystem::path classify;
  std::filesystem::path refine;
  std::filesystem::path score;
};

RunLayout layout_for(const std::filesystem::path& out_dir);

struct RunOptions {
  bool skip_filter = false;
  bool ablation = false;
};

const std::vector<std::string>& stage_names();

// Error raised inside a stage, tagged with the stage name. The wrapped
// exception kind decides the exit code.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, int exit_code, const std::string& what)
      : std::runtime_error(stage + ": " + what), stage_(std::move(stage)), exit_code_(exit_code) {}
  const std::string& stage() const { return stage_; }
  int exit_code() const { return exit_code_; }

 private:
  std::string stage_;
  int exit_code_;
};

enum ExitCode { kExitOk = 0, kExitConfig = 2, kExitMissingInput = 3, kExitInternal = 4 };

void stage_generate(const PipelineConfig& config, const RunLayout& layout);
void stage_track(const PipelineConfig& config, const RunLayout& layout);
void stage_filter(const PipelineConfig& config, const RunLayout& layout, bool skip_filter);
void stage_train(const PipelineConfig& config, const RunLayout& layout);
void stage_classify(const PipelineConfig& config, const RunLayout& layout);
void stage_refine(const PipelineConfig& config, const RunLayout& layout);
void stage_score(const PipelineConfig& config, const RunLayout& layout);

// Runs train → classify → refine → score once per {gap_only, part_attention}
// x {rgb, rgb_motion} variant and writes ablation/table.{json,txt}.
void run_ablation(const PipelineConfig& config, const RunLayout& layout);

// Runs one named stage (or "all"). Throws StageError.
void run_stage(const std::string& stage, const PipelineConfig& config, const RunOptions& options);

// Every stage in order, plus the ablation when requested.
void run_all(const PipelineConfig& config, const RunOptions& options);

}  // namespace actdet
