#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "actdet/bgfilter.hpp"
#include "actdet/clipnet.hpp"
#include "actdet/motionenc.hpp"
#include "actdet/refiner.hpp"
#include "actdet/scorer.hpp"
#include "actdet/synthgen.hpp"
#include "actdet/tracklet.hpp"
#include "actdet/trainer.hpp"

namespace actdet {

struct ClassifierPathConfig {
  HeadMode mode = HeadMode::kPartAttention;
  InputMode input = InputMode::kRgb;
  bool operator==(const ClassifierPathConfig&) const = default;
};

struct ClassifierConfig {
  double lr = 0.01;
  double momentum = 0.9;
  int epochs = 10;
  int batch = 8;
  bool flip_augment = true;
  double motion_scale = 64.0;
  ClassifierPathConfig person{HeadMode::kPartAttention, InputMode::kRgb};
  ClassifierPathConfig vehicle{HeadMode::kGapOnly, InputMode::kRgbMotion};
  std::vector<ConvSpec> convs{{16, {2, 2, 2}}, {32, {1, 2, 2}}};
  bool operator==(const ClassifierConfig&) const = default;
};

struct BackgroundConfig {
  MixtureConfig mixture;
  int median_kernel = 3;
  StaticFilterThresholds thresholds;
  bool save_masks = false;
};

struct ScenesConfig {
  int n_videos = 3;
  int frames = 160;
  int width = 128;
  int height = 128;
  int actors_per_video = 8;
  int vehicle_len = 32;
  int person_len = 64;
  int first_activity_frame = 8;
  bool parked_scene = true;
  int burn_in = 100;
  double noise_sigma = 2.0 / 255.0;
  double jitter = 0.0;
};

struct TrainingDataConfig {
  int n_train = 200;
  int n_test = 100;
};

struct PipelineConfig {
  std::uint64_t seed = 0;
  int jobs = 1;
  std::string out_dir = "run";
  ScenesConfig scenes;
  TrainingDataConfig training_data;
  TrackerConfig tracker;
  ProposalConfig proposals;
  CropMode crop_mode = CropMode::kBoxFollowing;
  BackgroundConfig background;
  ClassifierConfig classifier;
  RefinerConfig refiner;
  double scorer_tiou = 0.2;
  double tfa_limit = 0.2;
  Interpolation interpolation = Interpolation::kStep;
  bool det_csv = true;
};

// Strict parse: unknown keys and out-of-range values raise ConfigError with
// the dotted field path. Missing keys keep their defaults.
PipelineConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const PipelineConfig& config);
PipelineConfig load_config(const std::filesystem::path& path);

// Stable per-stage seed derived from the global seed and the stage name.
std::uint64_t stage_seed(std::uint64_t seed, const std::string& stage);

}  // namespace actdet
