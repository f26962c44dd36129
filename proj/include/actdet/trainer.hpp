#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "actdet/clipnet.hpp"
#include "actdet/motionenc.hpp"

namespace actdet {

enum class InputMode { kRgb, kRgbMotion };

std::string to_string(InputMode mode);
InputMode input_mode_from_string(const std::string& s);
int input_channels(InputMode mode);

// Network input for a sample: the RGB clip, or RGB and motion concatenated.
ClipTensor make_input(const MotionSample& sample, InputMode mode);

struct TrainConfig {
  double lr = 0.01;
  double momentum = 0.9;
  int epochs = 10;
  int batch = 8;
  std::uint64_t seed = 0;
  HeadMode mode = HeadMode::kPartAttention;
  InputMode input = InputMode::kRgb;
  bool flip_augment = false;
  double motion_scale = 1.0;  // network-side multiplier on the dx, dy channels
  int jobs = 1;
  ArchConfig arch;  // input_channels / num_classes are filled in by train()
};

struct EpochMetrics {
  int epoch = 0;
  double loss = 0.0;
  double accuracy = 0.0;
  bool operator==(const EpochMetrics&) const = default;
};

struct TrainResult {
  ModelParams<float> params;
  std::vector<EpochMetrics> metrics;
};

// SGD with momentum on mean cross-entropy. Deterministic for a given seed.
// With flip_augment set, each turn-class sample is mirrored with probability
// 0.5 every epoch. Class ids index `class_names`.
TrainResult train(std::span<const MotionSample> dataset, const std::vector<std::string>& class_names,
                  const TrainConfig& config);

// Continues from existing parameters; used to check that lr = 0 leaves them untouched.
TrainResult train_from(ModelParams<float> params, std::span<const MotionSample> dataset,
                       const std::vector<std::string>& class_names, const TrainConfig& config);

int class_index(const std::vector<std::string>& class_names, const std::string& label);

struct Evaluation {
  double accuracy = 0.0;
  std::vector<int> predictions;
  std::vector<std::vector<double>> probabilities;
  std::vector<double> recall;  // per class; NaN when the class has no samples
};

Evaluation evaluate(const ModelParams<float>& params, std::span<const MotionSample> dataset,
                    const std::vector<std::string>& class_names, HeadMode mode, InputMode input);

}  // namespace actdet
