#include "actdet/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "actdet/errors.hpp"

namespace actdet {

std::string to_string(InputMode mode) { return mode == InputMode::kRgb ? "rgb" : "rgb_motion"; }

InputMode input_mode_from_string(const std::string& s) {
  if (s == "rgb") return InputMode::kRgb;
  if (s == "rgb_motion") return InputMode::kRgbMotion;
  throw ContractViolation("unknown input mode '" + s + "'");
}

int input_channels(InputMode mode) { return mode == InputMode::kRgb ? 3 : 5; }

ClipTensor make_input(const MotionSample& sample, InputMode mode) {
  return mode == InputMode::kRgb ? sample.rgb : concat_channels(sample.rgb, sample.motion);
}

int class_index(const std::vector<std::string>& class_names, const std::string& label) {
  const auto it = std::find(class_names.begin(), class_names.end(), label);
  if (it == class_names.end()) throw ContractViolation("label '" + label + "' is not a known class");
  return static_cast<int>(it - class_names.begin());
}

namespace {

bool is_turn(const std::string& label) { return mirrored_label(label) != label; }

}  // namespace

TrainResult train_from(ModelParams<float> params, std::span<const MotionSample> dataset,
                       const std::vector<std::string>& class_names, const TrainConfig& config) {
  if (dataset.empty()) throw ContractViolation("train: empty dataset");
  if (config.batch < 1 || config.epochs < 0) throw ContractViolation("train: batch must be >= 1, epochs >= 0");

  std::vector<ClipTensor> inputs(dataset.size());
  std::vector<ClipTensor> flipped(dataset.size());
  std::vector<int> labels(dataset.size()), flipped_labels(dataset.size());
  std::vector<char> turn(dataset.size(), 0);
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    inputs[i] = make_input(dataset[i], config.input);
    labels[i] = class_index(class_names, dataset[i].label);
    if (config.flip_augment && is_turn(dataset[i].label)) {
      const auto mirror = flip_horizontal(dataset[i]);
      flipped[i] = make_input(mirror, config.input);
      flipped_labels[i] = class_index(class_names, mirror.label);
      turn[i] = 1;
    }
  }

  std::vector<std::vector<float>> velocity;
  params.for_each_tensor([&](const std::string&, const std::vector<float>& v) { velocity.emplace_back(v.size(), 0.0f); });

  std::mt19937_64 rng(config.seed ^ 0x5eedULL);
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);

  TrainResult result;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<char> use_flip(dataset.size(), 0);
    std::bernoulli_distribution coin(0.5);
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      if (turn[i]) use_flip[i] = coin(rng) ? 1 : 0;
    }

    double loss_sum = 0.0;
    int correct = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch));
      std::vector<LabeledClip> batch;
      batch.reserve(end - start);
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t i = order[k];
        if (use_flip[i]) {
          batch.push_back({&flipped[i], flipped_labels[i]});
        } else {
          batch.push_back({&inputs[i], labels[i]});
        }
      }
      const auto lg = loss_and_grads<float>(batch, params, config.mode, config.jobs);
      loss_sum += static_cast<double>(lg.loss) * static_cast<double>(batch.size());
      correct += lg.correct;

      std::vector<const std::vector<float>*> grads;
      lg.grads.for_each_tensor([&](const std::string&, const std::vector<float>& v) { grads.push_back(&v); });
      std::size_t ti = 0;
      const auto lr = static_cast<float>(config.lr);
      const auto mu = static_cast<float>(config.momentum);
      params.for_each_tensor([&](const std::string&, std::vector<float>& p) {
        auto& vel = velocity[ti];
        const auto& g = *grads[ti];
        for (std::size_t k = 0; k < p.size(); ++k) {
          vel[k] = mu * vel[k] + g[k];
          p[k] -= lr * vel[k];
        }
        ++ti;
      });
    }
    result.metrics.push_back({epoch, loss_sum / static_cast<double>(dataset.size()),
                              static_cast<double>(correct) / static_cast<double>(dataset.size())});
  }
  result.params = std::move(params);
  return result;
}

TrainResult train(std::span<const MotionSample> dataset, const std::vector<std::string>& class_names,
                  const TrainConfig& config) {
  if (dataset.empty()) throw ContractViolation("train: empty dataset");
  ArchConfig arch = config.arch;
  arch.input_channels = input_channels(config.input);
  arch.num_classes = static_cast<int>(class_names.size());
  arch.input_scale.clear();
  if (config.input == InputMode::kRgbMotion && config.motion_scale != 1.0) {
    arch.input_scale = {1.0, 1.0, 1.0, config.motion_scale, config.motion_scale};
  }
  return train_from(init_params<float>(arch, config.seed), dataset, class_names, config);
}

Evaluation evaluate(const ModelParams<float>& params, std::span<const MotionSample> dataset,
                    const std::vector<std::string>& class_names, HeadMode mode, InputMode input) {
  Evaluation ev;
  const std::size_t n = class_names.size();
  std::vector<int> hits(n, 0), totals(n, 0);
  int correct = 0;
  for (const auto& s : dataset) {
    const int label = class_index(class_names, s.label);
    const auto fwd = forward<float>(make_input(s, input), params, mode);
    const int pred = static_cast<int>(std::max_element(fwd.probabilities.begin(), fwd.probabilities.end()) -
                                      fwd.probabilities.begin());
    ev.predictions.push_back(pred);
    ev.probabilities.emplace_back(fwd.probabilities.begin(), fwd.probabilities.end());
    ++totals[static_cast<std::size_t>(label)];
    if (pred == label) {
      ++hits[static_cast<std::size_t>(label)];
      ++correct;
    }
  }
  ev.accuracy = dataset.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(dataset.size());
  for (std::size_t k = 0; k < n; ++k) {
    ev.recall.push_back(totals[k] ? static_cast<double>(hits[k]) / totals[k] : std::numeric_limits<double>::quiet_NaN());
  }
  return ev;
}

}  // namespace actdet
