#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "actdet/clip_tensor.hpp"

namespace actdet {

// Dense T x H x W x C volume used inside the network.
template <typename Real>
struct Volume {
  int t = 0, h = 0, w = 0, c = 0;
  std::vector<Real> data;

  Volume() = default;
  Volume(int t_, int h_, int w_, int c_) : t(t_), h(h_), w(w_), c(c_), data(static_cast<std::size_t>(t_) * h_ * w_ * c_, Real(0)) {}
  std::size_t positions() const { return static_cast<std::size_t>(t) * h * w; }
  std::size_t index(int ti, int yi, int xi, int ci) const {
    return ((static_cast<std::size_t>(ti) * h + yi) * w + xi) * c + ci;
  }
  Real& at(int ti, int yi, int xi, int ci) { return data[index(ti, yi, xi, ci)]; }
  Real at(int ti, int yi, int xi, int ci) const { return data[index(ti, yi, xi, ci)]; }
};

template <typename Real> using FeatureMaps = Volume<Real>;
template <typename Real> using ScoreMaps = Volume<Real>;

enum class HeadMode { kPartAttention, kGapOnly };

struct ConvSpec {
  int out_channels = 16;
  std::array<int, 3> stride{1, 1, 1};  // (time, height, width)
  bool operator==(const ConvSpec&) const = default;
};

// 3x3x3 convolutions with unit padding and ReLU, no pooling after the last
// one, followed by a 1x1 score head.
struct ArchConfig {
  int input_channels = 3;
  std::vector<ConvSpec> convs{{16, {2, 2, 2}}, {32, {1, 2, 2}}};
  int num_classes = 6;
  // Fixed per-channel multiplier applied to the clip before the first conv.
  // Empty means all ones.
  std::vector<double> input_scale;
  bool operator==(const ArchConfig&) const = default;
};

template <typename Real>
struct ConvLayer {
  int in_channels = 0;
  int out_channels = 0;
  std::array<int, 3> stride{1, 1, 1};
  std::vector<Real> weight;  // [kt][kh][kw][in][out]
  std::vector<Real> bias;    // [out]
};

// Per-class weights of the global, top and bottom scores. lambda1 is fixed
// to ones; lambda2 and lambda3 are learned and start at zero.
template <typename Real>
struct PartWeights {
  std::vector<Real> lambda1;
  std::vector<Real> lambda2;
  std::vector<Real> lambda3;
};

template <typename Real>
struct ModelParams {
  ArchConfig arch;
  std::vector<ConvLayer<Real>> convs;
  std::vector<Real> head_weight;  // [feature channel][class]
  std::vector<Real> head_bias;    // [class]
  PartWeights<Real> part;

  int num_classes() const { return arch.num_classes; }
  int feature_channels() const { return convs.empty() ? arch.input_channels : convs.back().out_channels; }

  // Learnable tensors in checkpoint order: conv{i}.weight, conv{i}.bias,
  // head.weight, head.bias, lambda2, lambda3.
  void for_each_tensor(const std::function<void(const std::string&, std::vector<Real>&)>& fn);
  void for_each_tensor(const std::function<void(const std::string&, const std::vector<Real>&)>& fn) const;
  std::size_t parameter_count() const;
};

// He-normal conv weights, scaled-normal head, zero biases and zero lambdas.
template <typename Real>
ModelParams<Real> init_params(const ArchConfig& arch, std::uint64_t seed);

// Same architecture and values with zero-filled tensors.
template <typename Real>
ModelParams<Real> zeros_like(const ModelParams<Real>& params);

template <typename To, typename From>
ModelParams<To> convert_params(const ModelParams<From>& params);

template <typename Real>
Volume<Real> to_volume(const ClipTensor& clip);

// Output extent of a 3-tap, unit-padded convolution.
inline int conv_output_size(int in, int stride) { return (in - 1) / stride + 1; }

template <typename Real>
FeatureMaps<Real> extract_features(const ClipTensor& clip, const ModelParams<Real>& params);

template <typename Real>
ScoreMaps<Real> score_head(const FeatureMaps<Real>& features, const ModelParams<Real>& params);

// s1 = GAP over the whole volume; s2 / s3 = GMP over the top / bottom rows.
// The top part takes ceil(H / 2) rows. argmax_* hold flat position indices
// (t * H + y) * W + x of the first maximum found in scan order.
template <typename Real>
struct PooledScores {
  std::vector<Real> s1, s2, s3;
  std::vector<std::size_t> argmax_top, argmax_bottom;
};

template <typename Real>
PooledScores<Real> pool_scores(const ScoreMaps<Real>& scores);

template <typename Real>
std::vector<Real> aggregate(std::span<const Real> s1, std::span<const Real> s2, std::span<const Real> s3,
                            const PartWeights<Real>& weights);

template <typename Real>
std::vector<Real> softmax(std::span<const Real> logits);

template <typename Real>
struct ForwardResult {
  std::vector<Real> scores;
  std::vector<Real> probabilities;
};

template <typename Real>
ForwardResult<Real> forward(const ClipTensor& clip, const ModelParams<Real>& params, HeadMode mode);

struct LabeledClip {
  const ClipTensor* clip = nullptr;
  int label = 0;
};

template <typename Real>
struct LossAndGrads {
  Real loss = 0;
  int correct = 0;
  ModelParams<Real> grads;
};

// Mean softmax cross-entropy over the batch and its gradient with respect to
// every learnable tensor. Samples are evaluated on up to `jobs` threads and
// reduced in batch order, so results do not depend on `jobs`.
template <typename Real>
LossAndGrads<Real> loss_and_grads(std::span<const LabeledClip> batch, const ModelParams<Real>& params,
                                  HeadMode mode, int jobs = 1);

// Per-class confidences of each window plus per-frame confidences, where a
// frame takes the confidence of the window covering it (averaged when windows
// overlap).
struct WindowScores {
  int t0 = 0;
  int t1 = 0;
  std::vector<double> confidences;
};

struct ProposalScores {
  std::vector<WindowScores> windows;
  int first_frame = 0;
  std::vector<std::vector<double>> frame_confidences;  // [frame - first_frame][class]
};

ProposalScores classify_proposal(std::span<const ClipTensor> window_clips, std::span<const std::pair<int, int>> spans,
                                 const ModelParams<float>& params, HeadMode mode);

// JSON manifest `<base>.json` (architecture, tensor names and shapes, seed,
// epoch, head mode) and little-endian float32 payload `<base>.bin` in
// manifest order.
struct CheckpointInfo {
  std::uint64_t seed = 0;
  int epoch = 0;
  HeadMode mode = HeadMode::kPartAttention;
  std::vector<std::string> class_names;
  std::string input = "rgb";
};

void save_checkpoint(const ModelParams<float>& params, const CheckpointInfo& info, const std::filesystem::path& base);
ModelParams<float> load_checkpoint(const std::filesystem::path& base, CheckpointInfo* info = nullptr);

std::string to_string(HeadMode mode);
HeadMode head_mode_from_string(const std::string& s);

}  // namespace actdet
