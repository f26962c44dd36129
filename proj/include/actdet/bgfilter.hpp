#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "actdet/bbox.hpp"
#include "actdet/tracklet.hpp"

namespace actdet {

// Constants of the adaptive per-pixel Gaussian mixture. Intensities are on the
// 0..255 scale.
struct MixtureConfig {
  int max_components = 4;
  double learning_rate = 0.005;
  double match_sigmas = 3.0;
  double background_ratio = 0.9;
  double init_weight = 0.05;
  double init_variance = 15.0 * 15.0;
  double min_variance = 4.0;
  double max_variance = 5.0 * 15.0 * 15.0;
};

struct MixtureComponent {
  double weight = 0.0;
  double mean = 0.0;
  double variance = 0.0;
};

// Mixture of one pixel, kept sorted by weight / sigma, strongest first.
struct PixelMixture {
  std::vector<MixtureComponent> components;
};

struct ForegroundMask {
  int frame = 0;
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> cells;  // row-major, 1 = foreground

  ForegroundMask() = default;
  ForegroundMask(int frame_index, int h, int w) : frame(frame_index), height(h), width(w), cells(static_cast<std::size_t>(h) * w, 0) {}
  std::uint8_t at(int y, int x) const { return cells[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t& at(int y, int x) { return cells[static_cast<std::size_t>(y) * width + x]; }
  std::size_t count() const;
};

class BackgroundModel {
 public:
  BackgroundModel(int height, int width, MixtureConfig config = {});

  int height() const { return height_; }
  int width() const { return width_; }
  bool initialized() const { return frames_seen_ > 0; }
  const MixtureConfig& config() const { return config_; }
  const PixelMixture& pixel(int y, int x) const { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }

  // Feeds one grayscale frame (row-major, 0..255) and returns its mask. The
  // first frame seeds one component per pixel and yields an empty mask.
  ForegroundMask update(std::span<const float> intensities, int frame_index);
  ForegroundMask update(std::span<const float> intensities, int frame_index, double learning_rate);

 private:
  bool update_pixel(PixelMixture& mix, double value, double alpha) const;

  int height_;
  int width_;
  MixtureConfig config_;
  long frames_seen_ = 0;
  std::vector<PixelMixture> pixels_;
};

// k x k windowed median with replicated borders. k must be odd.
ForegroundMask median_denoise(const ForegroundMask& mask, int k);

// Mean over the proposal's real frames of (foreground pixels inside the box /
// box area). `masks` is indexed by frame number.
double foreground_rate(const Proposal& proposal, std::span<const ForegroundMask> masks);

struct StaticFilterThresholds {
  double person = 0.05;
  double vehicle = 0.15;
  double for_class(ObjClass c) const { return c == ObjClass::kPerson ? person : vehicle; }
};

// Keeps proposals whose foreground rate reaches the threshold of their class.
// Order is preserved.
std::vector<Proposal> filter_static(std::span<const Proposal> proposals,
                                    std::span<const ForegroundMask> masks,
                                    const StaticFilterThresholds& thresholds);

// Run-length encoding used for persisted masks: run lengths alternate,
// starting with a (possibly empty) run of background cells.
std::vector<int> encode_runs(const ForegroundMask& mask);
ForegroundMask decode_runs(std::span<const int> runs, int frame, int height, int width);

}  // namespace actdet
