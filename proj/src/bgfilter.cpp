#include "actdet/bgfilter.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "actdet/errors.hpp"

namespace actdet {

std::size_t ForegroundMask::count() const {
  return static_cast<std::size_t>(std::count(cells.begin(), cells.end(), std::uint8_t{1}));
}

BackgroundModel::BackgroundModel(int height, int width, MixtureConfig config)
    : height_(height), width_(width), config_(config) {
  if (height <= 0 || width <= 0) throw ContractViolation("BackgroundModel: empty frame size");
  if (config.max_components < 1) throw ContractViolation("BackgroundModel: need at least one component");
  pixels_.resize(static_cast<std::size_t>(height) * width);
}

ForegroundMask BackgroundModel::update(std::span<const float> intensities, int frame_index) {
  return update(intensities, frame_index, config_.learning_rate);
}

ForegroundMask BackgroundModel::update(std::span<const float> intensities, int frame_index,
                                       double learning_rate) {
  if (intensities.size() != pixels_.size()) {
    throw ContractViolation("BackgroundModel: frame has " + std::to_string(intensities.size()) +
                            " pixels, model expects " + std::to_string(pixels_.size()));
  }
  if (!(learning_rate > 0.0 && learning_rate < 1.0)) {
    throw ContractViolation("BackgroundModel: learning rate must lie in (0, 1)");
  }
  ForegroundMask mask(frame_index, height_, width_);
  if (frames_seen_ == 0) {
    for (std::size_t i = 0; i < pixels_.size(); ++i) {
      pixels_[i].components = {{1.0, static_cast<double>(intensities[i]), config_.init_variance}};
    }
  } else {
    for (std::size_t i = 0; i < pixels_.size(); ++i) {
      mask.cells[i] = update_pixel(pixels_[i], intensities[i], learning_rate) ? 1 : 0;
    }
  }
  ++frames_seen_;
  return mask;
}

bool BackgroundModel::update_pixel(PixelMixture& mix, double value, double alpha) const {
  auto& comps = mix.components;

  int match = -1;
  double best = 0.0;
  const double radius2 = config_.match_sigmas * config_.match_sigmas;
  for (std::size_t k = 0; k < comps.size(); ++k) {
    const double d = value - comps[k].mean;
    const double m2 = d * d / comps[k].variance;
    if (m2 < radius2 && (match < 0 || m2 < best)) {
      match = static_cast<int>(k);
      best = m2;
    }
  }

  // Background = shortest prefix whose weight reaches background_ratio.
  std::size_t background_size = comps.size();
  double cumulative = 0.0;
  for (std::size_t k = 0; k < comps.size(); ++k) {
    cumulative += comps[k].weight;
    if (cumulative >= config_.background_ratio) {
      background_size = k + 1;
      break;
    }
  }
  const bool foreground = match < 0 || static_cast<std::size_t>(match) >= background_size;

  for (std::size_t k = 0; k < comps.size(); ++k) {
    if (static_cast<int>(k) == match) {
      auto& c = comps[k];
      c.weight += alpha * (1.0 - c.weight);
      const double rho = std::min(1.0, alpha / c.weight);
      const double d = value - c.mean;
      c.mean += rho * d;
      c.variance += rho * (d * d - c.variance);
      c.variance = std::clamp(c.variance, config_.min_variance, config_.max_variance);
    } else {
      comps[k].weight *= (1.0 - alpha);
    }
  }
  if (match < 0) {
    const MixtureComponent fresh{config_.init_weight, value, config_.init_variance};
    if (comps.size() < static_cast<std::size_t>(config_.max_components)) {
      comps.push_back(fresh);
    } else {
      comps.back() = fresh;
    }
  }

  const double total = std::accumulate(comps.begin(), comps.end(), 0.0,
                                       [](double s, const MixtureComponent& c) { return s + c.weight; });
  for (auto& c : comps) c.weight /= total;
  std::stable_sort(comps.begin(), comps.end(), [](const MixtureComponent& a, const MixtureComponent& b) {
    return a.weight / std::sqrt(a.variance) > b.weight / std::sqrt(b.variance);
  });
  return foreground;
}

ForegroundMask median_denoise(const ForegroundMask& mask, int k) {
  if (k <= 0 || k % 2 == 0) throw ContractViolation("median_denoise: kernel size must be odd and positive");
  ForegroundMask out(mask.frame, mask.height, mask.width);
  const int r = k / 2;
  const int majority = (k * k) / 2;
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      int ones = 0;
      for (int dy = -r; dy <= r; ++dy) {
        const int yy = std::clamp(y + dy, 0, mask.height - 1);
        for (int dx = -r; dx <= r; ++dx) {
          ones += mask.at(yy, std::clamp(x + dx, 0, mask.width - 1));
        }
      }
      out.at(y, x) = ones > majority ? 1 : 0;
    }
  }
  return out;
}

namespace {

// Pixels whose centers fall inside [lo, lo + extent), clamped to [0, limit).
std::pair<int, int> covered_range(double lo, double extent, int limit) {
  int first = static_cast<int>(std::ceil(lo - 0.5));
  int last = static_cast<int>(std::ceil(lo + extent - 0.5));
  first = std::clamp(first, 0, limit);
  last = std::clamp(last, 0, limit);
  if (last <= first) {
    // Sub-pixel box: take the pixel under its center.
    const int c = std::clamp(static_cast<int>(std::floor(lo + 0.5 * extent)), 0, limit - 1);
    return {c, c + 1};
  }
  return {first, last};
}

}  // namespace

double foreground_rate(const Proposal& proposal, std::span<const ForegroundMask> masks) {
  const int frames = proposal.valid_frames > 0 ? proposal.valid_frames : proposal.t1 - proposal.t0;
  if (frames <= 0) throw ContractViolation("foreground_rate: proposal covers no frames");
  double sum = 0.0;
  for (int k = 0; k < frames; ++k) {
    const int f = proposal.t0 + k;
    if (f < 0 || static_cast<std::size_t>(f) >= masks.size() || masks[static_cast<std::size_t>(f)].frame != f) {
      throw ContractViolation("foreground_rate: missing mask for frame " + std::to_string(f));
    }
    const auto& m = masks[static_cast<std::size_t>(f)];
    const BBox& b = proposal.boxes[static_cast<std::size_t>(k)];
    const auto [x0, x1] = covered_range(b.x, b.w, m.width);
    const auto [y0, y1] = covered_range(b.y, b.h, m.height);
    int fg = 0;
    for (int y = y0; y < y1; ++y) {
      for (int x = x0; x < x1; ++x) fg += m.at(y, x);
    }
    sum += static_cast<double>(fg) / static_cast<double>((x1 - x0) * (y1 - y0));
  }
  return sum / frames;
}

std::vector<Proposal> filter_static(std::span<const Proposal> proposals,
                                    std::span<const ForegroundMask> masks,
                                    const StaticFilterThresholds& thresholds) {
  for (const double t : {thresholds.person, thresholds.vehicle}) {
    if (!(t >= 0.0 && t <= 1.0)) throw ContractViolation("filter_static: thresholds must lie in [0, 1]");
  }
  std::vector<Proposal> kept;
  for (const auto& p : proposals) {
    const double threshold = thresholds.for_class(p.obj_class);
    if (threshold <= 0.0 || foreground_rate(p, masks) >= threshold) kept.push_back(p);
  }
  return kept;
}

std::vector<int> encode_runs(const ForegroundMask& mask) {
  std::vector<int> runs;
  std::uint8_t current = 0;
  int length = 0;
  for (const auto c : mask.cells) {
    if (c != current) {
      runs.push_back(length);
      current = c;
      length = 0;
    }
    ++length;
  }
  runs.push_back(length);
  return runs;
}

ForegroundMask decode_runs(std::span<const int> runs, int frame, int height, int width) {
  ForegroundMask mask(frame, height, width);
  std::size_t pos = 0;
  std::uint8_t value = 0;
  for (const int r : runs) {
    if (r < 0 || pos + static_cast<std::size_t>(r) > mask.cells.size()) {
      throw ContractViolation("decode_runs: runs overflow the mask");
    }
    std::fill_n(mask.cells.begin() + static_cast<std::ptrdiff_t>(pos), r, value);
    pos += static_cast<std::size_t>(r);
    value ^= 1;
  }
  if (pos != mask.cells.size()) throw ContractViolation("decode_runs: runs do not cover the mask");
  return mask;
}

}  // namespace actdet
