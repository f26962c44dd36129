#include "actdet/motionenc.hpp"

#include <algorithm>
#include <cmath>

#include "actdet/errors.hpp"

namespace actdet {

std::vector<Displacement> displacements(std::span<const BBox> boxes) {
  if (boxes.empty()) throw ContractViolation("displacements: empty box sequence");
  std::vector<Displacement> out(boxes.size());
  for (std::size_t i = 0; i + 1 < boxes.size(); ++i) {
    out[i] = {boxes[i + 1].x - boxes[i].x, boxes[i + 1].y - boxes[i].y};
  }
  return out;
}

std::pair<int, int> map_to_grid(double lo, double extent, double origin, double crop_extent, int cells) {
  const double hi = lo + extent;
  if (hi <= origin || lo >= origin + crop_extent) return {0, 0};
  const double scale = cells / crop_extent;
  int first = static_cast<int>(std::round((lo - origin) * scale));
  int last = static_cast<int>(std::round((hi - origin) * scale));
  first = std::clamp(first, 0, cells);
  last = std::clamp(last, 0, cells);
  if (last <= first) {
    // Thinner than a cell after rounding: keep the cell under the first edge.
    first = std::min(first, cells - 1);
    last = first + 1;
  }
  return {first, last};
}

ClipTensor encode_motion_clip(std::span<const BBox> boxes, std::span<const Rect> crops, int resized_h,
                              int resized_w, double frame_width, double frame_height) {
  if (crops.size() != 1 && crops.size() != boxes.size()) {
    throw ContractViolation("encode_motion_clip: need one crop or one crop per frame");
  }
  if (resized_h <= 0 || resized_w <= 0 || frame_width <= 0.0 || frame_height <= 0.0) {
    throw ContractViolation("encode_motion_clip: non-positive geometry");
  }
  const auto disp = displacements(boxes);
  ClipTensor clip(static_cast<int>(boxes.size()), resized_h, resized_w, 2);
  clip.channel_names = {"dx", "dy"};
  clip.value_scale = "displacement / frame size";
  for (std::size_t t = 0; t < boxes.size(); ++t) {
    const Rect& crop = crops.size() == 1 ? crops[0] : crops[t];
    const BBox& b = boxes[t];
    const auto [c0, c1] = map_to_grid(b.x, b.w, crop.x, crop.w, resized_w);
    const auto [r0, r1] = map_to_grid(b.y, b.h, crop.y, crop.h, resized_h);
    if (c1 <= c0 || r1 <= r0) throw ContractViolation("encode_motion_clip: box lies outside its crop");
    const auto dx = static_cast<float>(disp[t].dx / frame_width);
    const auto dy = static_cast<float>(disp[t].dy / frame_height);
    for (int y = r0; y < r1; ++y) {
      for (int x = c0; x < c1; ++x) {
        clip.at(static_cast<int>(t), y, x, 0) = dx;
        clip.at(static_cast<int>(t), y, x, 1) = dy;
      }
    }
  }
  return clip;
}

ClipTensor concat_channels(const ClipTensor& rgb, const ClipTensor& motion) {
  if (rgb.frames() != motion.frames() || rgb.height() != motion.height() || rgb.width() != motion.width()) {
    throw ContractViolation("concat_channels: T, H, W differ");
  }
  const int c0 = rgb.channels(), c1 = motion.channels();
  ClipTensor out(rgb.frames(), rgb.height(), rgb.width(), c0 + c1);
  out.channel_names = rgb.channel_names;
  out.channel_names.insert(out.channel_names.end(), motion.channel_names.begin(), motion.channel_names.end());
  const std::size_t cells = static_cast<std::size_t>(rgb.frames()) * rgb.height() * rgb.width();
  const float* a = rgb.data().data();
  const float* b = motion.data().data();
  float* o = out.data().data();
  for (std::size_t i = 0; i < cells; ++i) {
    std::copy_n(a + i * c0, c0, o);
    std::copy_n(b + i * c1, c1, o + c0);
    o += c0 + c1;
  }
  return out;
}

namespace {

ClipTensor mirror_width(const ClipTensor& in, int negate_channel) {
  ClipTensor out(in.frames(), in.height(), in.width(), in.channels());
  out.channel_names = in.channel_names;
  out.value_scale = in.value_scale;
  for (int t = 0; t < in.frames(); ++t) {
    for (int y = 0; y < in.height(); ++y) {
      for (int x = 0; x < in.width(); ++x) {
        for (int c = 0; c < in.channels(); ++c) {
          const float v = in.at(t, y, in.width() - 1 - x, c);
          out.at(t, y, x, c) = c == negate_channel ? -v : v;
        }
      }
    }
  }
  return out;
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

std::string mirrored_label(const std::string& label) {
  static const std::string left = "turns_left", right = "turns_right";
  if (ends_with(label, left)) return label.substr(0, label.size() - left.size()) + right;
  if (ends_with(label, right)) return label.substr(0, label.size() - right.size()) + left;
  return label;
}

MotionSample flip_horizontal(const MotionSample& sample) {
  MotionSample out;
  out.rgb = mirror_width(sample.rgb, -1);
  out.motion = mirror_width(sample.motion, 0);
  out.label = mirrored_label(sample.label);
  return out;
}

std::vector<Rect> box_following_crops(std::span<const BBox> boxes, double margin) {
  double side = 0.0;
  for (const auto& b : boxes) side = std::max({side, b.w, b.h});
  side *= margin;
  std::vector<Rect> crops;
  crops.reserve(boxes.size());
  for (const auto& b : boxes) {
    crops.push_back({b.center_x() - 0.5 * side, b.center_y() - 0.5 * side, side, side});
  }
  return crops;
}

ClipTensor extract_rgb_clip(const ClipTensor& video, std::span<const int> frame_indices,
                            std::span<const Rect> crops, int resized_h, int resized_w) {
  if (video.channels() != 1 && video.channels() != 3) {
    throw ContractViolation("extract_rgb_clip: video must have 1 or 3 channels");
  }
  if (crops.size() != 1 && crops.size() != frame_indices.size()) {
    throw ContractViolation("extract_rgb_clip: need one crop or one crop per frame");
  }
  if (video.frames() == 0) throw ContractViolation("extract_rgb_clip: empty video");
  const int T = static_cast<int>(frame_indices.size());
  ClipTensor out(T, resized_h, resized_w, 3);
  out.channel_names = {"R", "G", "B"};
  const int H = video.height(), W = video.width();
  for (int t = 0; t < T; ++t) {
    const int f = std::clamp(frame_indices[static_cast<std::size_t>(t)], 0, video.frames() - 1);
    const Rect& crop = crops.size() == 1 ? crops[0] : crops[static_cast<std::size_t>(t)];
    for (int i = 0; i < resized_h; ++i) {
      const double sy = std::clamp(crop.y + (i + 0.5) * crop.h / resized_h - 0.5, 0.0, H - 1.0);
      const int y0 = static_cast<int>(std::floor(sy));
      const int y1 = std::min(y0 + 1, H - 1);
      const double fy = sy - y0;
      for (int j = 0; j < resized_w; ++j) {
        const double sx = std::clamp(crop.x + (j + 0.5) * crop.w / resized_w - 0.5, 0.0, W - 1.0);
        const int x0 = static_cast<int>(std::floor(sx));
        const int x1 = std::min(x0 + 1, W - 1);
        const double fx = sx - x0;
        for (int c = 0; c < 3; ++c) {
          const int vc = video.channels() == 1 ? 0 : c;
          const double v = (1 - fy) * ((1 - fx) * video.at(f, y0, x0, vc) + fx * video.at(f, y0, x1, vc)) +
                           fy * ((1 - fx) * video.at(f, y1, x0, vc) + fx * video.at(f, y1, x1, vc));
          out.at(t, i, j, c) = static_cast<float>(2.0 * v - 1.0);
        }
      }
    }
  }
  return out;
}

MotionSample build_sample(const ClipTensor& video, const Proposal& proposal, CropMode mode, double margin,
                          std::string label) {
  std::vector<Rect> crops;
  if (mode == CropMode::kUnion) {
    crops = {proposal.crop};
  } else {
    crops = box_following_crops(proposal.boxes, margin);
  }
  std::vector<int> frames(proposal.boxes.size());
  for (std::size_t k = 0; k < frames.size(); ++k) {
    // Padding frames repeat the last real frame.
    const int real = std::min(static_cast<int>(k), std::max(proposal.valid_frames, 1) - 1);
    frames[k] = proposal.t0 + real;
  }
  MotionSample s;
  s.rgb = extract_rgb_clip(video, frames, crops, proposal.resized_h, proposal.resized_w);
  s.motion = encode_motion_clip(proposal.boxes, crops, proposal.resized_h, proposal.resized_w, video.width(),
                                video.height());
  s.label = std::move(label);
  return s;
}

}  // namespace actdet
