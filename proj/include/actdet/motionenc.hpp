#pragma once

#include <span>
#include <string>
#include <vector>

#include "actdet/bbox.hpp"
#include "actdet/clip_tensor.hpp"
#include "actdet/tracklet.hpp"

namespace actdet {

// Classifier input for one proposal: RGB clip (3 channels), motion clip
// (channels dx, dy) on the same T x H x W grid, and the activity label.
struct MotionSample {
  ClipTensor rgb;
  ClipTensor motion;
  std::string label;
};

struct Displacement {
  double dx = 0.0;
  double dy = 0.0;
  bool operator==(const Displacement&) const = default;
};

// Top-left corner displacement to the next frame; the last entry is (0, 0).
std::vector<Displacement> displacements(std::span<const BBox> boxes);

// Integer cell range [first, last) covered by [lo, lo + extent) once mapped
// from a crop starting at `origin` with `crop_extent` pixels onto `cells`
// grid cells. Ends are rounded half away from zero and clamped to the grid.
// Returns an empty range when the interval misses the crop entirely.
std::pair<int, int> map_to_grid(double lo, double extent, double origin, double crop_extent, int cells);

// Builds the 2-channel motion clip. `crops` has either one rectangle shared by
// every frame or one rectangle per frame. Each frame's box region holds
// (dx / frame_width, dy / frame_height); every other cell is exactly zero.
ClipTensor encode_motion_clip(std::span<const BBox> boxes, std::span<const Rect> crops, int resized_h,
                              int resized_w, double frame_width, double frame_height);

// Channels [R, G, B, dx, dy].
ClipTensor concat_channels(const ClipTensor& rgb, const ClipTensor& motion);

// Mirrors the width axis of both clips, negates dx and swaps the
// turns_left / turns_right labels.
MotionSample flip_horizontal(const MotionSample& sample);
std::string mirrored_label(const std::string& label);

enum class CropMode {
  kUnion,          // the proposal's single expanded-union rectangle on every frame
  kBoxFollowing,   // fixed-size square centered on each frame's box
};

// Fixed-size squares centered on each box; the side is `margin` times the
// largest box extent in the sequence. Not clamped to the frame.
std::vector<Rect> box_following_crops(std::span<const BBox> boxes, double margin);

// Bilinear resampling of grayscale (C=1) or RGB (C=3) frames in [0, 1] into a
// T x resized_h x resized_w x 3 clip scaled to [-1, 1]. Frame indices past the
// end of the video repeat its last frame; samples outside a frame replicate
// the border.
ClipTensor extract_rgb_clip(const ClipTensor& video, std::span<const int> frame_indices,
                            std::span<const Rect> crops, int resized_h, int resized_w);

// RGB + motion clips for a proposal cut from `video` (grayscale or RGB frames
// in [0, 1]).
MotionSample build_sample(const ClipTensor& video, const Proposal& proposal, CropMode mode, double margin,
                          std::string label = {});

}  // namespace actdet
