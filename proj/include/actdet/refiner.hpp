#pragma once

#include <span>
#include <string>
#include <vector>

#include "actdet/bbox.hpp"

namespace actdet {

// Confidence of one classified window for one class.
struct WindowDetection {
  std::string video_id;
  int track_id = 0;
  int class_id = 0;
  int t0 = 0;
  int t1 = 0;
  double confidence = 0.0;
};

// Per-frame mean confidence of one (track, class) over [first_frame, first_frame + scores.size()).
struct FrameScoreProfile {
  std::string video_id;
  int track_id = 0;
  int class_id = 0;
  int first_frame = 0;
  std::vector<double> scores;
  std::vector<char> covered;  // frames inside the union of windows
};

struct Detection {
  std::string video_id;
  int class_id = 0;
  int t0 = 0;
  int t1 = 0;
  double confidence = 0.0;
  int track_id = -1;
  BoxSequence boxes;
};

double temporal_iou(int a0, int a1, int b0, int b1);

// Averages the confidences of all windows covering each frame. Frames in
// gaps between windows are marked uncovered and hold 0.
FrameScoreProfile merge_windows(std::span<const WindowDetection> windows);

// For every level theta, each maximal run of covered frames with score >=
// theta becomes a candidate scored by the mean profile over the run.
// Identical spans keep the highest confidence. Output is sorted by (t0, t1).
std::vector<Detection> split_candidates(const FrameScoreProfile& profile, std::span<const double> levels);

// Greedy suppression in descending confidence: a candidate survives when its
// temporal IoU with every survivor of the same class and track is below
// `tiou_threshold`. Ties keep the earlier span.
std::vector<Detection> temporal_nms(std::span<const Detection> candidates, double tiou_threshold);

struct RefinerConfig {
  std::vector<double> levels{0.3, 0.5, 0.7};
  double nms_tiou = 0.5;
};

// Groups windows by (video, track, class), then merges, splits and suppresses.
std::vector<Detection> refine(std::span<const WindowDetection> windows, const RefinerConfig& config);

}  // namespace actdet
