#pragma once

#include <span>
#include <vector>

#include "actdet/bbox.hpp"

namespace actdet {

// A chain of boxes on consecutive frames that share one object class.
struct Trajectory {
  int track_id = 0;
  ObjClass obj_class = ObjClass::kPerson;
  BoxSequence boxes;

  int first_frame() const { return boxes.front().frame; }
  int last_frame() const { return boxes.back().frame; }
  int length() const { return static_cast<int>(boxes.size()); }
};

// Spatio-temporal tube handed to the classifier. Covers [t0, t1); frames past
// `t0 + valid_frames` are padding that repeats the last real box.
struct Proposal {
  int proposal_id = 0;
  int track_id = 0;
  ObjClass obj_class = ObjClass::kPerson;
  int t0 = 0;
  int t1 = 0;
  int valid_frames = 0;
  BoxSequence boxes;
  Rect crop;
  int resized_h = 64;
  int resized_w = 64;
};

struct TrackerConfig {
  double iou_min = 0.3;
  int min_track_len = 8;
};

struct ProposalConfig {
  int clip_len = 32;
  int stride = 16;
  double margin = 1.5;
  int resized_h = 64;
  int resized_w = 64;
};

struct AssociationResult {
  std::vector<Trajectory> extended;
  std::vector<Trajectory> terminated;
  std::vector<Trajectory> started;
};

// One greedy IoU association step. Every detection must sit on the frame
// right after each active track's last frame. Pairs are accepted in
// descending IoU order while both sides are free and IoU >= iou_min; boxes of
// different object classes never pair. New tracks take ids from
// `next_track_id`, which is advanced.
AssociationResult associate_step(std::vector<Trajectory> active,
                                 std::span<const BBox> detections, double iou_min,
                                 int& next_track_id);

// Runs associate_step frame by frame over a stream sorted by frame index.
// Frames without detections terminate every active track. Tracks shorter
// than min_track_len are dropped. Output is ordered by track id.
std::vector<Trajectory> track_video(std::span<const BBox> detections, const TrackerConfig& config);

// Slices a trajectory into clip_len windows every `stride` frames. A trailing
// remainder that no full window reaches is emitted once, padded by repeating
// the last box.
std::vector<Proposal> make_proposals(const Trajectory& traj, const ProposalConfig& config,
                                     int frame_width, int frame_height);

// Union of the boxes scaled about its center by `margin`, clamped to the frame.
Rect expanded_union(std::span<const BBox> boxes, double margin, int frame_width, int frame_height);

}  // namespace actdet
