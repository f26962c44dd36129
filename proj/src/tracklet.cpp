#include "actdet/tracklet.hpp"

#include <algorithm>
#include <limits>
#include <string>
#include <tuple>

#include "actdet/errors.hpp"

namespace actdet {

AssociationResult associate_step(std::vector<Trajectory> active,
                                 std::span<const BBox> detections, double iou_min,
                                 int& next_track_id) {
  if (!detections.empty()) {
    const int frame = detections.front().frame;
    for (const auto& d : detections) {
      if (d.frame != frame) throw ContractViolation("associate_step: detections span several frames");
    }
    for (const auto& t : active) {
      if (t.boxes.empty()) throw ContractViolation("associate_step: empty active track");
      if (t.last_frame() + 1 != frame) {
        throw ContractViolation("associate_step: detection frame " + std::to_string(frame) +
                                " does not follow track frame " + std::to_string(t.last_frame()));
      }
    }
  }

  struct Pair {
    double iou;
    std::size_t track;
    std::size_t det;
  };
  std::vector<Pair> pairs;
  for (std::size_t ti = 0; ti < active.size(); ++ti) {
    const BBox& last = active[ti].boxes.back();
    for (std::size_t di = 0; di < detections.size(); ++di) {
      if (detections[di].obj_class != active[ti].obj_class) continue;
      const double v = iou(last, detections[di]);
      if (v >= iou_min && v > 0.0) pairs.push_back({v, ti, di});
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    if (a.iou != b.iou) return a.iou > b.iou;
    return std::tie(a.track, a.det) < std::tie(b.track, b.det);
  });

  std::vector<int> det_for_track(active.size(), -1);
  std::vector<bool> det_used(detections.size(), false);
  for (const auto& p : pairs) {
    if (det_for_track[p.track] >= 0 || det_used[p.det]) continue;
    det_for_track[p.track] = static_cast<int>(p.det);
    det_used[p.det] = true;
  }

  AssociationResult result;
  for (std::size_t ti = 0; ti < active.size(); ++ti) {
    if (det_for_track[ti] >= 0) {
      active[ti].boxes.push_back(detections[static_cast<std::size_t>(det_for_track[ti])]);
      result.extended.push_back(std::move(active[ti]));
    } else {
      result.terminated.push_back(std::move(active[ti]));
    }
  }
  for (std::size_t di = 0; di < detections.size(); ++di) {
    if (det_used[di]) continue;
    Trajectory t;
    t.track_id = next_track_id++;
    t.obj_class = detections[di].obj_class;
    t.boxes.push_back(detections[di]);
    result.started.push_back(std::move(t));
  }
  return result;
}

std::vector<Trajectory> track_video(std::span<const BBox> detections, const TrackerConfig& config) {
  for (std::size_t i = 1; i < detections.size(); ++i) {
    if (detections[i].frame < detections[i - 1].frame) {
      throw ContractViolation("track_video: frames out of order at index " + std::to_string(i));
    }
  }
  for (const auto& d : detections) validate(d);

  std::vector<Trajectory> finished;
  std::vector<Trajectory> active;
  int next_id = 0;
  auto retire = [&](std::vector<Trajectory>& tracks) {
    for (auto& t : tracks) {
      if (t.length() >= config.min_track_len) finished.push_back(std::move(t));
    }
  };

  std::size_t i = 0;
  while (i < detections.size()) {
    const int frame = detections[i].frame;
    std::size_t j = i;
    while (j < detections.size() && detections[j].frame == frame) ++j;

    // A gap of one or more empty frames ends every active track.
    if (!active.empty() && active.front().last_frame() + 1 != frame) {
      retire(active);
      active.clear();
    }
    auto step = associate_step(std::move(active), detections.subspan(i, j - i), config.iou_min, next_id);
    retire(step.terminated);
    active = std::move(step.extended);
    for (auto& t : step.started) active.push_back(std::move(t));
    i = j;
  }
  retire(active);

  std::sort(finished.begin(), finished.end(),
            [](const Trajectory& a, const Trajectory& b) { return a.track_id < b.track_id; });
  return finished;
}

Rect expanded_union(std::span<const BBox> boxes, double margin, int frame_width, int frame_height) {
  if (boxes.empty()) throw ContractViolation("expanded_union: no boxes");
  double x0 = std::numeric_limits<double>::max(), y0 = x0;
  double x1 = std::numeric_limits<double>::lowest(), y1 = x1;
  for (const auto& b : boxes) {
    x0 = std::min(x0, b.x);
    y0 = std::min(y0, b.y);
    x1 = std::max(x1, b.right());
    y1 = std::max(y1, b.bottom());
  }
  const double cx = 0.5 * (x0 + x1), cy = 0.5 * (y0 + y1);
  const double hw = 0.5 * margin * (x1 - x0), hh = 0.5 * margin * (y1 - y0);
  Rect r;
  r.x = std::max(0.0, cx - hw);
  r.y = std::max(0.0, cy - hh);
  r.w = std::min(static_cast<double>(frame_width), cx + hw) - r.x;
  r.h = std::min(static_cast<double>(frame_height), cy + hh) - r.y;
  if (r.w <= 0.0 || r.h <= 0.0) throw ContractViolation("expanded_union: crop outside the frame");
  return r;
}

std::vector<Proposal> make_proposals(const Trajectory& traj, const ProposalConfig& config,
                                     int frame_width, int frame_height) {
  if (config.clip_len < 2) throw ContractViolation("make_proposals: clip_len must be >= 2");
  if (config.stride < 1 || config.stride > config.clip_len) {
    throw ContractViolation("make_proposals: stride must lie in [1, clip_len]");
  }
  if (traj.boxes.empty()) return {};

  const int len = traj.length();
  std::vector<int> starts;
  int s = 0;
  for (; s + config.clip_len <= len; s += config.stride) starts.push_back(s);
  const int covered = starts.empty() ? 0 : starts.back() + config.clip_len;
  if (covered < len) starts.push_back(starts.empty() ? 0 : s);

  std::vector<Proposal> out;
  out.reserve(starts.size());
  for (const int start : starts) {
    Proposal p;
    p.proposal_id = static_cast<int>(out.size());
    p.track_id = traj.track_id;
    p.obj_class = traj.obj_class;
    p.t0 = traj.first_frame() + start;
    p.t1 = p.t0 + config.clip_len;
    p.valid_frames = std::min(config.clip_len, len - start);
    p.boxes.reserve(static_cast<std::size_t>(config.clip_len));
    for (int k = 0; k < config.clip_len; ++k) {
      BBox b = traj.boxes[static_cast<std::size_t>(std::min(start + k, len - 1))];
      b.frame = p.t0 + k;
      p.boxes.push_back(b);
    }
    p.crop = expanded_union(p.boxes, config.margin, frame_width, frame_height);
    p.resized_h = config.resized_h;
    p.resized_w = config.resized_w;
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace actdet
