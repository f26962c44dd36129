#include "actdet/refiner.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <tuple>

#include "actdet/errors.hpp"

namespace actdet {

double temporal_iou(int a0, int a1, int b0, int b1) {
  const int inter = std::min(a1, b1) - std::max(a0, b0);
  if (inter <= 0) return 0.0;
  const int uni = (a1 - a0) + (b1 - b0) - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

FrameScoreProfile merge_windows(std::span<const WindowDetection> windows) {
  if (windows.empty()) throw ContractViolation("merge_windows: no windows");
  FrameScoreProfile profile;
  profile.video_id = windows.front().video_id;
  profile.track_id = windows.front().track_id;
  profile.class_id = windows.front().class_id;
  int lo = std::numeric_limits<int>::max(), hi = std::numeric_limits<int>::min();
  for (const auto& w : windows) {
    if (w.track_id != profile.track_id || w.class_id != profile.class_id || w.video_id != profile.video_id) {
      throw ContractViolation("merge_windows: windows must share video, track and class");
    }
    if (w.t1 <= w.t0) throw ContractViolation("merge_windows: empty window");
    lo = std::min(lo, w.t0);
    hi = std::max(hi, w.t1);
  }
  profile.first_frame = lo;
  const auto len = static_cast<std::size_t>(hi - lo);
  std::vector<double> sum(len, 0.0);
  std::vector<int> count(len, 0);
  for (const auto& w : windows) {
    for (int f = w.t0; f < w.t1; ++f) {
      sum[static_cast<std::size_t>(f - lo)] += w.confidence;
      ++count[static_cast<std::size_t>(f - lo)];
    }
  }
  profile.scores.assign(len, 0.0);
  profile.covered.assign(len, 0);
  for (std::size_t i = 0; i < len; ++i) {
    if (count[i] == 0) continue;
    profile.scores[i] = sum[i] / count[i];
    profile.covered[i] = 1;
  }
  return profile;
}

std::vector<Detection> split_candidates(const FrameScoreProfile& profile, std::span<const double> levels) {
  if (levels.empty()) throw ContractViolation("split_candidates: empty level set");
  for (const double theta : levels) {
    if (!(theta > 0.0 && theta < 1.0)) throw ContractViolation("split_candidates: levels must lie in (0, 1)");
  }
  std::map<std::pair<int, int>, double> spans;
  const std::size_t len = profile.scores.size();
  for (const double theta : levels) {
    std::size_t i = 0;
    while (i < len) {
      if (!profile.covered[i] || profile.scores[i] < theta) {
        ++i;
        continue;
      }
      std::size_t j = i;
      double sum = 0.0;
      while (j < len && profile.covered[j] && profile.scores[j] >= theta) sum += profile.scores[j++];
      const std::pair<int, int> span{profile.first_frame + static_cast<int>(i), profile.first_frame + static_cast<int>(j)};
      const double conf = sum / static_cast<double>(j - i);
      auto [it, inserted] = spans.emplace(span, conf);
      if (!inserted) it->second = std::max(it->second, conf);
      i = j;
    }
  }
  std::vector<Detection> out;
  for (const auto& [span, conf] : spans) {
    Detection d;
    d.video_id = profile.video_id;
    d.class_id = profile.class_id;
    d.track_id = profile.track_id;
    d.t0 = span.first;
    d.t1 = span.second;
    d.confidence = conf;
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<Detection> temporal_nms(std::span<const Detection> candidates, double tiou_threshold) {
  if (!(tiou_threshold > 0.0 && tiou_threshold < 1.0)) {
    throw ContractViolation("temporal_nms: threshold must lie in (0, 1)");
  }
  std::vector<std::size_t> order(candidates.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& x = candidates[a];
    const auto& y = candidates[b];
    if (x.confidence != y.confidence) return x.confidence > y.confidence;
    return std::tie(x.t0, x.t1) < std::tie(y.t0, y.t1);
  });
  std::vector<Detection> kept;
  for (const std::size_t i : order) {
    const auto& c = candidates[i];
    const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](const Detection& k) {
      return k.class_id == c.class_id && k.track_id == c.track_id && k.video_id == c.video_id &&
             temporal_iou(k.t0, k.t1, c.t0, c.t1) >= tiou_threshold;
    });
    if (!suppressed) kept.push_back(c);
  }
  return kept;
}

std::vector<Detection> refine(std::span<const WindowDetection> windows, const RefinerConfig& config) {
  std::map<std::tuple<std::string, int, int>, std::vector<WindowDetection>> groups;
  for (const auto& w : windows) groups[{w.video_id, w.track_id, w.class_id}].push_back(w);
  std::vector<Detection> out;
  for (const auto& [key, group] : groups) {
    const auto profile = merge_windows(group);
    const auto candidates = split_candidates(profile, config.levels);
    auto kept = temporal_nms(candidates, config.nms_tiou);
    out.insert(out.end(), kept.begin(), kept.end());
  }
  return out;
}

}  // namespace actdet
