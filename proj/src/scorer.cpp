#include "actdet/scorer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "actdet/errors.hpp"

namespace actdet {

int ScoringProtocol::total_frames() const {
  int total = 0;
  for (const auto& [video, frames] : video_frames) total += frames;
  return total;
}

namespace {

void check_class(int class_id, const ScoringProtocol& protocol) {
  if (class_id < 0 || static_cast<std::size_t>(class_id) >= protocol.class_names.size()) {
    throw ContractViolation("class id " + std::to_string(class_id) + " is not in the label map");
  }
}

// Sorted, disjoint [t0, t1) intervals.
using Intervals = std::vector<std::pair<int, int>>;

Intervals merge_intervals(Intervals v) {
  std::sort(v.begin(), v.end());
  Intervals out;
  for (const auto& iv : v) {
    if (!out.empty() && iv.first <= out.back().second) {
      out.back().second = std::max(out.back().second, iv.second);
    } else {
      out.push_back(iv);
    }
  }
  return out;
}

int total_length(const Intervals& v) {
  int n = 0;
  for (const auto& [a, b] : v) n += b - a;
  return n;
}

// Length of `a` not covered by `b`; both merged.
int length_outside(const Intervals& a, const Intervals& b) {
  int inter = 0;
  std::size_t j = 0;
  for (const auto& [a0, a1] : a) {
    while (j < b.size() && b[j].second <= a0) ++j;
    for (std::size_t k = j; k < b.size() && b[k].first < a1; ++k) {
      inter += std::max(0, std::min(a1, b[k].second) - std::max(a0, b[k].first));
    }
  }
  return total_length(a) - inter;
}

}  // namespace

Alignment align(std::span<const Detection> detections, std::span<const GroundTruthActivity> truths, int class_id,
                double threshold, const ScoringProtocol& protocol) {
  check_class(class_id, protocol);
  std::vector<std::size_t> dets;
  for (std::size_t i = 0; i < detections.size(); ++i) {
    if (detections[i].class_id == class_id && detections[i].confidence >= threshold) dets.push_back(i);
  }
  std::stable_sort(dets.begin(), dets.end(), [&](std::size_t a, std::size_t b) {
    return detections[a].confidence > detections[b].confidence;
  });
  std::vector<std::size_t> gts;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    if (truths[i].class_id == class_id) gts.push_back(i);
  }
  std::vector<char> taken(truths.size(), 0);
  Alignment out;
  for (const std::size_t d : dets) {
    const auto& det = detections[d];
    double best = -1.0;
    std::size_t best_gt = 0;
    for (const std::size_t g : gts) {
      if (taken[g] || truths[g].video_id != det.video_id) continue;
      const double v = temporal_iou(det.t0, det.t1, truths[g].t0, truths[g].t1);
      if (v >= protocol.tiou_min && v > best) {
        best = v;
        best_gt = g;
      }
    }
    if (best >= 0.0) {
      taken[best_gt] = 1;
      out.matched.emplace_back(d, best_gt);
    } else {
      out.false_alarms.push_back(d);
    }
  }
  for (const std::size_t g : gts) {
    if (!taken[g]) out.missed.push_back(g);
  }
  return out;
}

OperatingPoint operating_point(std::span<const Detection> detections, std::span<const GroundTruthActivity> truths,
                               int class_id, double threshold, const ScoringProtocol& protocol) {
  check_class(class_id, protocol);
  std::map<std::string, Intervals> gt_spans, fa_spans;
  int instances = 0;
  for (const auto& g : truths) {
    if (g.class_id != class_id) continue;
    if (g.t1 <= g.t0) throw ContractViolation("ground truth with empty span");
    if (!protocol.video_frames.contains(g.video_id)) {
      throw ContractViolation("ground truth for unknown video '" + g.video_id + "'");
    }
    gt_spans[g.video_id].emplace_back(g.t0, g.t1);
    ++instances;
  }
  if (instances == 0) {
    throw MetricUndefined("no ground-truth instances of class '" +
                          protocol.class_names[static_cast<std::size_t>(class_id)] + "'");
  }
  const auto alignment = align(detections, truths, class_id, threshold, protocol);

  for (const std::size_t d : alignment.false_alarms) {
    const auto& det = detections[d];
    fa_spans[det.video_id].emplace_back(det.t0, det.t1);
  }
  long fa_frames = 0, background_frames = 0;
  for (const auto& [video, frames] : protocol.video_frames) {
    const auto gt = merge_intervals(gt_spans[video]);
    background_frames += frames - total_length(gt);
    if (auto it = fa_spans.find(video); it != fa_spans.end()) fa_frames += length_outside(merge_intervals(it->second), gt);
  }
  if (background_frames <= 0) throw ContractViolation("operating_point: no activity-free time for the class");

  OperatingPoint p;
  p.threshold = threshold;
  p.pmiss = static_cast<double>(alignment.missed.size()) / instances;
  p.tfa = static_cast<double>(fa_frames) / static_cast<double>(background_frames);
  p.false_alarm_frames = fa_frames;
  return p;
}

DETCurve det_curve(std::span<const Detection> detections, std::span<const GroundTruthActivity> truths, int class_id,
                   const ScoringProtocol& protocol) {
  std::vector<double> thresholds;
  for (const auto& d : detections) {
    if (d.class_id == class_id) thresholds.push_back(d.confidence);
  }
  std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  thresholds.insert(thresholds.begin(), std::numeric_limits<double>::infinity());
  DETCurve curve;
  for (const double t : thresholds) curve.points.push_back(operating_point(detections, truths, class_id, t, protocol));
  return curve;
}

double naudc(const DETCurve& curve, double tfa_limit, Interpolation interpolation) {
  if (!(tfa_limit > 0.0)) throw ContractViolation("naudc: tfa_limit must be positive");
  if (curve.points.empty()) return 1.0;

  if (interpolation == Interpolation::kStep) {
    auto pts = curve.points;
    std::sort(pts.begin(), pts.end(), [](const OperatingPoint& a, const OperatingPoint& b) {
      return a.tfa != b.tfa ? a.tfa < b.tfa : a.pmiss < b.pmiss;
    });
    // Left of the first point nothing is achievable, so Pmiss counts as 1.
    double area = 0.0;
    double x = 0.0;
    double level = 1.0;
    for (const auto& p : pts) {
      if (p.tfa >= tfa_limit) break;
      area += level * (p.tfa - x);
      x = p.tfa;
      level = std::min(level, p.pmiss);
    }
    area += level * (tfa_limit - x);
    return area / tfa_limit;
  }

  // Piecewise-linear between successive operating points.
  double area = 0.0;
  double prev_tfa = 0.0, prev_pmiss = 1.0;
  double floor_pmiss = 1.0;
  for (const auto& p : curve.points) {
    floor_pmiss = std::min(floor_pmiss, p.pmiss);
    if (prev_tfa >= tfa_limit) break;
    const double x1 = std::min(p.tfa, tfa_limit);
    if (p.tfa > prev_tfa) {
      const double slope = (p.pmiss - prev_pmiss) / (p.tfa - prev_tfa);
      const double y1 = prev_pmiss + slope * (x1 - prev_tfa);
      area += 0.5 * (prev_pmiss + y1) * (x1 - prev_tfa);
    }
    prev_tfa = p.tfa;
    prev_pmiss = p.pmiss;
  }
  if (prev_tfa < tfa_limit) area += floor_pmiss * (tfa_limit - prev_tfa);
  return area / tfa_limit;
}

GroupReport group_report(const std::map<std::string, double>& per_class,
                         const std::map<std::string, std::string>& group_of_class) {
  GroupReport report;
  std::map<std::string, std::pair<double, int>> sums;
  double total = 0.0;
  for (const auto& [cls, value] : per_class) {
    const auto it = group_of_class.find(cls);
    if (it == group_of_class.end()) throw ContractViolation("class '" + cls + "' is not assigned to a group");
    auto& [s, n] = sums[it->second];
    s += value;
    ++n;
    total += value;
  }
  for (const auto& [group, sn] : sums) report.groups[group] = sn.first / sn.second;
  report.overall = per_class.empty() ? 0.0 : total / static_cast<double>(per_class.size());
  return report;
}

}  // namespace actdet
