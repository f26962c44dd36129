#pragma once

#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "actdet/refiner.hpp"

namespace actdet {

struct GroundTruthActivity {
  std::string video_id;
  int class_id = 0;
  int t0 = 0;
  int t1 = 0;
  int track_id = -1;
};

// Raised when a metric has no defined value, e.g. Pmiss without any
// ground-truth instance of the class.
class MetricUndefined : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

enum class Interpolation { kStep, kTrapezoid };

struct ScoringProtocol {
  std::vector<std::string> class_names;
  std::map<std::string, int> video_frames;  // duration of every scored video
  double tiou_min = 0.2;
  double tfa_limit = 0.2;
  Interpolation interpolation = Interpolation::kStep;

  int total_frames() const;
};

struct Alignment {
  std::vector<std::pair<std::size_t, std::size_t>> matched;  // (detection index, gt index)
  std::vector<std::size_t> missed;                           // gt indices
  std::vector<std::size_t> false_alarms;                     // detection indices
};

// Greedy one-to-one matching of detections of `class_id` with confidence >=
// threshold, highest confidence first. Each detection takes the free
// same-video ground truth with the largest temporal IoU, provided it reaches
// protocol.tiou_min.
Alignment align(std::span<const Detection> detections, std::span<const GroundTruthActivity> truths, int class_id,
                double threshold, const ScoringProtocol& protocol);

struct OperatingPoint {
  double threshold = 0.0;
  double pmiss = 1.0;
  double tfa = 0.0;
  long false_alarm_frames = 0;
  bool operator==(const OperatingPoint&) const = default;
};

// pmiss = misses / instances; tfa = false-alarm frames outside every ground
// truth of the class / frames not covered by a ground truth of the class.
OperatingPoint operating_point(std::span<const Detection> detections, std::span<const GroundTruthActivity> truths,
                               int class_id, double threshold, const ScoringProtocol& protocol);

// Points ordered by descending threshold, starting at +infinity.
struct DETCurve {
  std::vector<OperatingPoint> points;
};

DETCurve det_curve(std::span<const Detection> detections, std::span<const GroundTruthActivity> truths, int class_id,
                   const ScoringProtocol& protocol);

// Area under Pmiss over TFA in [0, tfa_limit] divided by tfa_limit. The step
// rule uses the lower envelope min{pmiss : tfa <= x}; beyond the last point
// the smallest pmiss is held.
double naudc(const DETCurve& curve, double tfa_limit = 0.2, Interpolation interpolation = Interpolation::kStep);

struct GroupReport {
  std::map<std::string, double> groups;  // unweighted mean per group
  double overall = 0.0;                  // unweighted mean over all classes
};

GroupReport group_report(const std::map<std::string, double>& per_class,
                         const std::map<std::string, std::string>& group_of_class);

}  // namespace actdet
