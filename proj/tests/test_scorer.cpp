#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "actdet/errors.hpp"
#include "actdet/scorer.hpp"
#include "oracles.hpp"

using namespace actdet;

namespace {

Detection det(int t0, int t1, double conf, int cls = 0, std::string video = "v") {
  Detection d;
  d.video_id = std::move(video);
  d.class_id = cls;
  d.t0 = t0;
  d.t1 = t1;
  d.confidence = conf;
  return d;
}

GroundTruthActivity gt(int t0, int t1, int cls = 0, std::string video = "v") {
  return {std::move(video), cls, t0, t1, -1};
}

ScoringProtocol protocol(int frames, std::vector<std::string> classes = {"a", "b"}) {
  ScoringProtocol p;
  p.class_names = std::move(classes);
  p.video_frames["v"] = frames;
  return p;
}

// Video of ground-truth time plus `background` frames (>= 800, so every
// detection fits). Every TFA is then a multiple of 1 / background.
struct RandomCase {
  std::vector<Detection> dets;
  std::vector<GroundTruthActivity> gts;
  ScoringProtocol proto;
};

RandomCase random_case(std::mt19937_64& rng, int background, int max_dets = 10) {
  RandomCase c;
  std::uniform_int_distribution<int> ngt(1, 4), ndet(0, max_dets), len(5, 60);
  std::uniform_real_distribution<double> conf(0.0, 1.0);
  // ground truths sit in [0, 400); detections anywhere in [0, 800)
  int gt_frames = 0;
  const int n_gt = ngt(rng);
  for (int i = 0; i < n_gt; ++i) {
    const int t0 = static_cast<int>(rng() % 340);
    const int t1 = t0 + len(rng);
    c.gts.push_back(gt(t0, t1));
  }
  std::vector<char> covered(400, 0);
  for (const auto& g : c.gts)
    for (int f = g.t0; f < g.t1; ++f) covered[f] = 1;
  for (char v : covered) gt_frames += v;
  const int n_det = ndet(rng);
  for (int i = 0; i < n_det; ++i) {
    int t0 = static_cast<int>(rng() % 740);
    if (rng() % 2 == 0 && !c.gts.empty()) {
      const auto& g = c.gts[rng() % c.gts.size()];
      t0 = std::max(0, g.t0 + static_cast<int>(rng() % 21) - 10);
    }
    // confidences on a 1e-3 grid so ties happen
    c.dets.push_back(det(t0, t0 + len(rng), std::round(conf(rng) * 1000.0) / 1000.0));
  }
  c.proto = protocol(gt_frames + background);
  return c;
}

}  // namespace

TEST(Align, PerfectDetections) {
  const std::vector<GroundTruthActivity> g{gt(0, 10), gt(20, 40)};
  const std::vector<Detection> d{det(0, 10, 0.9), det(20, 40, 0.8)};
  const auto a = align(d, g, 0, 0.0, protocol(100));
  EXPECT_EQ(a.matched.size(), 2u);
  EXPECT_TRUE(a.missed.empty());
  EXPECT_TRUE(a.false_alarms.empty());
}

TEST(Align, NoDetections) {
  const std::vector<GroundTruthActivity> g{gt(0, 10), gt(20, 40)};
  const auto a = align({}, g, 0, 0.0, protocol(100));
  EXPECT_EQ(a.missed.size(), 2u);
}

TEST(Align, CrossedOverlapsFollowConfidenceOrder) {
  // GT A = [0,20), GT B = [15,35).
  // d0 (0.9) = [10,30): IoU with A 10/30, with B 15/25 -> takes B.
  // d1 (0.8) = [14,34): IoU with A 6/34 < 0.2, B taken -> false alarm.
  // d2 (0.7) = [0,18): IoU with A 18/20 -> takes A.
  const std::vector<GroundTruthActivity> g{gt(0, 20), gt(15, 35)};
  const std::vector<Detection> d{det(10, 30, 0.9), det(14, 34, 0.8), det(0, 18, 0.7)};
  const auto a = align(d, g, 0, 0.0, protocol(100));
  ASSERT_EQ(a.matched.size(), 2u);
  EXPECT_EQ(a.matched[0], (std::pair<std::size_t, std::size_t>{0, 1}));
  EXPECT_EQ(a.matched[1], (std::pair<std::size_t, std::size_t>{2, 0}));
  EXPECT_EQ(a.false_alarms, (std::vector<std::size_t>{1}));
  EXPECT_TRUE(a.missed.empty());
}

TEST(Align, OtherVideoOrClassNeverMatches) {
  const std::vector<GroundTruthActivity> g{gt(0, 10)};
  const std::vector<Detection> d{det(0, 10, 0.9, 0, "w"), det(0, 10, 0.9, 1)};
  auto p = protocol(100);
  p.video_frames["w"] = 100;
  const auto a = align(d, g, 0, 0.0, p);
  EXPECT_TRUE(a.matched.empty());
  EXPECT_EQ(a.false_alarms.size(), 1u);
}

TEST(Align, UnknownClassThrows) {
  EXPECT_THROW(align({}, {}, 5, 0.0, protocol(10)), ContractViolation);
}

TEST(OperatingPoint, PerfectAndAboveEverything) {
  const std::vector<GroundTruthActivity> g{gt(0, 10), gt(20, 40)};
  const std::vector<Detection> d{det(0, 10, 0.9), det(20, 40, 0.8)};
  const auto p = protocol(100);
  const auto low = operating_point(d, g, 0, 0.8, p);
  EXPECT_EQ(low.pmiss, 0.0);
  EXPECT_EQ(low.tfa, 0.0);
  const auto high = operating_point(d, g, 0, 0.95, p);
  EXPECT_EQ(high.pmiss, 1.0);
  EXPECT_EQ(high.tfa, 0.0);
}

TEST(OperatingPoint, TwentyFalseFramesOverTwoHundred) {
  const std::vector<GroundTruthActivity> g{gt(0, 50)};
  const std::vector<Detection> d{det(100, 120, 0.5)};
  const auto p = operating_point(d, g, 0, 0.0, protocol(250));
  EXPECT_DOUBLE_EQ(p.tfa, 0.1);
  EXPECT_EQ(p.false_alarm_frames, 20);
  EXPECT_EQ(p.pmiss, 1.0);
}

TEST(OperatingPoint, FalseAlarmFramesInsideTruthAreNotCounted) {
  const std::vector<GroundTruthActivity> g{gt(0, 50)};
  // IoU 10/50 with tiou_min raised so it is a false alarm
  const std::vector<Detection> d{det(40, 60, 0.5), det(55, 65, 0.4)};
  auto p = protocol(150);
  p.tiou_min = 0.5;
  const auto op = operating_point(d, g, 0, 0.0, p);
  EXPECT_EQ(op.false_alarm_frames, 15);  // union [50, 65)
  EXPECT_DOUBLE_EQ(op.tfa, 15.0 / 100.0);
}

TEST(OperatingPoint, NoInstancesIsUndefined) {
  const std::vector<GroundTruthActivity> g{gt(0, 10, 1)};
  EXPECT_THROW(operating_point({}, g, 0, 0.0, protocol(100)), MetricUndefined);
}

TEST(OperatingPoint, MatchesFrameArrayOracle) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 300; ++trial) {
    auto c = random_case(rng, 1000, 12);
    std::set<double> thresholds{0.0, 0.5, 2.0};
    for (const auto& d : c.dets) thresholds.insert(d.confidence);
    for (const double t : thresholds) {
      const auto got = operating_point(c.dets, c.gts, 0, t, c.proto);
      const auto want = oracle::frame_point(c.dets, c.gts, 0, t, c.proto);
      EXPECT_DOUBLE_EQ(got.pmiss, want.pmiss);
      EXPECT_DOUBLE_EQ(got.tfa, want.tfa);
    }
  }
}

TEST(DetCurve, SingleDetectionTwoPoints) {
  const std::vector<GroundTruthActivity> g{gt(0, 10)};
  const std::vector<Detection> d{det(0, 10, 0.7)};
  const auto c = det_curve(d, g, 0, protocol(100));
  ASSERT_EQ(c.points.size(), 2u);
  EXPECT_TRUE(std::isinf(c.points[0].threshold));
  EXPECT_EQ(c.points[0].pmiss, 1.0);
  EXPECT_EQ(c.points[1].pmiss, 0.0);
}

TEST(DetCurve, DuplicateConfidencesCollapse) {
  const std::vector<GroundTruthActivity> g{gt(0, 10), gt(30, 40)};
  const std::vector<Detection> d{det(0, 10, 0.7), det(30, 40, 0.7), det(60, 70, 0.2)};
  EXPECT_EQ(det_curve(d, g, 0, protocol(100)).points.size(), 3u);
}

TEST(DetCurve, MonotoneOnRandomInputs) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 300; ++trial) {
    const auto c = random_case(rng, 1000);
    const auto curve = det_curve(c.dets, c.gts, 0, c.proto);
    for (std::size_t i = 1; i < curve.points.size(); ++i) {
      EXPECT_LT(curve.points[i].threshold, curve.points[i - 1].threshold);
      EXPECT_GE(curve.points[i].tfa, curve.points[i - 1].tfa);
      EXPECT_LE(curve.points[i].pmiss, curve.points[i - 1].pmiss);
    }
  }
}

TEST(DetCurve, MonotoneTransformKeepsPointSet) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    auto c = random_case(rng, 1000);
    auto squashed = c.dets;
    for (auto& d : squashed) d.confidence = 1.0 / (1.0 + std::exp(-5.0 * d.confidence)) * 0.3 + 0.1;
    const auto a = det_curve(c.dets, c.gts, 0, c.proto);
    const auto b = det_curve(squashed, c.gts, 0, c.proto);
    std::set<std::pair<double, double>> pa, pb;
    for (const auto& p : a.points) pa.insert({p.pmiss, p.tfa});
    for (const auto& p : b.points) pb.insert({p.pmiss, p.tfa});
    EXPECT_EQ(pa, pb);
  }
}

TEST(Naudc, NoDetectionsIsOne) {
  const std::vector<GroundTruthActivity> g{gt(0, 10)};
  EXPECT_EQ(naudc(det_curve({}, g, 0, protocol(100))), 1.0);
}

TEST(Naudc, PerfectDetectorIsZero) {
  const std::vector<GroundTruthActivity> g{gt(0, 10), gt(50, 60)};
  const std::vector<Detection> d{det(0, 10, 0.9), det(50, 60, 0.6)};
  EXPECT_EQ(naudc(det_curve(d, g, 0, protocol(100))), 0.0);
}

TEST(Naudc, HandIntegratedCurve) {
  DETCurve c;
  c.points = {{std::numeric_limits<double>::infinity(), 1.0, 0.0, 0}, {0.5, 0.4, 0.1, 0}};
  EXPECT_NEAR(naudc(c, 0.2), 0.7, 1e-12);
}

TEST(Naudc, HoldsMinimumBeyondLastPoint) {
  DETCurve c;
  c.points = {{1.0, 1.0, 0.0, 0}, {0.5, 0.5, 0.05, 0}, {0.2, 0.4, 0.08, 0}};
  // [0,.05) at 1, [.05,.08) at .5, [.08,.2] at .4
  EXPECT_NEAR(naudc(c, 0.2), (0.05 * 1.0 + 0.03 * 0.5 + 0.12 * 0.4) / 0.2, 1e-12);
}

TEST(Naudc, TrapezoidBetweenPoints) {
  DETCurve c;
  c.points = {{1.0, 1.0, 0.0, 0}, {0.5, 0.4, 0.1, 0}};
  // linear from (0,1) to (.1,.4), then flat .4
  EXPECT_NEAR(naudc(c, 0.2, Interpolation::kTrapezoid), (0.1 * 0.7 + 0.1 * 0.4) / 0.2, 1e-12);
}

TEST(Naudc, MatchesFineSweep) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 60; ++trial) {
    // 50000 background frames put every TFA on the sweep's cell edges
    const auto c = random_case(rng, 50000, 10);
    const double got = naudc(det_curve(c.dets, c.gts, 0, c.proto), c.proto.tfa_limit);
    const double want = oracle::swept_naudc(c.dets, c.gts, 0, c.proto, 10000);
    EXPECT_NEAR(got, want, 1e-9);
    EXPECT_GE(got, 0.0);
    EXPECT_LE(got, 1.0);
  }
}

TEST(Alignment, LoweringIouThresholdNeverRaisesPmiss) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    auto c = random_case(rng, 1000);
    for (const double t : {0.0, 0.3, 0.6}) {
      auto strict = c.proto, loose = c.proto;
      strict.tiou_min = 0.5;
      loose.tiou_min = 0.2;
      EXPECT_LE(operating_point(c.dets, c.gts, 0, t, loose).pmiss, operating_point(c.dets, c.gts, 0, t, strict).pmiss);
    }
  }
}

TEST(GroupReport, Examples) {
  const std::map<std::string, std::string> groups{{"a", "person"}, {"b", "person"}, {"c", "vehicle"}};
  const auto same = group_report({{"a", 0.5}, {"b", 0.5}, {"c", 0.5}}, groups);
  EXPECT_EQ(same.groups.at("person"), 0.5);
  EXPECT_EQ(same.groups.at("vehicle"), 0.5);
  EXPECT_EQ(same.overall, 0.5);
  const auto mixed = group_report({{"a", 0.2}, {"b", 0.4}, {"c", 0.9}}, groups);
  EXPECT_NEAR(mixed.groups.at("person"), 0.3, 1e-15);
  EXPECT_NEAR(mixed.overall, 0.5, 1e-15);
  EXPECT_THROW(group_report({{"z", 0.1}}, groups), ContractViolation);
}

TEST(GroupReport, MatchesMeanOracle) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::map<std::string, double> values;
    std::map<std::string, std::string> groups;
    std::map<std::string, std::vector<double>> by_group;
    for (int k = 0; k < 12; ++k) {
      const std::string name = "c" + std::to_string(k);
      const std::string group = "g" + std::to_string(rng() % 3);
      values[name] = u(rng);
      groups[name] = group;
      by_group[group].push_back(values[name]);
    }
    const auto r = group_report(values, groups);
    for (const auto& [g, vs] : by_group) {
      double s = 0.0;
      for (double v : vs) s += v;
      EXPECT_NEAR(r.groups.at(g), s / vs.size(), 1e-12);
    }
  }
}
