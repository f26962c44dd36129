#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "actdet/errors.hpp"
#include "actdet/synthgen.hpp"
#include "actdet/tracklet.hpp"

using namespace actdet;

namespace {

BBox box(int frame, double x, double y, double w, double h, ObjClass c = ObjClass::kPerson) {
  BBox b;
  b.frame = frame;
  b.x = x;
  b.y = y;
  b.w = w;
  b.h = h;
  b.obj_class = c;
  return b;
}

Trajectory track_of(int id, const std::vector<BBox>& boxes) {
  Trajectory t;
  t.track_id = id;
  t.obj_class = boxes.front().obj_class;
  t.boxes = boxes;
  return t;
}

// Pixel-grid IoU for boxes on integer coordinates.
double grid_iou(const BBox& a, const BBox& b) {
  int inter = 0, uni = 0;
  for (int y = 0; y < 64; ++y) {
    for (int x = 0; x < 64; ++x) {
      const bool in_a = x >= a.x && x < a.right() && y >= a.y && y < a.bottom();
      const bool in_b = x >= b.x && x < b.right() && y >= b.y && y < b.bottom();
      inter += in_a && in_b;
      uni += in_a || in_b;
    }
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / uni;
}

}  // namespace

TEST(Iou, IdenticalBoxes) { EXPECT_DOUBLE_EQ(iou(box(0, 3, 4, 5, 6), box(0, 3, 4, 5, 6)), 1.0); }

TEST(Iou, DisjointBoxes) { EXPECT_DOUBLE_EQ(iou(box(0, 0, 0, 2, 2), box(0, 10, 10, 2, 2)), 0.0); }

TEST(Iou, HalfShiftedBoxes) { EXPECT_DOUBLE_EQ(iou(box(0, 0, 0, 2, 2), box(0, 1, 0, 2, 2)), 1.0 / 3.0); }

TEST(Iou, MatchesPixelCountOnIntegerBoxes) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> pos(0, 40), ext(1, 20);
  for (int i = 0; i < 300; ++i) {
    const auto a = box(0, pos(rng), pos(rng), ext(rng), ext(rng));
    const auto b = box(0, pos(rng), pos(rng), ext(rng), ext(rng));
    const double v = iou(a, b);
    EXPECT_NEAR(v, grid_iou(a, b), 1e-12);
    EXPECT_DOUBLE_EQ(v, iou(b, a));
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(BBoxContract, RejectsDegenerateBoxes) {
  EXPECT_THROW(validate(box(0, 0, 0, 0, 3)), ContractViolation);
  EXPECT_THROW(validate(box(0, 0, 0, 3, -1)), ContractViolation);
  EXPECT_THROW(validate(box(-1, 0, 0, 3, 3)), ContractViolation);
  auto b = box(0, 0, 0, 3, 3);
  b.score = 1.5;
  EXPECT_THROW(validate(b), ContractViolation);
}

TEST(BBoxContract, ClampKeepsInsidePart) {
  const auto c = clamp_to_frame(box(0, -4, 120, 10, 20), 128, 128);
  EXPECT_DOUBLE_EQ(c.x, 0.0);
  EXPECT_DOUBLE_EQ(c.w, 6.0);
  EXPECT_DOUBLE_EQ(c.y, 120.0);
  EXPECT_DOUBLE_EQ(c.h, 8.0);
  EXPECT_THROW(clamp_to_frame(box(0, 200, 0, 5, 5), 128, 128), ContractViolation);
}

TEST(AssociateStep, ExtendsOnHighOverlap) {
  int next = 1;
  std::vector<Trajectory> active{track_of(0, {box(0, 0, 0, 10, 10)})};
  const std::vector<BBox> dets{box(1, 0.5, 0, 10, 10)};
  ASSERT_GT(iou(active[0].boxes.back(), dets[0]), 0.9);
  const auto r = associate_step(active, dets, 0.3, next);
  ASSERT_EQ(r.extended.size(), 1u);
  EXPECT_EQ(r.extended[0].length(), 2);
  EXPECT_TRUE(r.terminated.empty());
  EXPECT_TRUE(r.started.empty());
}

TEST(AssociateStep, LowOverlapTerminatesAndStarts) {
  int next = 1;
  std::vector<Trajectory> active{track_of(0, {box(0, 0, 0, 10, 10)})};
  const std::vector<BBox> dets{box(1, 8, 0, 10, 10)};
  ASSERT_LT(iou(active[0].boxes.back(), dets[0]), 0.3);
  const auto r = associate_step(active, dets, 0.3, next);
  EXPECT_TRUE(r.extended.empty());
  ASSERT_EQ(r.terminated.size(), 1u);
  ASSERT_EQ(r.started.size(), 1u);
  EXPECT_EQ(r.started[0].track_id, 1);
  EXPECT_EQ(next, 2);
}

// Two 1-D rows of width-10 boxes: IoU = o / (20 - o) for overlap o.
TEST(AssociateStep, CrossedOverlapsFollowGreedyOrder) {
  auto shift_for = [](double target) { return 10.0 - 20.0 * target / (1.0 + target); };
  const BBox A = box(0, 0, 0, 10, 1);
  const BBox B = box(0, 30, 0, 10, 1);
  // d1 overlaps A at 0.8; d2 sits between A and B, closer to B.
  const BBox d1 = box(1, shift_for(0.8), 0, 10, 1);
  const BBox d2 = box(1, 30 - shift_for(0.7), 0, 10, 1);
  ASSERT_NEAR(iou(A, d1), 0.8, 1e-12);
  ASSERT_NEAR(iou(B, d2), 0.7, 1e-12);
  int next = 2;
  std::vector<Trajectory> active{track_of(0, {A}), track_of(1, {B})};
  const std::vector<BBox> dets{d2, d1};
  const auto r = associate_step(active, dets, 0.3, next);
  ASSERT_EQ(r.extended.size(), 2u);
  for (const auto& t : r.extended) {
    EXPECT_DOUBLE_EQ(t.boxes.back().x, t.track_id == 0 ? d1.x : d2.x);
  }
}

TEST(AssociateStep, AgreesWithBruteForceGreedy) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> pos(0, 30), ext(6, 14);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<Trajectory> active;
    for (int t = 0; t < 3; ++t) active.push_back(track_of(t, {box(0, pos(rng), pos(rng), ext(rng), ext(rng))}));
    std::vector<BBox> dets;
    for (int d = 0; d < 3; ++d) dets.push_back(box(1, pos(rng), pos(rng), ext(rng), ext(rng)));
    std::vector<std::tuple<double, int, int>> pairs;
    for (int t = 0; t < 3; ++t) {
      for (int d = 0; d < 3; ++d) {
        const double v = iou(active[t].boxes.back(), dets[d]);
        if (v >= 0.3) pairs.emplace_back(v, t, d);
      }
    }
    std::stable_sort(pairs.begin(), pairs.end(), [](auto& x, auto& y) { return std::get<0>(x) > std::get<0>(y); });
    std::map<int, int> expected;
    std::set<int> used;
    for (const auto& [v, t, d] : pairs) {
      if (expected.contains(t) || used.contains(d)) continue;
      expected[t] = d;
      used.insert(d);
    }
    int next = 3;
    const auto r = associate_step(active, dets, 0.3, next);
    ASSERT_EQ(r.extended.size(), expected.size());
    for (const auto& t : r.extended) {
      const auto& d = dets[static_cast<std::size_t>(expected.at(t.track_id))];
      EXPECT_DOUBLE_EQ(t.boxes.back().x, d.x);
      EXPECT_DOUBLE_EQ(t.boxes.back().y, d.y);
    }
  }
}

TEST(AssociateStep, GreedyMatchesHandTableOracle) {
  // Rows are tracks, columns detections; greedy over the sorted table.
  const double table[2][2] = {{0.8, 0.5}, {0.6, 0.7}};
  std::vector<std::tuple<double, int, int>> pairs;
  for (int t = 0; t < 2; ++t) {
    for (int d = 0; d < 2; ++d) pairs.emplace_back(table[t][d], t, d);
  }
  std::sort(pairs.begin(), pairs.end(), [](auto& x, auto& y) { return std::get<0>(x) > std::get<0>(y); });
  std::map<int, int> match;
  std::set<int> used;
  for (const auto& [v, t, d] : pairs) {
    if (match.contains(t) || used.contains(d)) continue;
    match[t] = d;
    used.insert(d);
  }
  EXPECT_EQ(match[0], 0);
  EXPECT_EQ(match[1], 1);
}

TEST(AssociateStep, FrameMismatchIsRejected) {
  int next = 1;
  std::vector<Trajectory> active{track_of(0, {box(0, 0, 0, 10, 10)})};
  const std::vector<BBox> dets{box(2, 0, 0, 10, 10)};
  EXPECT_THROW(associate_step(active, dets, 0.3, next), ContractViolation);
}

TEST(AssociateStep, ClassesNeverPair) {
  int next = 1;
  std::vector<Trajectory> active{track_of(0, {box(0, 0, 0, 10, 10, ObjClass::kVehicle)})};
  const std::vector<BBox> dets{box(1, 0, 0, 10, 10, ObjClass::kPerson)};
  const auto r = associate_step(active, dets, 0.3, next);
  EXPECT_TRUE(r.extended.empty());
  EXPECT_EQ(r.started.size(), 1u);
}

TEST(AssociateStep, MatchingIsInjectiveOnRandomFrames) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> pos(0, 40), ext(4, 16);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Trajectory> active;
    for (int t = 0; t < 4; ++t) active.push_back(track_of(t, {box(0, pos(rng), pos(rng), ext(rng), ext(rng))}));
    std::vector<BBox> dets;
    for (int d = 0; d < 5; ++d) dets.push_back(box(1, pos(rng), pos(rng), ext(rng), ext(rng)));
    int next = 10;
    const auto r = associate_step(active, dets, 0.1, next);
    std::multiset<std::pair<double, double>> used;
    for (const auto& t : r.extended) used.insert({t.boxes.back().x, t.boxes.back().y});
    for (const auto& t : r.started) used.insert({t.boxes.back().x, t.boxes.back().y});
    EXPECT_EQ(used.size(), dets.size());
    EXPECT_EQ(r.extended.size() + r.terminated.size(), active.size());
    std::set<std::pair<double, double>> distinct(used.begin(), used.end());
    EXPECT_EQ(distinct.size(), used.size());
  }
}

TEST(TrackVideo, SingleMovingObject) {
  std::vector<BBox> dets;
  for (int f = 0; f < 40; ++f) dets.push_back(box(f, 2.0 * f, 10, 12, 12));
  const auto tracks = track_video(dets, {});
  ASSERT_EQ(tracks.size(), 1u);
  EXPECT_EQ(tracks[0].length(), 40);
}

TEST(TrackVideo, EmptyStream) { EXPECT_TRUE(track_video(std::vector<BBox>{}, {}).empty()); }

TEST(TrackVideo, OutOfOrderFramesRejected) {
  std::vector<BBox> dets{box(3, 0, 0, 5, 5), box(2, 0, 0, 5, 5)};
  EXPECT_THROW(track_video(dets, {}), ContractViolation);
}

TEST(TrackVideo, ShortTracksDropped) {
  std::vector<BBox> dets;
  for (int f = 0; f < 7; ++f) dets.push_back(box(f, 0, 0, 10, 10));
  EXPECT_TRUE(track_video(dets, {}).empty());
  dets.push_back(box(7, 0, 0, 10, 10));
  EXPECT_EQ(track_video(dets, {}).size(), 1u);
}

TEST(TrackVideo, GapSplitsTrack) {
  std::vector<BBox> dets;
  for (int f = 0; f < 10; ++f) dets.push_back(box(f, 0, 0, 10, 10));
  for (int f = 11; f < 21; ++f) dets.push_back(box(f, 0, 0, 10, 10));
  EXPECT_EQ(track_video(dets, {}).size(), 2u);
}

TEST(TrackVideo, CrossingObjectsKeepIdentity) {
  SceneScript s;
  s.frames = 40;
  ActorScript a;
  a.actor_id = 0;
  a.activity = "vehicle_moves";
  a.start_frame = 0;
  a.length = 40;
  a.x0 = 20;
  a.y0 = 60;
  a.speed = 2.0;
  a.heading = 0.0;
  ActorScript b = a;
  b.actor_id = 1;
  b.x0 = 100;
  b.y0 = 66;
  b.heading = 3.14159265358979;
  s.actors = {a, b};
  const auto scene = render_scene(s, vehicle_activities());
  const auto jittered = jitter_boxes(scene.detections, 0.3, 9);
  std::vector<BBox> boxes;
  for (const auto& ab : jittered) boxes.push_back(ab.box);
  const auto tracks = track_video(boxes, {});
  EXPECT_GE(tracks.size(), 2u);
  EXPECT_GE(identity_purity(tracks, jittered), 0.95);
}

TEST(TrackVideo, OutputPartitionsDetections) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> pos(0, 100);
  std::vector<BBox> dets;
  for (int f = 0; f < 30; ++f) {
    for (int k = 0; k < 4; ++k) dets.push_back(box(f, pos(rng), pos(rng), 10, 10));
    dets.push_back(box(f, 50 + 0.5 * f, 50, 10, 10));
  }
  TrackerConfig cfg;
  cfg.min_track_len = 1;
  const auto tracks = track_video(dets, cfg);
  std::size_t total = 0;
  std::set<std::tuple<int, double, double>> seen;
  for (const auto& t : tracks) {
    for (std::size_t i = 0; i < t.boxes.size(); ++i) {
      if (i > 0) {
        EXPECT_EQ(t.boxes[i].frame, t.boxes[i - 1].frame + 1);
      }
      seen.insert({t.boxes[i].frame, t.boxes[i].x, t.boxes[i].y});
      ++total;
    }
  }
  EXPECT_EQ(seen.size(), total);
  EXPECT_EQ(total, dets.size());
}

TEST(MakeProposals, SlidingStarts) {
  std::vector<BBox> boxes;
  for (int f = 0; f < 64; ++f) boxes.push_back(box(f, f, 10, 8, 8));
  const auto props = make_proposals(track_of(3, boxes), {32, 16, 1.5, 64, 64}, 128, 128);
  ASSERT_EQ(props.size(), 3u);
  EXPECT_EQ(props[0].t0, 0);
  EXPECT_EQ(props[1].t0, 16);
  EXPECT_EQ(props[2].t0, 32);
  for (const auto& p : props) {
    EXPECT_EQ(p.t1 - p.t0, 32);
    EXPECT_EQ(p.valid_frames, 32);
    EXPECT_EQ(p.track_id, 3);
  }
}

TEST(MakeProposals, ShortTrajectoryIsPadded) {
  std::vector<BBox> boxes;
  for (int f = 5; f < 15; ++f) boxes.push_back(box(f, f, 10, 8, 8));
  const auto props = make_proposals(track_of(0, boxes), {32, 16, 1.5, 64, 64}, 128, 128);
  ASSERT_EQ(props.size(), 1u);
  EXPECT_EQ(props[0].t0, 5);
  EXPECT_EQ(props[0].t1, 37);
  EXPECT_EQ(props[0].valid_frames, 10);
  ASSERT_EQ(props[0].boxes.size(), 32u);
  for (int k = 10; k < 32; ++k) {
    EXPECT_DOUBLE_EQ(props[0].boxes[k].x, boxes.back().x);
    EXPECT_EQ(props[0].boxes[k].frame, 5 + k);
  }
}

TEST(MakeProposals, StaticBoxCrop) {
  std::vector<BBox> boxes;
  for (int f = 0; f < 32; ++f) boxes.push_back(box(f, 10, 10, 8, 8));
  const auto props = make_proposals(track_of(0, boxes), {32, 16, 1.5, 64, 64}, 128, 128);
  ASSERT_EQ(props.size(), 1u);
  EXPECT_EQ(props[0].crop, (Rect{8, 8, 12, 12}));
}

TEST(MakeProposals, RejectsBadGeometry) {
  const auto t = track_of(0, {box(0, 0, 0, 4, 4)});
  EXPECT_THROW(make_proposals(t, {1, 16, 1.5, 64, 64}, 128, 128), ContractViolation);
  EXPECT_THROW(make_proposals(t, {8, 0, 1.5, 64, 64}, 128, 128), ContractViolation);
  EXPECT_THROW(make_proposals(t, {8, 9, 1.5, 64, 64}, 128, 128), ContractViolation);
}

TEST(MakeProposals, WindowsTileEveryFrame) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const int clip = std::uniform_int_distribution<int>(2, 20)(rng);
    const int stride = std::uniform_int_distribution<int>(1, clip)(rng);
    const int len = std::uniform_int_distribution<int>(clip, 90)(rng);
    std::vector<BBox> boxes;
    for (int f = 0; f < len; ++f) boxes.push_back(box(f, 10, 10, 5, 5));
    const auto props = make_proposals(track_of(0, boxes), {clip, stride, 1.5, 16, 16}, 128, 128);
    std::vector<int> cover(static_cast<std::size_t>(len), 0);
    for (const auto& p : props) {
      EXPECT_EQ(p.t1 - p.t0, clip);
      for (int f = p.t0; f < p.t0 + p.valid_frames; ++f) cover[static_cast<std::size_t>(f)]++;
      const Rect c = p.crop;
      for (const auto& b : p.boxes) {
        EXPECT_LE(c.x, b.x);
        EXPECT_LE(c.y, b.y);
        EXPECT_GE(c.x + c.w, b.right());
        EXPECT_GE(c.y + c.h, b.bottom());
      }
    }
    EXPECT_TRUE(std::all_of(cover.begin(), cover.end(), [](int c) { return c >= 1; }))
        << "clip " << clip << " stride " << stride << " len " << len;
  }
}
