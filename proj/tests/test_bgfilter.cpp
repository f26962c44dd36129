#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "actdet/bgfilter.hpp"
#include "actdet/errors.hpp"
#include "actdet/synthgen.hpp"
#include "actdet/tracklet.hpp"

using namespace actdet;

namespace {

std::vector<float> flat_frame(int h, int w, float v) { return std::vector<float>(static_cast<std::size_t>(h) * w, v); }

std::vector<float> noisy_frame(int h, int w, float v, double sigma, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, sigma);
  std::vector<float> f(static_cast<std::size_t>(h) * w);
  for (auto& p : f) p = static_cast<float>(v + n(rng));
  return f;
}

ForegroundMask random_mask(int h, int w, std::mt19937_64& rng, double p = 0.5) {
  ForegroundMask m(0, h, w);
  std::bernoulli_distribution coin(p);
  for (auto& c : m.cells) c = coin(rng) ? 1 : 0;
  return m;
}

// Sorts each replicated-border window and reads the middle element.
ForegroundMask median_oracle(const ForegroundMask& m, int k) {
  ForegroundMask out(m.frame, m.height, m.width);
  const int r = k / 2;
  for (int y = 0; y < m.height; ++y) {
    for (int x = 0; x < m.width; ++x) {
      std::vector<int> window;
      for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
          window.push_back(m.at(std::clamp(y + dy, 0, m.height - 1), std::clamp(x + dx, 0, m.width - 1)));
        }
      }
      std::sort(window.begin(), window.end());
      out.at(y, x) = static_cast<std::uint8_t>(window[window.size() / 2]);
    }
  }
  return out;
}

Proposal proposal_with_box(double x, double y, double w, double h, int t0, int frames, ObjClass c = ObjClass::kVehicle) {
  Proposal p;
  p.obj_class = c;
  p.t0 = t0;
  p.t1 = t0 + frames;
  p.valid_frames = frames;
  for (int k = 0; k < frames; ++k) {
    BBox b;
    b.frame = t0 + k;
    b.x = x;
    b.y = y;
    b.w = w;
    b.h = h;
    b.obj_class = c;
    p.boxes.push_back(b);
  }
  return p;
}

std::vector<ForegroundMask> masks_filled(int frames, int h, int w, std::uint8_t v) {
  std::vector<ForegroundMask> out;
  for (int f = 0; f < frames; ++f) {
    ForegroundMask m(f, h, w);
    std::fill(m.cells.begin(), m.cells.end(), v);
    out.push_back(m);
  }
  return out;
}

}  // namespace

TEST(BackgroundModel, FirstFrameIsAllBackground) {
  BackgroundModel model(8, 8);
  std::mt19937_64 rng(1);
  const auto mask = model.update(noisy_frame(8, 8, 100, 30, rng), 0);
  EXPECT_EQ(mask.count(), 0u);
  EXPECT_EQ(model.pixel(3, 3).components.size(), 1u);
}

TEST(BackgroundModel, ConstantVideoConverges) {
  BackgroundModel model(32, 32);
  ForegroundMask last;
  for (int t = 0; t < 100; ++t) last = model.update(flat_frame(32, 32, 90), t);
  EXPECT_LT(static_cast<double>(last.count()) / last.cells.size(), 0.01);
}

TEST(BackgroundModel, NoisyGrayConvergesBelowOnePercent) {
  BackgroundModel model(32, 32);
  std::mt19937_64 rng(2);
  double fraction = 1.0;
  for (int t = 0; t < 100; ++t) {
    const auto m = model.update(noisy_frame(32, 32, 90, 2.0, rng), t);
    fraction = static_cast<double>(m.count()) / m.cells.size();
  }
  EXPECT_LT(fraction, 0.01);
}

TEST(BackgroundModel, BrightSquareAfterBurnIn) {
  BackgroundModel model(32, 32);
  std::mt19937_64 rng(3);
  for (int t = 0; t < 100; ++t) model.update(noisy_frame(32, 32, 90, 2.0, rng), t);
  auto frame = noisy_frame(32, 32, 90, 2.0, rng);
  for (int y = 10; y < 18; ++y) {
    for (int x = 12; x < 20; ++x) frame[static_cast<std::size_t>(y) * 32 + x] = 230.0f;
  }
  const auto mask = model.update(frame, 100);
  int hits = 0;
  for (int y = 10; y < 18; ++y) {
    for (int x = 12; x < 20; ++x) hits += mask.at(y, x);
  }
  EXPECT_GE(hits, 32);
}

TEST(BackgroundModel, WeightsNormalizedAndVariancesClamped) {
  MixtureConfig cfg;
  BackgroundModel model(6, 6, cfg);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0, 255);
  for (int t = 0; t < 300; ++t) {
    std::vector<float> f(36);
    // Mix of stable, bimodal and random pixels.
    for (std::size_t i = 0; i < f.size(); ++i) {
      if (i % 3 == 0) f[i] = 120.0f;
      else if (i % 3 == 1) f[i] = (t % 2) ? 40.0f : 200.0f;
      else f[i] = static_cast<float>(u(rng));
    }
    model.update(f, t);
    for (int y = 0; y < 6; ++y) {
      for (int x = 0; x < 6; ++x) {
        const auto& comps = model.pixel(y, x).components;
        ASSERT_LE(comps.size(), static_cast<std::size_t>(cfg.max_components));
        double total = 0.0;
        for (const auto& c : comps) {
          total += c.weight;
          EXPECT_GE(c.variance, cfg.min_variance);
          EXPECT_LE(c.variance, cfg.max_variance);
        }
        EXPECT_NEAR(total, 1.0, 1e-9);
        for (std::size_t k = 1; k < comps.size(); ++k) {
          EXPECT_GE(comps[k - 1].weight / std::sqrt(comps[k - 1].variance),
                    comps[k].weight / std::sqrt(comps[k].variance));
        }
      }
    }
  }
}

TEST(BackgroundModel, RejectsBadInput) {
  BackgroundModel model(4, 4);
  EXPECT_THROW(model.update(flat_frame(4, 5, 0), 0), ContractViolation);
  EXPECT_THROW(model.update(flat_frame(4, 4, 0), 0, 0.0), ContractViolation);
  EXPECT_THROW(model.update(flat_frame(4, 4, 0), 0, 1.0), ContractViolation);
}

TEST(MedianDenoise, ZeroStaysZero) {
  ForegroundMask m(0, 9, 9);
  EXPECT_EQ(median_denoise(m, 3).count(), 0u);
}

TEST(MedianDenoise, IsolatedCellRemoved) {
  ForegroundMask m(0, 9, 9);
  m.at(4, 4) = 1;
  EXPECT_EQ(median_denoise(m, 3).count(), 0u);
}

TEST(MedianDenoise, EvenKernelRejected) {
  ForegroundMask m(0, 4, 4);
  EXPECT_THROW(median_denoise(m, 2), ContractViolation);
  EXPECT_THROW(median_denoise(m, 0), ContractViolation);
}

TEST(MedianDenoise, MatchesSortedWindowOracle) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const int h = std::uniform_int_distribution<int>(1, 32)(rng);
    const int w = std::uniform_int_distribution<int>(1, 32)(rng);
    const int k = 2 * std::uniform_int_distribution<int>(0, 3)(rng) + 1;
    const double density = std::uniform_real_distribution<double>(0.05, 0.95)(rng);
    const auto m = random_mask(h, w, rng, density);
    EXPECT_EQ(median_denoise(m, k).cells, median_oracle(m, k).cells) << h << "x" << w << " k=" << k;
  }
}

TEST(ForegroundRate, AllBackground) {
  const auto masks = masks_filled(10, 16, 16, 0);
  EXPECT_DOUBLE_EQ(foreground_rate(proposal_with_box(2, 2, 6, 6, 0, 10), masks), 0.0);
}

TEST(ForegroundRate, AllForeground) {
  const auto masks = masks_filled(10, 16, 16, 1);
  EXPECT_DOUBLE_EQ(foreground_rate(proposal_with_box(2, 2, 6, 6, 0, 10), masks), 1.0);
}

TEST(ForegroundRate, HalfFrames) {
  auto masks = masks_filled(10, 16, 16, 0);
  for (int f = 0; f < 5; ++f) std::fill(masks[f].cells.begin(), masks[f].cells.end(), 1);
  EXPECT_DOUBLE_EQ(foreground_rate(proposal_with_box(2, 2, 6, 6, 0, 10), masks), 0.5);
}

TEST(ForegroundRate, MissingMaskRejected) {
  const auto masks = masks_filled(5, 16, 16, 0);
  EXPECT_THROW(foreground_rate(proposal_with_box(2, 2, 6, 6, 2, 6), masks), ContractViolation);
}

TEST(ForegroundRate, IgnoresContentOutsideBoxes) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<ForegroundMask> a, b;
    const auto p = proposal_with_box(3.5, 4.25, 7.5, 5.0, 0, 6);
    for (int f = 0; f < 6; ++f) {
      auto m = random_mask(20, 20, rng);
      m.frame = f;
      auto n = random_mask(20, 20, rng);
      n.frame = f;
      // Copy the inside of the box from m into n.
      for (int y = 0; y < 20; ++y) {
        for (int x = 0; x < 20; ++x) {
          const bool inside = x + 0.5 >= 3.5 && x + 0.5 < 11.0 && y + 0.5 >= 4.25 && y + 0.5 < 9.25;
          if (inside) n.at(y, x) = m.at(y, x);
        }
      }
      a.push_back(m);
      b.push_back(n);
    }
    EXPECT_DOUBLE_EQ(foreground_rate(p, a), foreground_rate(p, b));
  }
}

TEST(FilterStatic, ZeroThresholdKeepsAll) {
  const auto masks = masks_filled(8, 16, 16, 0);
  std::vector<Proposal> props{proposal_with_box(1, 1, 4, 4, 0, 8), proposal_with_box(5, 5, 4, 4, 0, 8, ObjClass::kPerson)};
  const auto kept = filter_static(props, masks, {0.0, 0.0});
  EXPECT_EQ(kept.size(), 2u);
}

TEST(FilterStatic, FullThresholdNeedsPerfectForeground) {
  auto masks = masks_filled(8, 16, 16, 1);
  masks[3].at(2, 2) = 0;  // one hole inside the first box only
  std::vector<Proposal> props{proposal_with_box(1, 1, 4, 4, 0, 8), proposal_with_box(8, 8, 4, 4, 0, 8)};
  const auto kept = filter_static(props, masks, {1.0, 1.0});
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_DOUBLE_EQ(kept[0].boxes[0].x, 8.0);
}

TEST(FilterStatic, MonotoneInThreshold) {
  std::mt19937_64 rng(7);
  std::vector<ForegroundMask> masks;
  for (int f = 0; f < 12; ++f) {
    auto m = random_mask(24, 24, rng, 0.3);
    m.frame = f;
    masks.push_back(m);
  }
  std::vector<Proposal> props;
  std::uniform_real_distribution<double> pos(0, 18);
  for (int i = 0; i < 30; ++i) {
    props.push_back(proposal_with_box(pos(rng), pos(rng), 5, 5, 0, 12, i % 2 ? ObjClass::kPerson : ObjClass::kVehicle));
  }
  std::size_t previous = props.size() + 1;
  for (double t = 0.0; t <= 1.0; t += 0.05) {
    const auto kept = filter_static(props, masks, {t, t});
    EXPECT_LE(kept.size(), previous);
    previous = kept.size();
  }
}

TEST(FilterStatic, ParkedVehicleDroppedMovingKept) {
  SceneScript s;
  s.frames = 140;
  ActorScript parked;
  parked.actor_id = 0;
  parked.start_frame = 0;
  parked.length = 140;
  parked.x0 = 30;
  parked.y0 = 30;
  ActorScript moving;
  moving.actor_id = 1;
  moving.activity = "vehicle_moves";
  moving.start_frame = 108;
  moving.length = 32;
  moving.x0 = 20;
  moving.y0 = 90;
  moving.speed = 2.5;
  s.actors = {parked, moving};
  const auto scene = render_scene(s, vehicle_activities());

  BackgroundModel model(s.height, s.width);
  std::vector<ForegroundMask> masks;
  const std::size_t plane = static_cast<std::size_t>(s.height) * s.width;
  for (int t = 0; t < s.frames; ++t) {
    std::vector<float> f(plane);
    for (std::size_t k = 0; k < plane; ++k) f[k] = scene.frames.data()[t * plane + k] * 255.0f;
    masks.push_back(median_denoise(model.update(f, t), 3));
  }
  std::vector<BBox> boxes;
  for (const auto& ab : scene.detections) boxes.push_back(ab.box);
  const auto tracks = track_video(boxes, {});
  ASSERT_EQ(tracks.size(), 2u);
  std::vector<Proposal> parked_props, moving_props;
  for (const auto& t : tracks) {
    for (const auto& p : make_proposals(t, {16, 8, 1.5, 32, 32}, s.width, s.height)) {
      if (p.t0 < 100) continue;  // after burn-in
      (t.first_frame() == 0 ? parked_props : moving_props).push_back(p);
    }
  }
  ASSERT_FALSE(parked_props.empty());
  ASSERT_FALSE(moving_props.empty());
  for (const auto& p : parked_props) EXPECT_LT(foreground_rate(p, masks), 0.15);
  EXPECT_TRUE(filter_static(parked_props, masks, {}).empty());
  EXPECT_EQ(filter_static(moving_props, masks, {}).size(), moving_props.size());
}

TEST(RunLength, RoundTrip) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    auto m = random_mask(13, 7, rng, 0.4);
    m.frame = trial;
    const auto runs = encode_runs(m);
    const auto back = decode_runs(runs, trial, 13, 7);
    EXPECT_EQ(back.cells, m.cells);
    EXPECT_EQ(std::accumulate(runs.begin(), runs.end(), 0), 13 * 7);
  }
}

TEST(RunLength, StartsWithBackgroundRun) {
  ForegroundMask m(0, 1, 3);
  m.cells = {1, 1, 0};
  EXPECT_EQ(encode_runs(m), (std::vector<int>{0, 2, 1}));
}
