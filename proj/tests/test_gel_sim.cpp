#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include "neurotouch/components.hpp"
#include "neurotouch/gel_sim.hpp"
#include "support.hpp"

using namespace neurotouch;
using namespace neurotouch::sim;

namespace {

GestureScript push_script(Vec2 at, double mm, Timestamp start = 100'000) {
  GestureScript s;
  s.type = GestureType::Push;
  s.finger_centers = {at};
  s.peak_intensity_mm = mm;
  s.start_us = start;
  s.envelope = {200'000, 300'000, 200'000};
  return s;
}

Timestamp hold_time(const GestureScript& s) { return s.start_us + s.envelope.attack_us + s.envelope.hold_us / 2; }

}  // namespace

TEST(Scene, DefaultGridHas177Markers) {
  const GelScene s = GelScene::make();
  EXPECT_EQ(s.rest_positions.size(), 177u);
  for (Vec2 p : s.rest_positions) EXPECT_LE(distance(p, s.geometry.image_center), 75.0 + 1e-9);
}

TEST(Envelope, RampsHoldAndRelease) {
  const Envelope e{100, 200, 100};
  EXPECT_DOUBLE_EQ(e.value(0), 0.0);
  EXPECT_NEAR(e.value(50), 0.5, 1e-12);
  EXPECT_DOUBLE_EQ(e.value(150), 1.0);
  EXPECT_NEAR(e.value(350), 0.5, 1e-12);
  EXPECT_DOUBLE_EQ(e.value(400), 0.0);
}

TEST(Script, RejectsBadFingerCountsAndSpeeds) {
  GestureScript s = push_script({173, 130}, 4.0);
  EXPECT_NO_THROW(s.validate());
  s.finger_centers.push_back({150, 130});
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = push_script({173, 130}, 4.0);
  s.envelope.attack_us = 1000;  // 4 mm in 1 ms is far past the speed cap
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = push_script({173, 130}, 19.0);
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s.type = GestureType::Zoom;
  s.peak_intensity_mm = 3.0;
  s.finger_centers = {{150, 130}};
  EXPECT_THROW(s.validate(), std::invalid_argument);
}

TEST(Field, ZeroAtScriptStart) {
  const GelScene scene = GelScene::make();
  const GestureScript s = push_script({173, 130}, 4.0, 0);
  for (Vec2 v : true_displacement_field(scene, s, 0)) EXPECT_EQ(v, Vec2{});
}

TEST(Field, GaussianTailVanishes) {
  const GelScene scene = GelScene::make();
  const GestureScript s = push_script({120, 130}, 4.0);
  const auto field = true_displacement_field(scene, s, hold_time(s));
  for (std::size_t i = 0; i < field.size(); ++i) {
    if (distance(scene.rest_positions[i], {120, 130}) > 3.0 * s.deformation_sigma_px + 40.0) {
      EXPECT_LT(field[i].norm(), 1e-3);
    }
  }
}

TEST(Field, PushFourMillimetersMeansTenPixelsNearContact) {
  const GelScene scene = GelScene::make();
  const GestureScript s = push_script({173, 130}, 4.0);
  const auto field = true_displacement_field(scene, s, hold_time(s));
  // Contact: the largest displacement within r of the moved finger; mean over markers within r of it.
  std::size_t best = 0;
  for (std::size_t i = 0; i < field.size(); ++i)
    if (field[i].norm() > field[best].norm()) best = i;
  const Vec2 c = scene.rest_positions[best] + field[best];
  double sum = 0.0;
  int n = 0;
  for (std::size_t i = 0; i < field.size(); ++i) {
    if (distance(scene.rest_positions[i] + field[i], c) <= 30.0) {
      sum += field[i].norm();
      ++n;
    }
  }
  EXPECT_NEAR(sum / n, 10.0, 0.1);
}

TEST(Field, LabelIntensityIsContinuousAndZeroOutside) {
  const GelScene scene = GelScene::make();
  GestureScript s;
  s.type = GestureType::TwistCW;
  s.finger_centers = {{150, 130}, {196, 130}};
  s.peak_intensity_mm = 3.0;
  s.start_us = 50'000;
  s.envelope = {100'000, 100'000, 100'000};
  const GestureField f(scene, s);
  double prev = 0.0;
  for (Timestamp t = 0; t < 400'000; t += 1000) {
    const GestureLabel l = f.label(t);
    if (t < s.start_us || t >= s.end_us()) {
      EXPECT_EQ(l.type, GestureType::NoGesture);
      EXPECT_EQ(l.intensity_mm, 0.0);
      EXPECT_TRUE(l.contact_points.empty());
    }
    // Contacts are discrete markers, so a handover can step the intensity slightly.
    EXPECT_LT(std::abs(l.intensity_mm - prev), 0.25) << "t=" << t;
    prev = l.intensity_mm;
  }
}

TEST(Render, RestFrameHas177Components) {
  const GelScene scene = GelScene::make();
  const std::vector<Vec2> zero(scene.rest_positions.size());
  const Frame f = render_frame(scene, zero, 0);
  EXPECT_EQ(white_regions(f, 128).size(), 177u);
}

TEST(Render, ShiftedMarkerCentroidFollows) {
  const GelScene scene = GelScene::make();
  std::vector<Vec2> disp(scene.rest_positions.size());
  const std::size_t m = 88;
  disp[m] = {10.0, 0.0};
  const Frame f = render_frame(scene, disp, 0);
  const Vec2 target = scene.rest_positions[m] + disp[m];
  const auto regions = white_regions(f, 128);
  const auto it = std::min_element(regions.begin(), regions.end(), [&](const Region& a, const Region& b) {
    return distance(a.centroid, target) < distance(b.centroid, target);
  });
  ASSERT_NE(it, regions.end());
  EXPECT_NEAR(distance(it->centroid, scene.rest_positions[m]), 10.0, 0.2);
}

TEST(Render, AllMarkersOutsideGivesBlackFrame) {
  const GelScene scene = GelScene::make();
  std::vector<Vec2> disp(scene.rest_positions.size(), Vec2{1000.0, 1000.0});
  const Frame f = render_frame(scene, disp, 0);
  EXPECT_TRUE(std::all_of(f.pixels.begin(), f.pixels.end(), [&](std::uint8_t p) { return p <= scene.background + 0.5; }));
  EXPECT_TRUE(white_regions(f, 128).empty());
}

TEST(Events, StaticNoiselessSceneIsSilent) {
  const GelScene scene = GelScene::make();
  const Recording r = generate_labeled_recording(scene, {}, 500'000);
  EXPECT_TRUE(r.events.empty());
  EXPECT_FALSE(r.frames.empty());
  for (const auto& l : r.labels) {
    EXPECT_EQ(l.type, GestureType::NoGesture);
    EXPECT_EQ(l.intensity_mm, 0.0);
  }
}

TEST(Events, NoiseCountIsPoisson) {
  GelScene scene = GelScene::make();
  scene.noise_rate = 0.5;
  const Recording r = generate_labeled_recording(scene, {}, 2'000'000);
  const double expected = 0.5 * kSensorWidth * kSensorHeight * 2.0;
  EXPECT_NEAR(static_cast<double>(r.events.size()), expected, 3.0 * std::sqrt(expected));
}

TEST(Events, SortedAndInBounds) {
  GelScene scene = GelScene::make();
  scene.noise_rate = 0.2;
  const Recording r = generate_labeled_recording(scene, {push_script({173, 130}, 6.0)}, 1'000'000);
  ASSERT_FALSE(r.events.empty());
  EXPECT_TRUE(std::is_sorted(r.events.begin(), r.events.end(), [](auto& a, auto& b) { return a.t < b.t; }));
  for (const Event& e : r.events) {
    EXPECT_LT(e.x, kSensorWidth);
    EXPECT_LT(e.y, kSensorHeight);
    EXPECT_LE(e.t, 1'000'000u);
  }
}

TEST(Events, LeadingEdgePositiveTrailingEdgeNegative) {
  const auto m = testkit::linear_motion({100, 100}, {10, 0}, 0.05, 0.0);
  double pos_x = 0, neg_x = 0;
  int np = 0, nn = 0;
  for (const Event& e : m.rec.events) {
    if (e.polarity == Polarity::Positive) {
      pos_x += e.x;
      ++np;
    } else {
      neg_x += e.x;
      ++nn;
    }
  }
  ASSERT_GT(np, 0);
  ASSERT_GT(nn, 0);
  // Midpoint of the sweep is x = 105; a brightening leading edge sits ahead of the darkening trail.
  EXPECT_GT(pos_x / np, neg_x / nn + 1.0);
  EXPECT_GT(pos_x / np, 105.0);
  EXPECT_LT(neg_x / nn, 105.0);
}

TEST(Events, PolarityBalancesOverFullCycle) {
  const GelScene scene = GelScene::make();
  const Recording r = generate_labeled_recording(scene, {push_script({173, 130}, 5.0)}, 1'000'000);
  std::map<std::uint32_t, int> net;
  for (const Event& e : r.events) net[e.y * kSensorWidth + e.x] += e.polarity == Polarity::Positive ? 1 : -1;
  for (auto [pix, d] : net) EXPECT_LE(std::abs(d), 1) << "pixel " << pix;
}

TEST(Generation, DeterministicForSameSeed) {
  GelScene scene = GelScene::make();
  scene.noise_rate = 0.3;
  scene.noise_seed = 11;
  const std::vector<GestureScript> scripts = {push_script({160, 120}, 5.0)};
  const Recording a = generate_labeled_recording(scene, scripts, 800'000);
  const Recording b = generate_labeled_recording(scene, scripts, 800'000);
  EXPECT_EQ(a, b);
  scene.noise_seed = 12;
  EXPECT_NE(generate_labeled_recording(scene, scripts, 800'000).events, a.events);
}

TEST(Generation, PushLabelsTraceEnvelope) {
  const GelScene scene = GelScene::make();
  const GestureScript s = push_script({173, 130}, 4.0);
  const Recording r = generate_labeled_recording(scene, {s}, 1'000'000);
  double peak = 0.0;
  for (const auto& l : r.labels) {
    if (l.t < s.start_us || l.t >= s.end_us()) {
      EXPECT_EQ(l.type, GestureType::NoGesture);
      continue;
    }
    EXPECT_EQ(l.type, GestureType::Push);
    const double e = s.envelope.value(l.t - s.start_us);
    if (e == 1.0) {
      EXPECT_NEAR(l.intensity_mm, 4.0, 1e-4);
    }
    peak = std::max(peak, l.intensity_mm);
  }
  EXPECT_NEAR(peak, 4.0, 1e-4);
  EXPECT_EQ(r.labels.front().intensity_mm, 0.0);
  EXPECT_EQ(r.labels.back().intensity_mm, 0.0);
}

TEST(Generation, OverlappingScriptsRejected) {
  const GelScene scene = GelScene::make();
  GestureScript a = push_script({150, 130}, 3.0, 100'000);
  GestureScript b = push_script({190, 130}, 3.0, 300'000);
  EXPECT_THROW(generate_labeled_recording(scene, {a, b}, 2'000'000), std::invalid_argument);
}

TEST(Benchmark, CoversAllTypesAndFingerCounts) {
  const GelScene scene = GelScene::make();
  BenchmarkRecipe rec;
  rec.duration_s = 60.0;
  const auto scripts = make_benchmark_scripts(scene, rec);
  std::map<GestureType, int> types;
  std::map<std::size_t, int> fingers;
  double lo = 1e9, hi = 0.0;
  for (const auto& s : scripts) {
    EXPECT_NO_THROW(s.validate());
    ++types[s.type];
    ++fingers[s.finger_centers.size()];
    lo = std::min(lo, s.peak_intensity_mm);
    hi = std::max(hi, s.peak_intensity_mm);
    EXPECT_LE(s.end_us(), 60'000'000u);
  }
  EXPECT_EQ(types.size(), 5u);
  EXPECT_EQ(fingers.size(), 3u);
  EXPECT_LT(lo, 3.0);
  EXPECT_GT(hi, 12.0);
}

TEST(Benchmark, SigmaKeepsFieldFoldFree) {
  const GelScene scene = GelScene::make();
  GestureScript s = push_script({173, 130}, 18.0);
  s.deformation_sigma_px = sigma_for_intensity(scene, s);
  const GestureField f(scene, s);
  // Along the push direction the deformed coordinate must stay increasing.
  double prev = -1e9;
  for (double x = 60.0; x <= 290.0; x += 0.5) {
    const double moved = x + f.point_displacement({x, 130.0}, 1.0).x;
    EXPECT_GT(moved, prev);
    prev = moved;
  }
}
