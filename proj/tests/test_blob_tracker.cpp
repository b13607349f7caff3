#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <random>

#include "neurotouch/blob_tracker.hpp"
#include "neurotouch/gel_sim.hpp"
#include "support.hpp"

using namespace neurotouch;

namespace {

Frame rest_frame() {
  const sim::GelScene scene = sim::GelScene::make();
  const std::vector<Vec2> zero(scene.rest_positions.size());
  return sim::render_frame(scene, zero, 0);
}

bool positive_definite(const Eigen::Matrix4d& p) {
  if (!p.isApprox(p.transpose(), 1e-12)) return false;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(p);
  return es.eigenvalues().minCoeff() > 0.0;
}

}  // namespace

TEST(TrackerInit, RestFrameGives177States) {
  BlobTracker tr;
  tr.init_from_frame(rest_frame());
  ASSERT_EQ(tr.markers().size(), 177u);
  const sim::GelScene scene = sim::GelScene::make();
  for (const auto& m : tr.markers()) {
    double best = 1e9;
    for (Vec2 p : scene.rest_positions) best = std::min(best, distance(p, m.position));
    EXPECT_LT(best, 0.05);
  }
}

TEST(TrackerInit, BlackFrameIsAnError) {
  BlobTracker tr;
  try {
    tr.init_from_frame(Frame(kSensorWidth, kSensorHeight, 0, 0));
    FAIL();
  } catch (const TrackerInitError& e) {
    EXPECT_EQ(e.found(), 0);
    EXPECT_EQ(e.expected(), 177);
  }
}

TEST(TrackerInit, WrongCountCarriesFoundCount) {
  const sim::GelScene scene = sim::GelScene::make();
  const std::vector<Vec2> some(scene.rest_positions.begin(), scene.rest_positions.begin() + 10);
  try {
    init_markers_from_frame(sim::render_disks(scene, some, 1.25, 0), BlobParams{});
    FAIL();
  } catch (const TrackerInitError& e) {
    EXPECT_EQ(e.found(), 10);
  }
}

TEST(TrackerInit, SingleDiskCentroid) {
  const sim::GelScene scene = sim::GelScene::make();
  const std::vector<Vec2> one{{100.0, 50.0}};
  BlobParams p;
  p.expected_markers = 1;
  const auto states = init_markers_from_frame(sim::render_disks(scene, one, 5.0, 0), p);
  ASSERT_EQ(states.size(), 1u);
  EXPECT_NEAR(states[0].position.x, 100.0, 0.5);
  EXPECT_NEAR(states[0].position.y, 50.0, 0.5);
}

TEST(TrackerUpdate, EventAtBlobPositionShrinksCovariance) {
  BlobParams p;
  p.support_window_us = 0;
  BlobTracker tr(p);
  tr.init_from_frame(rest_frame());
  const MarkerState before = tr.markers()[50];
  const Event e{static_cast<std::uint16_t>(std::lround(before.position.x)),
                static_cast<std::uint16_t>(std::lround(before.position.y)), 0, Polarity::Positive};
  ASSERT_TRUE(tr.process_event(e));
  const MarkerState& after = tr.markers()[50];
  // Zero innovation up to the sub-pixel centroid offset.
  EXPECT_LT(distance(after.position, before.position), 0.05);
  EXPECT_LT(after.covariance(0, 0), before.covariance(0, 0));
  EXPECT_LT(after.covariance(1, 1), before.covariance(1, 1));
}

TEST(TrackerUpdate, IsolatedEventIsIgnored) {
  BlobTracker tr;
  tr.init_from_frame(rest_frame());
  const MarkerState before = tr.markers()[50];
  const Event e{static_cast<std::uint16_t>(before.position.x + 3), static_cast<std::uint16_t>(before.position.y), 10,
                Polarity::Positive};
  EXPECT_FALSE(tr.process_event(e));
  EXPECT_EQ(tr.markers()[50].position, before.position);
  // A second nearby event inside the support window is used.
  Event e2 = e;
  e2.t = 500;
  EXPECT_TRUE(tr.process_event(e2));
  EXPECT_NE(tr.markers()[50].position, before.position);
}

TEST(TrackerUpdate, GatedEventsChangeNothing) {
  BlobTracker tr;
  tr.init_from_frame(rest_frame());
  const auto before = tr.markers();
  // Corners of the sensor are far outside the gel.
  for (Timestamp t = 0; t < 100; ++t) {
    EXPECT_FALSE(tr.process_event({2, 2, t, Polarity::Positive}));
    EXPECT_FALSE(tr.process_event({340, 255, t, Polarity::Negative}));
  }
  const auto& after = tr.markers();
  for (std::size_t i = 0; i < before.size(); ++i) {
    EXPECT_EQ(after[i].position, before[i].position);
    EXPECT_EQ(after[i].covariance, before[i].covariance);
    EXPECT_EQ(after[i].last_update, before[i].last_update);
  }
}

TEST(TrackerUpdate, CovarianceStaysPositiveDefinite) {
  std::mt19937_64 rng(5);
  BlobTracker tr;
  tr.init_from_frame(rest_frame());
  const auto anchors = tr.anchors();
  std::uniform_int_distribution<std::size_t> pick(0, anchors.size() - 1);
  std::normal_distribution<double> jitter(0.0, 2.0);
  std::uniform_int_distribution<int> gap(0, 3000);
  Timestamp t = 0;
  for (int i = 0; i < 20000; ++i) {
    t += gap(rng);
    const Vec2 a = anchors[pick(rng)];
    const double x = std::clamp(a.x + jitter(rng), 0.0, kSensorWidth - 1.0);
    const double y = std::clamp(a.y + jitter(rng), 0.0, kSensorHeight - 1.0);
    tr.process_event({static_cast<std::uint16_t>(x), static_cast<std::uint16_t>(y), t, Polarity::Positive});
  }
  for (const auto& m : tr.markers()) EXPECT_TRUE(positive_definite(m.covariance)) << "marker " << m.id;
}

TEST(TrackerUpdate, OutOfOrderEventRejected) {
  BlobTracker tr;
  tr.init_from_frame(rest_frame());
  tr.process_event({10, 10, 1000, Polarity::Positive});
  EXPECT_THROW(tr.process_event({10, 10, 999, Polarity::Positive}), OutOfOrderEventError);
  BlobParams p;
  p.max_time_regression_us = 5;
  BlobTracker lenient(p);
  lenient.init_from_frame(rest_frame());
  lenient.process_event({10, 10, 1000, Polarity::Positive});
  EXPECT_NO_THROW(lenient.process_event({10, 10, 996, Polarity::Positive}));
}

TEST(TrackerMotion, LinearFiftyPixelsInHundredMilliseconds) {
  const auto m = testkit::linear_motion({120.0, 130.0}, {50.0, 0.0}, 0.1, 0.0);
  const auto r = testkit::track_single(m.rec);
  EXPECT_LT(distance(r.position, m.final_true), 1.0);
  EXPECT_NEAR(r.velocity.x, m.final_velocity.x, 0.1 * m.final_velocity.norm());
  EXPECT_NEAR(r.velocity.y, m.final_velocity.y, 0.1 * m.final_velocity.norm());
}

TEST(TrackerMotion, DisplacementFieldAfterMotion) {
  // One moving marker in a full grid; the rest stay put.
  sim::GelScene scene = sim::GelScene::make();
  // The topmost marker moves straight up, away from every other marker.
  std::size_t moving = 0;
  for (std::size_t i = 0; i < scene.rest_positions.size(); ++i)
    if (scene.rest_positions[i].y < scene.rest_positions[moving].y) moving = i;
  std::vector<Vec2> disp(scene.rest_positions.size());
  Recording rec;
  rec.frames.push_back(sim::render_frame(scene, disp, 0));
  sim::EventSimulator ev(scene, 1);
  for (Timestamp t = 1000; t <= 100'000; t += 1000) {
    disp[moving] = {0.0, -50.0 * t / 100'000.0};
    ev.step(disp, t, rec.events);
  }
  BlobTracker tr;
  tr.init_from_frame(rec.frames.front());
  const auto zero = tr.displacement_field();
  for (Vec2 v : zero) EXPECT_EQ(v, Vec2{});
  tr.process(rec.events);
  const auto field = tr.displacement_field();
  const auto anchors = tr.anchors();
  for (std::size_t i = 0; i < field.size(); ++i) {
    if (distance(anchors[i], scene.rest_positions[moving]) < 0.5) {
      EXPECT_NEAR(field[i].norm(), 50.0, 1.0);
    } else {
      EXPECT_LT(field[i].norm(), 1.0) << "marker " << i;
    }
  }
  // No events, no drift.
  EXPECT_EQ(tr.displacement_field(), field);
}

TEST(TrackerReset, ZeroesFieldAndKeepsIdentities) {
  sim::GelScene scene = sim::GelScene::make();
  sim::GestureScript s;
  s.type = GestureType::Push;
  s.finger_centers = {{173.0, 130.0}};
  s.peak_intensity_mm = 3.0;
  s.start_us = 50'000;
  s.envelope = {100'000, 100'000, 100'000};
  s.deformation_sigma_px = sim::sigma_for_intensity(scene, s);
  const Recording rec = sim::generate_labeled_recording(scene, {s}, 600'000);
  BlobTracker tr;
  tr.init_from_frame(rec.frames.front());
  const auto before = tr.markers();
  tr.process(rec.events);
  tr.reset(rec.frames.back());
  ASSERT_EQ(tr.markers().size(), 177u);
  for (Vec2 v : tr.displacement_field()) EXPECT_EQ(v, Vec2{});
  for (std::size_t i = 0; i < before.size(); ++i) {
    EXPECT_EQ(tr.markers()[i].id, before[i].id);
    EXPECT_LT(distance(tr.markers()[i].anchor, before[i].anchor), 0.5 * scene.geometry.marker_pitch_px());
  }
  EXPECT_THROW(tr.reset(Frame(kSensorWidth, kSensorHeight, 0, 0)), TrackerInitError);
}
