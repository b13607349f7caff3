#include <gtest/gtest.h>

#include <sstream>

#include "neurotouch/gel_sim.hpp"
#include "neurotouch/metrics.hpp"
#include "neurotouch/pipeline.hpp"

using namespace neurotouch;

namespace {

std::vector<PipelineOutput> run_all(const Recording& rec, PipelineConfig cfg = {}) {
  std::vector<PipelineOutput> out;
  run_pipeline(rec, cfg, [&](const PipelineOutput& o) { out.push_back(o); });
  return out;
}

Recording push_recording(double noise = 0.0) {
  sim::GelScene scene = sim::GelScene::make();
  scene.noise_rate = noise;
  sim::GestureScript s;
  s.type = GestureType::Push;
  s.finger_centers = {{165, 135}};
  s.peak_intensity_mm = 5.0;
  s.start_us = 300'000;
  s.envelope = {80'000, 500'000, 80'000};  // about 100 mm/s peak
  s.deformation_sigma_px = sim::sigma_for_intensity(scene, s);
  return sim::generate_labeled_recording(scene, {s}, 1'800'000);
}

void expect_same(const std::vector<PipelineOutput>& a, const std::vector<PipelineOutput>& b) {
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].t, b[i].t);
    EXPECT_EQ(a[i].estimate.type, b[i].estimate.type) << "batch " << i;
    EXPECT_EQ(a[i].estimate.contact_points, b[i].estimate.contact_points);
    EXPECT_EQ(a[i].estimate.intensity_mm, b[i].estimate.intensity_mm);
    EXPECT_EQ(a[i].reset, b[i].reset);
    EXPECT_EQ(a[i].resting, b[i].resting);
    EXPECT_EQ(a[i].events, b[i].events);
  }
}

}  // namespace

TEST(Pipeline, NoiseOnlySecond) {
  sim::GelScene scene = sim::GelScene::make();
  scene.noise_rate = 0.1;
  const Recording rec = sim::generate_labeled_recording(scene, {}, 1'000'000);
  const auto out = run_all(rec);
  ASSERT_EQ(out.size(), 100u);
  std::size_t resets = 0;
  for (const auto& o : out) {
    EXPECT_EQ(o.estimate.type, GestureType::NoGesture);
    resets += o.reset;
  }
  EXPECT_GE(resets, 1u);
}

TEST(Pipeline, EmptyRecordingGivesNoOutputs) {
  EXPECT_TRUE(run_all(Recording{}).empty());
}

TEST(Pipeline, EventsWithoutFramesThrow) {
  Recording rec;
  rec.header.duration_us = 100;
  rec.events.push_back({1, 1, 5, Polarity::Positive});
  EXPECT_THROW(run_all(rec), std::runtime_error);
}

TEST(Pipeline, BlackLaunchFrameThrows) {
  Recording rec;
  rec.header.duration_us = 100'000;
  rec.frames.emplace_back(kSensorWidth, kSensorHeight, 0, 0);
  EXPECT_THROW(run_all(rec), TrackerInitError);
}

TEST(Pipeline, BatchesTileTheStream) {
  const Recording rec = push_recording(0.2);
  const auto out = run_all(rec);
  std::size_t events = 0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    EXPECT_EQ(out[i].batch, i);
    EXPECT_EQ(out[i].t, (i + 1) * 10'000);
    events += out[i].events;
  }
  EXPECT_EQ(events, rec.events.size());
  EXPECT_GE(out.back().t, rec.header.duration_us);
}

TEST(Pipeline, ResetBatchReportsZeroIntensity) {
  const auto out = run_all(push_recording(0.1));
  std::size_t resets = 0;
  for (const auto& o : out) {
    if (!o.reset) continue;
    ++resets;
    EXPECT_EQ(o.estimate.type, GestureType::NoGesture);
    EXPECT_EQ(o.estimate.intensity_mm, 0.0);
  }
  EXPECT_GT(resets, 0u);
}

TEST(Pipeline, PushTrackFollowsLabels) {
  const Recording rec = push_recording();
  const auto out = run_all(rec);
  // NoGesture before, Push through the hold, NoGesture after the release.
  bool held = false;
  for (const auto& o : out) {
    if (o.t <= 300'000) {
      EXPECT_EQ(o.estimate.type, GestureType::NoGesture) << o.t;
    } else if (o.t >= 400'000 && o.t <= 880'000) {
      EXPECT_EQ(o.estimate.type, GestureType::Push) << o.t;
      // A resting verdict early in the attack re-anchors the tracker, which costs the
      // displacement reached at that frame.
      EXPECT_GT(o.estimate.intensity_mm, 3.8) << o.t;
      EXPECT_LT(o.estimate.intensity_mm, 5.6) << o.t;
      held = true;
    } else if (o.t >= 1'200'000) {
      EXPECT_EQ(o.estimate.type, GestureType::NoGesture) << o.t;
    }
  }
  EXPECT_TRUE(held);
  // Intensity rises during the attack and falls during the release.
  double prev = -1.0;
  for (const auto& o : out) {
    if (o.t <= 330'000 || o.t > 380'000) continue;
    EXPECT_GE(o.estimate.intensity_mm, prev) << o.t;
    prev = o.estimate.intensity_mm;
  }
  // Late in the release the reported intensity is well below the hold value.
  double hold = 0.0, late = 0.0;
  for (const auto& o : out) {
    if (o.t == 800'000) hold = o.estimate.intensity_mm;
    if (o.t == 950'000) late = o.estimate.intensity_mm;
  }
  EXPECT_LT(late, 0.8 * hold);
}

TEST(Pipeline, ThreadedMatchesInline) {
  const Recording rec = push_recording(0.1);
  PipelineConfig threaded;
  threaded.threaded = true;
  expect_same(run_all(rec), run_all(rec, threaded));
}

TEST(Pipeline, Deterministic) {
  const Recording rec = push_recording(0.1);
  expect_same(run_all(rec), run_all(rec));
}

TEST(Pipeline, OutputRecordsRoundTripThroughReader) {
  const Recording rec = push_recording();
  PipelineConfig cfg;
  cfg.record_latency = false;
  std::stringstream ss;
  std::vector<PipelineOutput> out;
  run_pipeline(rec, cfg, [&](const PipelineOutput& o) {
    write_output_record(ss, o, cfg);
    out.push_back(o);
  });
  for (const auto& o : out) EXPECT_EQ(o.latency.total_us(), 0.0);
  const auto preds = read_predictions(ss);
  ASSERT_EQ(preds.size(), out.size());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    EXPECT_EQ(preds[i].t, out[i].t);
    EXPECT_EQ(preds[i].type, out[i].estimate.type);
    EXPECT_EQ(preds[i].points, out[i].estimate.contact_points);
    EXPECT_EQ(preds[i].intensity_mm, out[i].estimate.intensity_mm);
  }
}

TEST(Pipeline, ConfigValidation) {
  PipelineConfig cfg;
  cfg.batch_window_us = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.engine.r = -1.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(Bench, ReportFieldsNonNegative) {
  const Recording rec = push_recording(0.5);
  const BenchReport r = bench_pipeline(rec, PipelineConfig{});
  EXPECT_EQ(r.events, rec.events.size());
  EXPECT_EQ(r.frames, rec.frames.size() - 1);  // the launch frame is not judged
  EXPECT_GT(r.batches, 0u);
  EXPECT_GT(r.wall_s, 0.0);
  EXPECT_GT(r.tracker_events_per_s, 0.0);
  for (const StageStats* s : {&r.tracking_us, &r.contact_us, &r.classify_us, &r.total_us, &r.rest_us}) {
    EXPECT_GE(s->mean, 0.0);
    EXPECT_GE(s->stddev, 0.0);
    EXPECT_GE(s->max, s->mean);
  }
  std::stringstream ss;
  write_bench_report(ss, r);
  EXPECT_NE(ss.str().find("tracker_events_per_s"), std::string::npos);
}
