#include "neurotouch/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <nlohmann/json.hpp>
#include <ostream>
#include <stdexcept>

namespace neurotouch {

namespace {

using Clock = std::chrono::steady_clock;

double micros_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::micro>(Clock::now() - t0).count();
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t batch) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (batch + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

StageStats stats_of(const std::vector<double>& v) {
  StageStats s;
  if (v.empty()) return s;
  double sum = 0.0;
  for (double x : v) {
    sum += x;
    s.max = std::max(s.max, x);
  }
  s.mean = sum / static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - s.mean) * (x - s.mean);
  s.stddev = std::sqrt(var / static_cast<double>(v.size()));
  return s;
}

}  // namespace

void PipelineConfig::validate() const {
  if (batch_window_us == 0) throw std::invalid_argument("pipeline: batch_window_us must be positive");
  if (reset_window_batches < 0) throw std::invalid_argument("pipeline: reset_window_batches must be >= 0");
  geometry.validate();
  tracker.validate();
  engine.validate();
  rest.validate();
}

Pipeline::Pipeline(PipelineConfig config) : config_(std::move(config)), tracker_(config_.tracker), rest_(config_.rest) {
  config_.engine.px_per_mm = config_.geometry.px_per_mm;
  config_.validate();
}

Pipeline::~Pipeline() { stop(); }

void Pipeline::start(const Frame& launch) {
  if (started_) throw std::logic_error("Pipeline: already started");
  tracker_.init_from_frame(launch);
  rest_.set_reference(launch);
  last_reset_frame_t_ = launch.t;
  started_ = true;
  if (config_.threaded) worker_ = std::thread([this] { frame_worker(); });
}

void Pipeline::stop() {
  {
    std::lock_guard lock(mu_);
    stopping_ = true;
  }
  cv_in_.notify_all();
  if (worker_.joinable()) worker_.join();
}

Pipeline::Verdict Pipeline::evaluate(std::shared_ptr<const Frame> frame) const {
  const auto t0 = Clock::now();
  Verdict v;
  v.v = rest_.evaluate(*frame);
  v.frame = std::move(frame);
  v.latency_us = micros_since(t0);
  return v;
}

void Pipeline::frame_worker() {
  for (;;) {
    std::shared_ptr<const Frame> f;
    {
      std::unique_lock lock(mu_);
      cv_in_.wait(lock, [&] { return stopping_ || !inbox_.empty(); });
      if (inbox_.empty()) return;
      f = std::move(inbox_.front());
      inbox_.pop_front();
    }
    Verdict v = evaluate(std::move(f));
    {
      std::lock_guard lock(mu_);
      outbox_.push_back(std::move(v));
    }
    cv_out_.notify_all();
  }
}

void Pipeline::push_frame(Frame frame) {
  if (!started_) throw std::logic_error("Pipeline: push_frame before start");
  auto f = std::make_shared<const Frame>(std::move(frame));
  pending_.push_back(f->t);
  {
    std::lock_guard lock(mu_);
    inbox_.push_back(std::move(f));
  }
  cv_in_.notify_one();
}

void Pipeline::collect_verdicts(Timestamp upto) {
  while (!pending_.empty() && pending_.front() <= upto) {
    pending_.pop_front();
    Verdict v;
    if (config_.threaded) {
      std::unique_lock lock(mu_);
      cv_out_.wait(lock, [&] { return !outbox_.empty(); });
      v = std::move(outbox_.front());
      outbox_.pop_front();
    } else {
      std::shared_ptr<const Frame> f = std::move(inbox_.front());
      inbox_.pop_front();
      v = evaluate(std::move(f));
    }
    rest_latency_.push_back(v.latency_us);
    last_resting_ = v.v.resting;
    if (v.v.resting && v.v.t > last_reset_frame_t_) candidate_ = std::move(v);
  }
}

PipelineOutput Pipeline::process_batch(std::span<const Event> events, Timestamp start, Timestamp end) {
  if (!started_) throw std::logic_error("Pipeline: process_batch before start");
  PipelineOutput out;
  out.batch = batch_;
  out.t = end;
  out.events = events.size();

  collect_verdicts(start);
  if (candidate_) {
    const Timestamp horizon = config_.batch_window_us * static_cast<Timestamp>(config_.reset_window_batches);
    if (candidate_->v.t + horizon >= start) {
      try {
        tracker_.reset(*candidate_->frame);
        out.reset = true;
        ++resets_;
      } catch (const TrackerInitError&) {
        // keep tracking on the previous anchors
      }
      last_reset_frame_t_ = candidate_->v.t;
    }
    candidate_.reset();
  }
  out.resting = last_resting_;

  const bool timed = config_.record_latency;
  auto t0 = Clock::now();
  out.associated = tracker_.process(events);
  if (timed) out.latency.tracking_us = micros_since(t0);

  if (!out.reset) {
    const std::vector<Vec2> anchors = tracker_.anchors();
    const std::vector<Vec2> positions = tracker_.positions();
    const std::uint64_t seed = mix_seed(config_.seed, batch_);
    t0 = Clock::now();
    const ContactDetection det = detect_contact_points(anchors, positions, config_.engine, seed);
    if (timed) out.latency.contact_us = micros_since(t0);
    t0 = Clock::now();
    out.estimate = estimate_from_contacts(anchors, positions, det, config_.engine, seed);
    if (timed) out.latency.classify_us = micros_since(t0);
  }
  ++batch_;
  return out;
}

namespace {

std::uint64_t drive(Pipeline& pipe, const Recording& rec, const OutputSink& sink) {
  pipe.start(rec.frames.front());
  const Timestamp w = pipe.config().batch_window_us;
  Timestamp span = std::max<Timestamp>(rec.header.duration_us, rec.frames.back().t + 1);
  if (!rec.events.empty()) span = std::max(span, rec.events.back().t + 1);
  const std::uint64_t batches = (span + w - 1) / w;

  std::size_t ei = 0;
  std::size_t fi = 1;
  for (std::uint64_t k = 0; k < batches; ++k) {
    const Timestamp t0 = k * w;
    const Timestamp t1 = t0 + w;
    while (fi < rec.frames.size() && rec.frames[fi].t < t1) pipe.push_frame(rec.frames[fi++]);
    const std::size_t begin = ei;
    while (ei < rec.events.size() && rec.events[ei].t < t1) ++ei;
    const auto out = pipe.process_batch(std::span(rec.events).subspan(begin, ei - begin), t0, t1);
    if (sink) sink(out);
  }
  pipe.stop();
  return batches;
}

}  // namespace

std::uint64_t run_pipeline(const Recording& rec, const PipelineConfig& config, const OutputSink& sink) {
  if (rec.frames.empty()) {
    if (rec.events.empty()) return 0;
    throw std::runtime_error("recording has events but no frame to initialize the tracker");
  }
  Pipeline pipe(config);
  return drive(pipe, rec, sink);
}

void write_output_record(std::ostream& out, const PipelineOutput& o, const PipelineConfig& config) {
  nlohmann::ordered_json j;
  j["batch"] = o.batch;
  j["t"] = o.t;
  j["type"] = std::string(to_string(o.estimate.type));
  auto pts = nlohmann::ordered_json::array();
  for (Vec2 p : o.estimate.contact_points) pts.push_back({p.x, p.y});
  j["points"] = std::move(pts);
  j["intensity_mm"] = o.estimate.intensity_mm;
  j["resting"] = o.resting;
  j["reset"] = o.reset;
  j["events"] = o.events;
  j["latency_us"] = {{"tracking", o.latency.tracking_us},
                     {"contact", o.latency.contact_us},
                     {"classify", o.latency.classify_us}};
  if (config.emit_diagnostics) {
    j["outliers"] = o.estimate.outlier_count;
    j["neighborhood"] = o.estimate.neighborhood_size;
    j["associated"] = o.associated;
    if (o.estimate.transform) {
      const auto& tp = *o.estimate.transform;
      j["transform"] = {{"s", tp.s}, {"theta", tp.theta}, {"tx", tp.t.x}, {"ty", tp.t.y}};
    }
  }
  out << j.dump() << '\n';
}

BenchReport bench_pipeline(const Recording& rec, PipelineConfig config) {
  config.record_latency = true;
  config.threaded = false;
  std::vector<double> tracking, contact, classify, total;
  const auto t0 = Clock::now();
  BenchReport r;

  if (rec.frames.empty()) throw std::runtime_error("bench: recording has no frames");
  Pipeline pipe(config);
  const std::uint64_t batches = drive(pipe, rec, [&](const PipelineOutput& o) {
    tracking.push_back(o.latency.tracking_us);
    contact.push_back(o.latency.contact_us);
    classify.push_back(o.latency.classify_us);
    total.push_back(o.latency.total_us());
  });
  r.wall_s = std::chrono::duration<double>(Clock::now() - t0).count();
  r.events = rec.events.size();
  r.batches = batches;
  r.frames = pipe.rest_latencies_us().size();
  double track_s = 0.0;
  for (double x : tracking) track_s += x * 1e-6;
  r.tracker_events_per_s = track_s > 0.0 ? static_cast<double>(r.events) / track_s : 0.0;
  r.batches_per_s = r.wall_s > 0.0 ? static_cast<double>(batches) / r.wall_s : 0.0;
  r.tracking_us = stats_of(tracking);
  r.contact_us = stats_of(contact);
  r.classify_us = stats_of(classify);
  r.total_us = stats_of(total);
  r.rest_us = stats_of(pipe.rest_latencies_us());
  return r;
}

void write_bench_report(std::ostream& out, const BenchReport& r) {
  auto stage = [](const StageStats& s) { return nlohmann::ordered_json{{"mean", s.mean}, {"std", s.stddev}, {"max", s.max}}; };
  nlohmann::ordered_json j;
  j["events"] = r.events;
  j["batches"] = r.batches;
  j["frames"] = r.frames;
  j["wall_s"] = r.wall_s;
  j["tracker_events_per_s"] = r.tracker_events_per_s;
  j["batches_per_s"] = r.batches_per_s;
  j["latency_us"] = {{"marker_tracking", stage(r.tracking_us)},
                     {"contact_point_detection", stage(r.contact_us)},
                     {"gesture_type_intensity", stage(r.classify_us)},
                     {"total_per_batch", stage(r.total_us)},
                     {"resting_position_detection", stage(r.rest_us)}};
  out << j.dump(2) << '\n';
}

}  // namespace neurotouch
