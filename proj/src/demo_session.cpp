#include "neurotouch/demo_session.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <istream>
#include <string>

namespace neurotouch::demo {

void DemoConfig::validate() const {
  pipeline.validate();
  if (!(sigma_px > 0.0)) throw std::invalid_argument("demo: sigma_px must be positive");
  if (!(speed_cap_mm_s > 0.0)) throw std::invalid_argument("demo: speed_cap_mm_s must be positive");
  if (!(max_drag_fraction > 0.0 && max_drag_fraction <= 1.0)) {
    throw std::invalid_argument("demo: max_drag_fraction must be in (0, 1]");
  }
  if (!(noise_rate >= 0.0)) throw std::invalid_argument("demo: noise_rate must be >= 0");
  if (max_backlog == 0) throw std::invalid_argument("demo: max_backlog must be positive");
}

Vec2 to_image(Vec2 n, const GeometryConfig& g) {
  const double r = g.gel_radius_px();
  return {g.image_center.x + n.x * r, g.image_center.y - n.y * r};
}

Vec2 to_normalized(Vec2 p, const GeometryConfig& g) {
  const double r = g.gel_radius_px();
  return {(p.x - g.image_center.x) / r, (g.image_center.y - p.y) / r};
}

DemoSession::DemoSession(DemoConfig config) : config_(std::move(config)), stride_(config_.marker_stride) {
  config_.validate();
  scene_ = sim::GelScene::make(config_.pipeline.geometry);
  scene_.noise_rate = config_.noise_rate;
  scene_.noise_seed = config_.noise_seed;
  scene_.validate();
  disp_.assign(scene_.rest_positions.size(), Vec2{});
  events_ = std::make_unique<sim::EventSimulator>(scene_, config_.noise_seed);
  events_->reset(disp_, 0);
  pipeline_ = std::make_unique<Pipeline>(config_.pipeline);
  pipeline_->start(sim::render_frame(scene_, disp_, 0));
  frame_index_ = 1;
}

DemoSession::~DemoSession() {
  if (pipeline_) pipeline_->stop();
}

ServerHello DemoSession::hello() const {
  ServerHello h;
  h.batch_ms = static_cast<double>(config_.pipeline.batch_window_us) / 1000.0;
  h.gel_radius_mm = config_.pipeline.geometry.gel_radius_mm;
  h.marker_count = scene_.rest_positions.size();
  for (Vec2 p : scene_.rest_positions) h.rest_markers.push_back(to_normalized(p, config_.pipeline.geometry));
  return h;
}

void DemoSession::submit(const FingerInput& input, Timestamp at_us) {
  at_us = std::max(at_us, last_input_);
  last_input_ = at_us;
  pending_.emplace_back(at_us, input);
}

void DemoSession::apply(const FingerInput& in) {
  const Vec2 p = to_image(in.position, config_.pipeline.geometry);
  auto it = std::find_if(blobs_.begin(), blobs_.end(), [&](const Blob& b) { return b.finger == in.id; });
  if (!in.pressed) {
    if (it != blobs_.end()) {
      it->finger = -1;
      it->target = {};
    }
    return;
  }
  if (it == blobs_.end()) {
    blobs_.push_back({p, {}, {}, in.id});
    return;
  }
  Vec2 d = p - it->center;
  const double limit = config_.max_drag_fraction * config_.sigma_px * std::sqrt(std::exp(1.0));
  if (d.norm() > limit) d = d * (limit / d.norm());
  it->target = d;
}

void DemoSession::step_deformation(double dt_s) {
  const double max_step = config_.speed_cap_mm_s * config_.pipeline.geometry.px_per_mm * dt_s;
  for (Blob& b : blobs_) {
    const Vec2 delta = b.target - b.drag;
    const double n = delta.norm();
    b.drag = n <= max_step ? b.target : b.drag + delta * (max_step / n);
  }
  std::erase_if(blobs_, [](const Blob& b) { return b.finger < 0 && b.drag == Vec2{}; });

  const double inv = 1.0 / (2.0 * config_.sigma_px * config_.sigma_px);
  for (std::size_t i = 0; i < disp_.size(); ++i) {
    Vec2 u{};
    for (const Blob& b : blobs_) u += b.drag * std::exp(-squared_distance(scene_.rest_positions[i], b.center) * inv);
    disp_[i] = u;
  }
}

DetectionPush DemoSession::advance() {
  const Timestamp w = config_.pipeline.batch_window_us;
  const Timestamp t0 = now_;
  const Timestamp t1 = now_ + w;
  const double substep_us = 1e6 / scene_.substep_hz;
  const double frame_us = 1e6 / scene_.frame_hz;

  // Substeps up to and including t1; events at or after t1 carry over to the next batch.
  Timestamp prev = events_->time();
  for (auto k = static_cast<std::uint64_t>(std::floor(prev / substep_us)) + 1;; ++k) {
    const auto t = static_cast<Timestamp>(std::llround(k * substep_us));
    if (t > t1) break;
    if (t <= prev) continue;
    while (!pending_.empty() && pending_.front().first <= t) {
      apply(pending_.front().second);
      pending_.pop_front();
    }
    step_deformation(static_cast<double>(t - prev) * 1e-6);
    events_->step(disp_, t, scratch_);
    prev = t;
    while (true) {
      const auto tf = static_cast<Timestamp>(std::llround(frame_index_ * frame_us));
      if (tf > t) break;
      pipeline_->push_frame(sim::render_frame(scene_, disp_, tf));
      ++frame_index_;
    }
  }

  const auto split = std::partition_point(scratch_.begin(), scratch_.end(), [&](const Event& e) { return e.t < t1; });
  const std::span<const Event> batch(scratch_.data(), static_cast<std::size_t>(split - scratch_.begin()));
  const PipelineOutput out = pipeline_->process_batch(batch, t0, t1);

  const GeometryConfig& g = config_.pipeline.geometry;
  DetectionPush p;
  p.t_ms = static_cast<double>(t1) / 1000.0;
  p.batch = out.batch;
  p.type = out.estimate.type;
  for (Vec2 c : out.estimate.contact_points) p.contacts.push_back(to_normalized(c, g));
  p.intensity_mm = out.estimate.intensity_mm;
  if (out.estimate.transform) {
    const auto& tp = *out.estimate.transform;
    p.transform = PushTransform{tp.s, tp.theta, tp.t / g.gel_radius_px()};
  }
  p.marker_stride = stride_;
  if (stride_ > 0) {
    const auto pos = pipeline_->tracker().positions();
    for (std::size_t i = 0; i < pos.size(); i += stride_) p.markers.push_back(to_normalized(pos[i], g));
  }
  for (const Event& e : batch) (e.polarity == Polarity::Positive ? p.events_positive : p.events_negative)++;
  p.resting = out.resting;
  p.reset = out.reset;

  scratch_.erase(scratch_.begin(), split);
  now_ = t1;
  return p;
}

ReplayResult replay_trace(const DemoConfig& config, std::span<const FingerInput> trace, double tail_ms) {
  using Clock = std::chrono::steady_clock;
  DemoSession session(config);
  std::vector<Timestamp> at;
  for (const FingerInput& in : trace) {
    const auto t = static_cast<Timestamp>(std::llround(std::max(0.0, in.t_ms) * 1000.0));
    at.push_back(std::max(t, at.empty() ? Timestamp{0} : at.back()));
    session.submit(in, at.back());
  }
  const Timestamp end = (at.empty() ? 0 : at.back()) + static_cast<Timestamp>(std::llround(tail_ms * 1000.0));

  ReplayResult r;
  double wall_total = 0.0;
  std::size_t next_input = 0;
  while (session.now_us() < end || r.pushes.empty()) {
    const auto t0 = Clock::now();
    r.pushes.push_back(session.advance());
    const double wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    wall_total += wall_ms;
    while (next_input < at.size() && at[next_input] <= session.now_us()) {
      const double lag = static_cast<double>(session.now_us() - at[next_input]) / 1000.0 + wall_ms;
      r.max_input_to_push_ms = std::max(r.max_input_to_push_ms, lag);
      ++next_input;
    }
  }
  r.mean_batch_ms = wall_total / static_cast<double>(r.pushes.size());
  return r;
}

std::vector<FingerInput> read_trace(std::istream& in) {
  std::vector<FingerInput> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const ClientMessage m = decode_client_json(line);
      const auto* f = std::get_if<FingerInput>(&m);
      if (!f) throw ProtocolError(ErrorCode::BadMessage, "trace lines must be finger messages");
      out.push_back(*f);
    } catch (const ProtocolError& e) {
      throw ProtocolError(e.code(), "trace line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace neurotouch::demo
