#include "neurotouch/gel_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace neurotouch::sim {

namespace {

constexpr double kPi = std::numbers::pi;
// Markers whose target moved less than this since their last render are left in place.
constexpr double kRenderEpsilonPx = 1e-3;

double raised_cosine_up(double u) { return 0.5 * (1.0 - std::cos(kPi * std::clamp(u, 0.0, 1.0))); }

int finger_count_min(GestureType t) { return t == GestureType::Push ? 1 : 2; }
int finger_count_max(GestureType t) { return t == GestureType::Push ? 1 : 3; }

}  // namespace

double Envelope::value(Timestamp dt) const {
  if (dt < attack_us) return attack_us == 0 ? 1.0 : raised_cosine_up(static_cast<double>(dt) / attack_us);
  dt -= attack_us;
  if (dt < hold_us) return 1.0;
  dt -= hold_us;
  if (dt < release_us) return 1.0 - raised_cosine_up(static_cast<double>(dt) / release_us);
  return 0.0;
}

void GestureScript::validate() const {
  if (type == GestureType::NoGesture) throw std::invalid_argument("script: NoGesture cannot be scripted");
  const int n = static_cast<int>(finger_centers.size());
  if (n < finger_count_min(type) || n > finger_count_max(type)) {
    throw std::invalid_argument("script: " + std::string(to_string(type)) + " cannot use " + std::to_string(n) +
                                " finger(s)");
  }
  if (!finger_gains.empty() && finger_gains.size() != finger_centers.size()) {
    throw std::invalid_argument("script: finger_gains must match finger count");
  }
  for (double g : finger_gains) {
    if (!(g > 0.0 && g <= 1.0)) throw std::invalid_argument("script: finger gains must be in (0, 1]");
  }
  if (!(peak_intensity_mm > 0.0) || peak_intensity_mm > kMaxPeakIntensityMm) {
    throw std::invalid_argument("script: peak intensity must be in (0, 18.1] mm");
  }
  if (!(speed_cap_mm_s > 0.0) || speed_cap_mm_s > kMaxSpeedCapMmS) {
    throw std::invalid_argument("script: speed cap must be in (0, 220] mm/s");
  }
  if (!(deformation_sigma_px > 0.0)) throw std::invalid_argument("script: deformation sigma must be positive");
  // Raised-cosine ramps peak at pi/2 * amplitude / duration.
  const auto ramp_speed = [&](Timestamp d) {
    return d == 0 ? INFINITY : 0.5 * kPi * peak_intensity_mm / (static_cast<double>(d) * 1e-6);
  };
  if (ramp_speed(envelope.attack_us) > speed_cap_mm_s * (1.0 + 1e-9) ||
      ramp_speed(envelope.release_us) > speed_cap_mm_s * (1.0 + 1e-9)) {
    throw std::invalid_argument("script: attack/release too short for the speed cap");
  }
}

std::vector<Vec2> marker_grid(const GeometryConfig& g) {
  const double pitch = g.marker_pitch_px();
  const double radius = g.gel_radius_px();
  const int n = static_cast<int>(std::floor(radius / pitch)) + 1;
  std::vector<Vec2> out;
  for (int j = -n; j <= n; ++j) {
    for (int i = -n; i <= n; ++i) {
      const Vec2 off{i * pitch, j * pitch};
      if (off.norm() <= radius + 1e-9) out.push_back(g.image_center + off);
    }
  }
  return out;
}

GelScene GelScene::make(const GeometryConfig& geometry) {
  geometry.validate();
  GelScene s;
  s.geometry = geometry;
  s.rest_positions = marker_grid(geometry);
  s.label_radius_px = 30.0;
  s.validate();
  return s;
}

void GelScene::validate() const {
  geometry.validate();
  if (static_cast<int>(rest_positions.size()) != geometry.marker_count) {
    throw std::invalid_argument("scene: marker grid has " + std::to_string(rest_positions.size()) +
                                " markers, expected " + std::to_string(geometry.marker_count));
  }
  if (!(foreground > background) || background <= 0.0 || foreground > 255.0) {
    throw std::invalid_argument("scene: need 0 < background < foreground <= 255");
  }
  if (!(contrast_threshold > 0.0)) throw std::invalid_argument("scene: contrast threshold must be positive");
  if (noise_rate < 0.0) throw std::invalid_argument("scene: noise rate must be non-negative");
  if (!(substep_hz > 0.0) || !(frame_hz > 0.0)) throw std::invalid_argument("scene: rates must be positive");
}

// ---------------------------------------------------------------------------
// GestureField

GestureField::GestureField(const GelScene& scene, const GestureScript& script) : scene_(&scene), script_(script) {
  script_.validate();
  for (Vec2 c : script_.finger_centers) centroid_ += c;
  centroid_ = centroid_ / static_cast<double>(script_.finger_centers.size());
  if (script_.type != GestureType::Push) {
    double acc = 0.0;
    for (Vec2 c : script_.finger_centers) acc += distance(c, centroid_);
    finger_radius_ = std::max(acc / script_.finger_centers.size(), 1.0);
  }

  weights_.resize(scene.rest_positions.size());
  for (std::size_t i = 0; i < weights_.size(); ++i) weights_[i] = weight_at(scene.rest_positions[i]);

  // Calibrate the strength so that the hold-phase label intensity hits the target.
  const double target = mm_to_px(script_.peak_intensity_mm, scene.geometry);
  const auto intensity = [&](double k) { return mm_to_px(label_at_level(1.0, k, 0).intensity_mm, scene.geometry); };
  double lo = 0.0;
  double hi = std::max(target, 1.0);
  while (intensity(hi) < target) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e4) throw std::invalid_argument("script: peak intensity unreachable");
  }
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (intensity(mid) < target ? lo : hi) = mid;
    if (hi - lo < 1e-7 * hi) break;
  }
  strength_ = 0.5 * (lo + hi);
}

double GestureField::weight_at(Vec2 rest) const {
  const double s2 = 2.0 * script_.deformation_sigma_px * script_.deformation_sigma_px;
  double w = 0.0;
  for (std::size_t f = 0; f < script_.finger_centers.size(); ++f) {
    const double gain = script_.finger_gains.empty() ? 1.0 : script_.finger_gains[f];
    w += gain * std::exp(-squared_distance(rest, script_.finger_centers[f]) / s2);
  }
  return std::min(w, 1.0);
}

Vec2 GestureField::apply(Vec2 rest, double weight, double e, double strength) const {
  const double k = e * strength;
  const Vec2 q = rest - centroid_;
  switch (script_.type) {
    case GestureType::Push:
      return Vec2{std::cos(script_.push_direction_rad), std::sin(script_.push_direction_rad)} * (weight * k);
    case GestureType::Zoom: return q * (weight * (k / finger_radius_));
    case GestureType::Pinch: return q * (-weight * (k / finger_radius_));
    case GestureType::TwistCCW:
    case GestureType::TwistCW: {
      // Counter-clockwise as seen on screen (image y axis points down).
      const double phi = (script_.type == GestureType::TwistCCW ? -1.0 : 1.0) * k / finger_radius_;
      const double c = std::cos(phi);
      const double s = std::sin(phi);
      const Vec2 rotated{c * q.x - s * q.y, s * q.x + c * q.y};
      return (rotated - q) * weight;
    }
    case GestureType::NoGesture: break;
  }
  return {};
}

void GestureField::displacement_at_level(double e, std::span<Vec2> out) const {
  for (std::size_t i = 0; i < weights_.size(); ++i) out[i] = apply(scene_->rest_positions[i], weights_[i], e, strength_);
}

Vec2 GestureField::point_displacement(Vec2 rest, double e) const { return apply(rest, weight_at(rest), e, strength_); }

void GestureField::displacement(Timestamp t, std::span<Vec2> out) const {
  if (t < script_.start_us || t >= script_.end_us()) {
    std::fill(out.begin(), out.end(), Vec2{});
    return;
  }
  displacement_at_level(script_.envelope.value(t - script_.start_us), out);
}

std::vector<Vec2> GestureField::displacement(Timestamp t) const {
  std::vector<Vec2> out(weights_.size());
  displacement(t, out);
  return out;
}

GestureLabel GestureField::label_at_level(double e, double strength, Timestamp t) const {
  std::vector<Vec2> disp(weights_.size());
  for (std::size_t i = 0; i < weights_.size(); ++i) disp[i] = apply(scene_->rest_positions[i], weights_[i], e, strength);
  std::vector<Vec2> fingers;
  fingers.reserve(script_.finger_centers.size());
  for (Vec2 c : script_.finger_centers) fingers.push_back(c + apply(c, weight_at(c), e, strength));
  return label_from_field(*scene_, script_.type, fingers, disp, t);
}

GestureLabel GestureField::label(Timestamp t) const {
  if (t < script_.start_us || t >= script_.end_us()) return GestureLabel{t, GestureType::NoGesture, {}, 0.0};
  return label_at_level(script_.envelope.value(t - script_.start_us), strength_, t);
}

std::vector<Vec2> true_displacement_field(const GelScene& scene, const GestureScript& script, Timestamp t) {
  return GestureField(scene, script).displacement(t);
}

GestureLabel label_from_field(const GelScene& scene, GestureType type, std::span<const Vec2> finger_positions,
                              std::span<const Vec2> displacement, Timestamp t) {
  GestureLabel label{t, type, {}, 0.0};
  if (type == GestureType::NoGesture) return label;
  const double r2 = scene.label_radius_px * scene.label_radius_px;
  const std::size_t n = scene.rest_positions.size();

  std::vector<std::size_t> contacts;
  for (Vec2 f : finger_positions) {
    std::size_t best = n;
    double best_mag = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2 cur = scene.rest_positions[i] + displacement[i];
      if (squared_distance(cur, f) > r2) continue;
      const double m = displacement[i].norm();
      if (m > best_mag) {
        best_mag = m;
        best = i;
      }
    }
    if (best < n && std::find(contacts.begin(), contacts.end(), best) == contacts.end()) contacts.push_back(best);
  }

  double sum = 0.0;
  int count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 cur = scene.rest_positions[i] + displacement[i];
    for (std::size_t c : contacts) {
      if (squared_distance(cur, scene.rest_positions[c] + displacement[c]) <= r2) {
        sum += displacement[i].norm();
        ++count;
        break;
      }
    }
  }
  for (std::size_t c : contacts) label.contact_points.push_back(scene.rest_positions[c] + displacement[c]);
  label.intensity_mm = count > 0 ? px_to_mm(sum / count, scene.geometry) : 0.0;
  return label;
}

// ---------------------------------------------------------------------------
// Rendering

namespace {

inline double disk_coverage(double dx, double dy, double radius) {
  return std::clamp(radius + 0.5 - std::sqrt(dx * dx + dy * dy), 0.0, 1.0);
}

void splat_full(std::vector<double>& cov, int w, int h, Vec2 c, double radius) {
  const int x0 = std::max(0, static_cast<int>(std::floor(c.x - radius - 0.5)));
  const int x1 = std::min(w - 1, static_cast<int>(std::ceil(c.x + radius + 0.5)));
  const int y0 = std::max(0, static_cast<int>(std::floor(c.y - radius - 0.5)));
  const int y1 = std::min(h - 1, static_cast<int>(std::ceil(c.y + radius + 0.5)));
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) cov[static_cast<std::size_t>(y) * w + x] += disk_coverage(x - c.x, y - c.y, radius);
  }
}

std::uint8_t quantize(const GelScene& scene, double cov) {
  const double v = scene.background + (scene.foreground - scene.background) * std::min(cov, 1.0);
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
}

}  // namespace

Frame render_disks(const GelScene& scene, std::span<const Vec2> centers, double radius_px, Timestamp t) {
  Frame f(kSensorWidth, kSensorHeight, t);
  std::vector<double> cov(f.pixels.size(), 0.0);
  for (Vec2 c : centers) splat_full(cov, f.width, f.height, c, radius_px);
  for (std::size_t i = 0; i < cov.size(); ++i) f.pixels[i] = quantize(scene, cov[i]);
  return f;
}

Frame render_frame(const GelScene& scene, std::span<const Vec2> displacement, Timestamp t) {
  std::vector<Vec2> centers(scene.rest_positions.size());
  for (std::size_t i = 0; i < centers.size(); ++i) centers[i] = scene.rest_positions[i] + displacement[i];
  return render_disks(scene, centers, scene.geometry.marker_radius_px(), t);
}

// ---------------------------------------------------------------------------
// EventSimulator

EventSimulator::EventSimulator(const GelScene& scene, std::uint64_t noise_seed)
    : scene_(&scene),
      width_(kSensorWidth),
      height_(kSensorHeight),
      radius_(scene.geometry.marker_radius_px()),
      rendered_(scene.rest_positions),
      coverage_(static_cast<std::size_t>(kSensorWidth) * kSensorHeight, 0.0),
      log_now_(coverage_.size(), 0.0),
      log_ref_(coverage_.size(), 0.0),
      stamp_(coverage_.size(), 0),
      rng_(noise_seed) {
  grid_w_ = (width_ + cell_ - 1) / cell_;
  grid_h_ = (height_ + cell_ - 1) / cell_;
  buckets_.resize(static_cast<std::size_t>(grid_w_) * grid_h_);
  std::vector<Vec2> zero(scene.rest_positions.size());
  reset(zero, 0);
}

void EventSimulator::reset(std::span<const Vec2> displacement, Timestamp t) {
  for (std::size_t i = 0; i < rendered_.size(); ++i) rendered_[i] = scene_->rest_positions[i] + displacement[i];
  std::fill(coverage_.begin(), coverage_.end(), 0.0);
  for (Vec2 c : rendered_) splat_full(coverage_, width_, height_, c, radius_);
  const double span = scene_->foreground - scene_->background;
  for (std::size_t p = 0; p < coverage_.size(); ++p) {
    log_now_[p] = std::log(scene_->background + span * std::min(coverage_[p], 1.0));
  }
  log_ref_ = log_now_;
  now_ = t;
}

void EventSimulator::mark_dirty(Vec2 c) {
  const int x0 = std::max(0, static_cast<int>(std::floor(c.x - radius_ - 0.5)));
  const int x1 = std::min(width_ - 1, static_cast<int>(std::ceil(c.x + radius_ + 0.5)));
  const int y0 = std::max(0, static_cast<int>(std::floor(c.y - radius_ - 0.5)));
  const int y1 = std::min(height_ - 1, static_cast<int>(std::ceil(c.y + radius_ + 0.5)));
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const auto p = static_cast<std::uint32_t>(y * width_ + x);
      if (stamp_[p] != step_id_) {
        stamp_[p] = step_id_;
        dirty_.push_back(p);
      }
    }
  }
}

void EventSimulator::splat(Vec2 c, std::uint32_t stamp_filter, bool restrict_to_dirty) {
  const int x0 = std::max(0, static_cast<int>(std::floor(c.x - radius_ - 0.5)));
  const int x1 = std::min(width_ - 1, static_cast<int>(std::ceil(c.x + radius_ + 0.5)));
  const int y0 = std::max(0, static_cast<int>(std::floor(c.y - radius_ - 0.5)));
  const int y1 = std::min(height_ - 1, static_cast<int>(std::ceil(c.y + radius_ + 0.5)));
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const auto p = static_cast<std::size_t>(y) * width_ + x;
      if (restrict_to_dirty && stamp_[p] != stamp_filter) continue;
      coverage_[p] += disk_coverage(x - c.x, y - c.y, radius_);
    }
  }
}

void EventSimulator::emit_noise(Timestamp t0, Timestamp t1, std::vector<Event>& out) {
  if (scene_->noise_rate <= 0.0 || t1 <= t0) return;
  const double expected =
      scene_->noise_rate * static_cast<double>(width_) * height_ * static_cast<double>(t1 - t0) * 1e-6;
  std::poisson_distribution<long> count_dist(expected);
  const long n = count_dist(rng_);
  std::uniform_int_distribution<int> xs(0, width_ - 1);
  std::uniform_int_distribution<int> ys(0, height_ - 1);
  std::uniform_int_distribution<Timestamp> ts(t0 + 1, t1);
  std::bernoulli_distribution pol(0.5);
  for (long i = 0; i < n; ++i) {
    Event e;
    e.x = static_cast<std::uint16_t>(xs(rng_));
    e.y = static_cast<std::uint16_t>(ys(rng_));
    e.t = ts(rng_);
    e.polarity = pol(rng_) ? Polarity::Positive : Polarity::Negative;
    out.push_back(e);
  }
}

void EventSimulator::step(std::span<const Vec2> displacement, Timestamp t, std::vector<Event>& out) {
  if (t < now_) throw std::invalid_argument("EventSimulator::step: time went backwards");
  const Timestamp t_prev = now_;
  const std::size_t first = out.size();
  ++step_id_;
  dirty_.clear();

  std::vector<int> moved;
  for (std::size_t i = 0; i < rendered_.size(); ++i) {
    const Vec2 target = scene_->rest_positions[i] + displacement[i];
    if (squared_distance(target, rendered_[i]) > kRenderEpsilonPx * kRenderEpsilonPx) {
      mark_dirty(rendered_[i]);
      mark_dirty(target);
      moved.push_back(static_cast<int>(i));
    }
  }

  if (!moved.empty()) {
    // Markers near a dirty pixel must be re-splatted there, including the ones that stayed put.
    std::vector<char> affected(rendered_.size(), 0);
    for (auto& b : buckets_) b.clear();
    const auto cell_of = [&](Vec2 p) {
      const int cx = std::clamp(static_cast<int>(std::floor(p.x / cell_)), 0, grid_w_ - 1);
      const int cy = std::clamp(static_cast<int>(std::floor(p.y / cell_)), 0, grid_h_ - 1);
      return std::pair{cx, cy};
    };
    for (std::size_t i = 0; i < rendered_.size(); ++i) {
      auto [cx, cy] = cell_of(rendered_[i]);
      buckets_[static_cast<std::size_t>(cy) * grid_w_ + cx].push_back(static_cast<int>(i));
    }
    const double reach = 2.0 * radius_ + 2.0;
    const auto gather = [&](Vec2 p) {
      auto [x0, y0] = cell_of(p - Vec2{reach, reach});
      auto [x1, y1] = cell_of(p + Vec2{reach, reach});
      for (int cy = y0; cy <= y1; ++cy)
        for (int cx = x0; cx <= x1; ++cx)
          for (int m : buckets_[static_cast<std::size_t>(cy) * grid_w_ + cx]) affected[m] = 1;
    };
    for (int m : moved) {
      gather(rendered_[m]);
      rendered_[m] = scene_->rest_positions[m] + displacement[m];
      gather(rendered_[m]);
      affected[m] = 1;
    }
    for (std::uint32_t p : dirty_) coverage_[p] = 0.0;
    for (std::size_t i = 0; i < rendered_.size(); ++i) {
      if (affected[i]) splat(rendered_[i], step_id_, true);
    }

    const double span = scene_->foreground - scene_->background;
    const double c = scene_->contrast_threshold;
    const double dt = static_cast<double>(t - t_prev);
    for (std::uint32_t p : dirty_) {
      const double l_new = std::log(scene_->background + span * std::min(coverage_[p], 1.0));
      const double l_old = log_now_[p];
      log_now_[p] = l_new;
      if (std::abs(l_new - log_ref_[p]) < c) continue;
      const auto x = static_cast<std::uint16_t>(p % width_);
      const auto y = static_cast<std::uint16_t>(p / width_);
      const double dl = l_new - l_old;
      while (l_new - log_ref_[p] >= c) {
        log_ref_[p] += c;
        const double frac = dl != 0.0 ? std::clamp((log_ref_[p] - l_old) / dl, 0.0, 1.0) : 1.0;
        out.push_back(Event{x, y, t_prev + static_cast<Timestamp>(frac * dt), Polarity::Positive});
      }
      while (log_ref_[p] - l_new >= c) {
        log_ref_[p] -= c;
        const double frac = dl != 0.0 ? std::clamp((log_ref_[p] - l_old) / dl, 0.0, 1.0) : 1.0;
        out.push_back(Event{x, y, t_prev + static_cast<Timestamp>(frac * dt), Polarity::Negative});
      }
    }
  }

  emit_noise(t_prev, t, out);
  std::stable_sort(out.begin() + static_cast<std::ptrdiff_t>(first), out.end(),
                   [](const Event& a, const Event& b) { return a.t < b.t; });
  now_ = t;
}

// ---------------------------------------------------------------------------
// Recording generation

Recording generate_labeled_recording(const GelScene& scene, std::vector<GestureScript> scripts,
                                     Timestamp duration_us) {
  scene.validate();
  std::sort(scripts.begin(), scripts.end(),
            [](const GestureScript& a, const GestureScript& b) { return a.start_us < b.start_us; });
  for (std::size_t i = 0; i < scripts.size(); ++i) {
    scripts[i].validate();
    if (scripts[i].end_us() > duration_us) throw std::invalid_argument("scripts extend past the recording end");
    if (i + 1 < scripts.size() && scripts[i].end_us() > scripts[i + 1].start_us) {
      throw std::invalid_argument("gesture scripts overlap in time");
    }
  }
  std::vector<GestureField> fields;
  fields.reserve(scripts.size());
  for (const auto& s : scripts) fields.emplace_back(scene, s);

  Recording rec;
  rec.header.geometry = scene.geometry;
  rec.header.duration_us = duration_us;
  rec.header.seed = scene.noise_seed;

  const std::size_t n = scene.rest_positions.size();
  std::vector<Vec2> disp(n);
  std::size_t active = 0;
  const auto field_at = [&](Timestamp t) -> const GestureField* {
    while (active < fields.size() && fields[active].script().end_us() <= t) ++active;
    if (active < fields.size() && fields[active].script().start_us <= t) return &fields[active];
    return nullptr;
  };
  const auto eval = [&](Timestamp t) {
    const GestureField* f = field_at(t);
    if (f) {
      f->displacement(t, disp);
    } else {
      std::fill(disp.begin(), disp.end(), Vec2{});
    }
    return f;
  };

  EventSimulator events(scene, scene.noise_seed);
  eval(0);
  events.reset(disp, 0);

  const double substep_us = 1e6 / scene.substep_hz;
  const double frame_us = 1e6 / scene.frame_hz;
  std::size_t next_frame = 0;
  for (std::size_t k = 0;; ++k) {
    const auto t = static_cast<Timestamp>(std::llround(k * substep_us));
    if (t > duration_us) break;
    // Frames and labels at their own cadence, sampled from the closed-form field.
    while (true) {
      const auto tf = static_cast<Timestamp>(std::llround(next_frame * frame_us));
      if (tf > t || tf >= duration_us) break;
      std::vector<Vec2> fd(n);
      const GestureField* f = field_at(tf);
      if (f) f->displacement(tf, fd);
      rec.frames.push_back(render_frame(scene, fd, tf));
      rec.labels.push_back(f ? f->label(tf) : GestureLabel{tf, GestureType::NoGesture, {}, 0.0});
      ++next_frame;
    }
    if (k == 0) continue;
    eval(t);
    events.step(disp, t, rec.events);
  }
  return rec;
}

// ---------------------------------------------------------------------------
// Benchmark recipe

double sigma_for_intensity(const GelScene& scene, const GestureScript& script, double min_sigma_px) {
  // Smallest spread with sigma >= 0.8 * strength(sigma): keeps the displacement gradient low
  // enough that neighbouring markers never cross. strength decreases as sigma grows.
  GestureScript s = script;
  const auto gap = [&](double sigma) {
    s.deformation_sigma_px = sigma;
    return sigma - 0.8 * GestureField(scene, s).strength_px();
  };
  if (gap(min_sigma_px) >= 0.0) return min_sigma_px;
  double lo = min_sigma_px;
  double hi = 2.0 * min_sigma_px;
  while (gap(hi) < 0.0) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e4) throw std::invalid_argument("script: no injective spread for this intensity");
  }
  for (int it = 0; it < 40 && hi - lo > 0.01; ++it) {
    const double mid = 0.5 * (lo + hi);
    (gap(mid) < 0.0 ? lo : hi) = mid;
  }
  return hi;
}

std::vector<GestureScript> make_benchmark_scripts(const GelScene& scene, const BenchmarkRecipe& recipe) {
  std::mt19937_64 rng(recipe.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto uniform = [&](double a, double b) { return a + (b - a) * unit(rng); };
  const auto lognormal = [&](double median, double spread, double lo, double hi) {
    std::normal_distribution<double> z(0.0, 1.0);
    return std::clamp(median * std::exp(spread * z(rng)), lo, hi);
  };
  const Vec2 center = scene.geometry.image_center;
  const auto us = [](double s) { return static_cast<Timestamp>(std::llround(s * 1e6)); };

  std::vector<GestureScript> out;
  const GestureType cycle[] = {GestureType::Push, GestureType::Pinch, GestureType::Zoom, GestureType::TwistCW,
                               GestureType::TwistCCW};
  double t = uniform(recipe.min_gap_s, recipe.max_gap_s);
  for (std::size_t g = 0;; ++g) {
    GestureScript s;
    s.type = cycle[g % 5];
    if (s.type == GestureType::Push) {
      const double rad = 35.0 * std::sqrt(unit(rng));
      const double ang = uniform(0.0, 2.0 * std::numbers::pi);
      s.finger_centers = {center + Vec2{std::cos(ang), std::sin(ang)} * rad};
      s.push_direction_rad = uniform(0.0, 2.0 * std::numbers::pi);
      s.peak_intensity_mm = lognormal(5.0, 0.55, 1.2, 18.0);
    } else {
      const int fingers = unit(rng) < 0.5 ? 2 : 3;
      const double rho = fingers == 2 ? uniform(30.0, 38.0) : uniform(35.0, 40.0);
      const double phase = uniform(0.0, 2.0 * std::numbers::pi);
      const double off = uniform(0.0, 8.0);
      const double off_ang = uniform(0.0, 2.0 * std::numbers::pi);
      const Vec2 c = center + Vec2{std::cos(off_ang), std::sin(off_ang)} * off;
      for (int f = 0; f < fingers; ++f) {
        const double a = phase + 2.0 * std::numbers::pi * f / fingers;
        s.finger_centers.push_back(c + Vec2{std::cos(a), std::sin(a)} * rho);
      }
      s.peak_intensity_mm = lognormal(4.0, 0.45, 1.2, recipe.max_multi_finger_intensity_mm);
    }
    // Physical limits: pinch cannot close the fingers, twist stays below ~35 degrees,
    // zoom keeps the fingers on the gel.
    bool feasible = false;
    for (int attempt = 0; attempt < 20 && !feasible; ++attempt) {
      try {
        s.deformation_sigma_px = sigma_for_intensity(scene, s);
        const GestureField f(scene, s);
        double rho = 0.0;
        for (Vec2 c : s.finger_centers) rho += distance(c, center);
        rho /= s.finger_centers.size();
        const double travel = f.strength_px();
        feasible = true;
        if (s.type == GestureType::Pinch) feasible = travel < 0.5 * rho;
        if (s.type == GestureType::TwistCW || s.type == GestureType::TwistCCW) feasible = travel < 0.6 * rho;
        if (s.type == GestureType::Zoom) feasible = rho + travel < 0.85 * scene.geometry.gel_radius_px();
      } catch (const std::invalid_argument&) {
        feasible = false;
      }
      if (!feasible) s.peak_intensity_mm *= 0.85;
    }
    if (!feasible) continue;

    const double speed = uniform(25.0, 200.0);
    const double ramp_s = 0.5 * std::numbers::pi * s.peak_intensity_mm / speed;
    s.speed_cap_mm_s = 210.0;
    s.envelope.attack_us = us(ramp_s * 1.0001);
    s.envelope.release_us = us(ramp_s * uniform(1.0001, 1.6));
    s.envelope.hold_us = us(uniform(0.5, 1.4));
    s.start_us = us(t);
    const double end_s = t + s.envelope.total_us() * 1e-6;
    if (end_s > recipe.duration_s - recipe.min_gap_s) break;
    out.push_back(s);
    t = end_s + uniform(recipe.min_gap_s, recipe.max_gap_s);
  }
  return out;
}

}  // namespace neurotouch::sim
