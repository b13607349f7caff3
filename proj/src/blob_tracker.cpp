#include "neurotouch/blob_tracker.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "neurotouch/components.hpp"

namespace neurotouch {

void BlobParams::validate() const {
  if (!(blob_sigma_px > 0.0)) throw std::invalid_argument("tracker: blob_sigma must be positive");
  if (!(gate_px > 0.0)) throw std::invalid_argument("tracker: gate must be positive");
  if (!(process_noise_pos > 0.0) || !(process_noise_vel > 0.0)) {
    throw std::invalid_argument("tracker: process noise variances must be positive");
  }
  if (measurement_variance < 0.0) throw std::invalid_argument("tracker: measurement variance must be >= 0");
  if (!(velocity_half_life_s > 0.0)) throw std::invalid_argument("tracker: velocity half-life must be positive");
  if (!(initial_pos_variance > 0.0) || !(initial_vel_variance > 0.0)) {
    throw std::invalid_argument("tracker: initial variances must be positive");
  }
  if (min_area < 1 || max_area < min_area) throw std::invalid_argument("tracker: bad area bounds");
}

std::vector<MarkerState> init_markers_from_frame(const Frame& frame, const BlobParams& params) {
  const auto regions = white_regions(frame, params.binarize_threshold, params.min_area, params.max_area);
  const int found = static_cast<int>(regions.size());
  if (found == 0 || (params.expected_markers > 0 && found != params.expected_markers)) {
    throw TrackerInitError(found, params.expected_markers);
  }
  std::vector<MarkerState> out(regions.size());
  Eigen::Matrix4d p0 = Eigen::Matrix4d::Zero();
  p0.diagonal() << params.initial_pos_variance, params.initial_pos_variance, params.initial_vel_variance,
      params.initial_vel_variance;
  for (std::size_t i = 0; i < regions.size(); ++i) {
    out[i].id = static_cast<int>(i) + 1;
    out[i].anchor = regions[i].centroid;
    out[i].position = regions[i].centroid;
    out[i].covariance = p0;
    out[i].last_update = frame.t;
  }
  return out;
}

BlobTracker::BlobTracker(BlobParams params) : params_(params) {
  params_.validate();
  tau_s_ = params_.velocity_half_life_s / std::numbers::ln2;
  cell_ = params_.gate_px;
  origin_ = -params_.bounds_margin_px - cell_;
  grid_w_ = static_cast<int>(std::ceil((kSensorWidth - 2.0 * origin_) / cell_)) + 1;
  grid_h_ = static_cast<int>(std::ceil((kSensorHeight - 2.0 * origin_) / cell_)) + 1;
  grid_.resize(static_cast<std::size_t>(grid_w_) * grid_h_);
}

int BlobTracker::cell_index(Vec2 p) const {
  const int cx = std::clamp(static_cast<int>((p.x - origin_) / cell_), 0, grid_w_ - 1);
  const int cy = std::clamp(static_cast<int>((p.y - origin_) / cell_), 0, grid_h_ - 1);
  return cy * grid_w_ + cx;
}

void BlobTracker::rebuild_grid() {
  for (auto& c : grid_) c.clear();
  cell_of_.resize(markers_.size());
  for (std::size_t i = 0; i < markers_.size(); ++i) {
    cell_of_[i] = cell_index(markers_[i].position);
    grid_[cell_of_[i]].push_back(static_cast<int>(i));
  }
}

void BlobTracker::move_in_grid(int marker, int old_cell, int new_cell) {
  auto& from = grid_[old_cell];
  from.erase(std::find(from.begin(), from.end(), marker));
  grid_[new_cell].push_back(marker);
  cell_of_[marker] = new_cell;
}

void BlobTracker::init_from_frame(const Frame& frame) {
  markers_ = init_markers_from_frame(frame, params_);
  rebuild_grid();
  last_t_ = frame.t;
  seen_event_ = false;
}

void BlobTracker::reset(const Frame& frame) {
  auto fresh = init_markers_from_frame(frame, params_);
  if (markers_.empty()) {
    markers_ = std::move(fresh);
    rebuild_grid();
    return;
  }
  // Greedy nearest-anchor assignment over all (old, new) pairs, closest first.
  struct Pair {
    double d2;
    int old_i;
    int new_i;
  };
  std::vector<Pair> pairs;
  const double reach2 = std::pow(2.0 * params_.gate_px + 10.0, 2);
  for (std::size_t o = 0; o < markers_.size(); ++o) {
    for (std::size_t n = 0; n < fresh.size(); ++n) {
      const double d2 = squared_distance(markers_[o].position, fresh[n].position);
      if (d2 <= reach2) pairs.push_back({d2, static_cast<int>(o), static_cast<int>(n)});
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    return a.d2 != b.d2 ? a.d2 < b.d2 : (a.old_i != b.old_i ? a.old_i < b.old_i : a.new_i < b.new_i);
  });
  std::vector<int> id_for(fresh.size(), 0);
  std::vector<char> old_used(markers_.size(), 0);
  for (const Pair& p : pairs) {
    if (old_used[p.old_i] || id_for[p.new_i] != 0) continue;
    old_used[p.old_i] = 1;
    id_for[p.new_i] = markers_[p.old_i].id;
  }
  int next_id = 0;
  for (const auto& m : markers_) next_id = std::max(next_id, m.id);
  for (std::size_t n = 0; n < fresh.size(); ++n) {
    fresh[n].id = id_for[n] != 0 ? id_for[n] : ++next_id;
  }
  std::sort(fresh.begin(), fresh.end(), [](const MarkerState& a, const MarkerState& b) { return a.id < b.id; });
  markers_ = std::move(fresh);
  rebuild_grid();
  last_t_ = std::max(last_t_, frame.t);
}

int BlobTracker::nearest(double x, double y, double& dist2) const {
  const Vec2 p{x, y};
  const int c = cell_index(p);
  const int cx = c % grid_w_;
  const int cy = c / grid_w_;
  int best = -1;
  dist2 = std::numeric_limits<double>::infinity();
  for (int yy = std::max(0, cy - 1); yy <= std::min(grid_h_ - 1, cy + 1); ++yy) {
    for (int xx = std::max(0, cx - 1); xx <= std::min(grid_w_ - 1, cx + 1); ++xx) {
      for (int m : grid_[static_cast<std::size_t>(yy) * grid_w_ + xx]) {
        const double d2 = squared_distance(markers_[m].position, p);
        if (d2 < dist2 || (d2 == dist2 && m < best)) {
          dist2 = d2;
          best = m;
        }
      }
    }
  }
  return best;
}

bool BlobTracker::process_event(const Event& e) {
  if (markers_.empty()) throw std::logic_error("BlobTracker: process_event before init");
  if (seen_event_ && e.t + params_.max_time_regression_us < last_t_) {
    throw OutOfOrderEventError("event at t=" + std::to_string(e.t) + " precedes t=" + std::to_string(last_t_));
  }
  if (!seen_event_ || e.t > last_t_) last_t_ = e.t;
  seen_event_ = true;

  double d2 = 0.0;
  const int idx = nearest(e.x, e.y, d2);
  if (idx < 0 || d2 > params_.gate_px * params_.gate_px) return false;

  MarkerState& m = markers_[idx];
  if (params_.support_window_us > 0) {
    const bool supported = m.has_event && e.t - m.last_event <= params_.support_window_us;
    m.last_event = e.t;
    m.has_event = true;
    if (!supported) return false;
  }
  // Predict: constant velocity with exponential damping, per axis [p, v].
  const double dt = e.t > m.last_update ? static_cast<double>(e.t - m.last_update) * 1e-6 : 0.0;
  const double alpha = std::exp(-dt / tau_s_);
  const double beta = tau_s_ * (1.0 - alpha);
  Eigen::Matrix4d f = Eigen::Matrix4d::Identity();
  f(0, 2) = beta;
  f(1, 3) = beta;
  f(2, 2) = alpha;
  f(3, 3) = alpha;
  Eigen::Vector4d x(m.position.x, m.position.y, m.velocity.x, m.velocity.y);
  x = f * x;
  Eigen::Matrix4d p = f * m.covariance * f.transpose();
  p(0, 0) += params_.process_noise_pos * dt;
  p(1, 1) += params_.process_noise_pos * dt;
  p(2, 2) += params_.process_noise_vel * dt;
  p(3, 3) += params_.process_noise_vel * dt;

  // Update with measurement (e.x, e.y), H = [I 0].
  const double r = params_.measurement_var();
  Eigen::Matrix2d s = p.topLeftCorner<2, 2>();
  s(0, 0) += r;
  s(1, 1) += r;
  const Eigen::Matrix2d s_inv = s.inverse();
  const Eigen::Matrix<double, 4, 2> k = p.leftCols<2>() * s_inv;
  const Eigen::Vector2d innov(e.x - x(0), e.y - x(1));
  x += k * innov;
  // Joseph form keeps the covariance symmetric positive definite.
  Eigen::Matrix4d ikh = Eigen::Matrix4d::Identity();
  ikh.leftCols<2>() -= k;
  p = ikh * p * ikh.transpose();
  p.noalias() += r * k * k.transpose();
  m.covariance = 0.5 * (p + p.transpose());

  const double lo = -params_.bounds_margin_px;
  m.position = {std::clamp(x(0), lo, kSensorWidth - 1 + params_.bounds_margin_px),
                std::clamp(x(1), lo, kSensorHeight - 1 + params_.bounds_margin_px)};
  m.velocity = {x(2), x(3)};
  const double decay = std::exp(-dt / params_.health_window_s);
  m.health = m.health * decay + 1.0;
  m.last_update = std::max(m.last_update, e.t);

  const int c = cell_index(m.position);
  if (c != cell_of_[idx]) move_in_grid(idx, cell_of_[idx], c);
  return true;
}

std::size_t BlobTracker::process(std::span<const Event> events) {
  std::size_t used = 0;
  for (const Event& e : events) used += process_event(e) ? 1 : 0;
  return used;
}

std::vector<Vec2> BlobTracker::positions() const {
  std::vector<Vec2> out;
  out.reserve(markers_.size());
  for (const auto& m : markers_) out.push_back(m.position);
  return out;
}

std::vector<Vec2> BlobTracker::anchors() const {
  std::vector<Vec2> out;
  out.reserve(markers_.size());
  for (const auto& m : markers_) out.push_back(m.anchor);
  return out;
}

std::vector<Vec2> BlobTracker::displacement_field() const {
  std::vector<Vec2> out;
  out.reserve(markers_.size());
  for (const auto& m : markers_) out.push_back(m.position - m.anchor);
  return out;
}

}  // namespace neurotouch
