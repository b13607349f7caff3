#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "neurotouch/core.hpp"

namespace neurotouch {

struct BlobParams {
  double blob_sigma_px = 1.25;             // fixed isotropic blob size
  double gate_px = 5.0;                    // association distance
  double process_noise_pos = 0.5;          // px^2 / s
  double process_noise_vel = 2.0e5;        // (px/s)^2 / s
  double measurement_variance = 0.0;       // px^2; <= 0 means blob_sigma_px^2
  double velocity_half_life_s = 0.05;
  double initial_pos_variance = 0.25;      // px^2
  double initial_vel_variance = 100.0;     // (px/s)^2
  double bounds_margin_px = 5.0;
  double health_window_s = 0.1;
  Timestamp support_window_us = 1000;      // an event counts only if its blob saw another this recently; 0 = off
  Timestamp max_time_regression_us = 0;
  std::uint8_t binarize_threshold = 128;
  int min_area = 1;
  int max_area = 200;
  int expected_markers = 177;              // 0 accepts any count

  void validate() const;
  double measurement_var() const { return measurement_variance > 0.0 ? measurement_variance : blob_sigma_px * blob_sigma_px; }
};

struct MarkerState {
  int id = 0;
  Vec2 anchor;
  Vec2 position;
  Vec2 velocity;
  Eigen::Matrix4d covariance = Eigen::Matrix4d::Identity();  // state (x, y, vx, vy)
  Timestamp last_update = 0;
  double health = 0.0;  // events per health window, exponentially weighted
  Timestamp last_event = 0;
  bool has_event = false;
};

class TrackerInitError : public std::runtime_error {
 public:
  TrackerInitError(int found, int expected)
      : std::runtime_error("tracker init found " + std::to_string(found) + " markers, expected " +
                           std::to_string(expected)),
        found_(found),
        expected_(expected) {}
  int found() const noexcept { return found_; }
  int expected() const noexcept { return expected_; }

 private:
  int found_;
  int expected_;
};

class OutOfOrderEventError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Extracts one marker state per connected white region of a resting frame.
std::vector<MarkerState> init_markers_from_frame(const Frame& frame, const BlobParams& params);

/// Asynchronous multi-blob tracker: each event updates the nearest blob's constant-velocity
/// Kalman state when it lies within the gate, and is discarded otherwise.
class BlobTracker {
 public:
  explicit BlobTracker(BlobParams params = {});

  void init_from_frame(const Frame& frame);
  /// Re-initializes from a resting frame, keeping ids by nearest-anchor matching.
  void reset(const Frame& frame);

  /// Returns true when the event was associated to a blob.
  bool process_event(const Event& e);
  std::size_t process(std::span<const Event> events);

  bool initialized() const { return !markers_.empty(); }
  const std::vector<MarkerState>& markers() const { return markers_; }
  std::vector<Vec2> positions() const;
  std::vector<Vec2> anchors() const;
  /// v_i = p_i(t_k) - p_i(t0), ordered by id.
  std::vector<Vec2> displacement_field() const;
  const BlobParams& params() const { return params_; }
  Timestamp last_event_time() const { return last_t_; }

 private:
  int cell_index(Vec2 p) const;
  void rebuild_grid();
  void move_in_grid(int marker, int old_cell, int new_cell);
  int nearest(double x, double y, double& dist2) const;

  BlobParams params_;
  std::vector<MarkerState> markers_;
  std::vector<int> cell_of_;
  std::vector<std::vector<int>> grid_;
  int grid_w_ = 0;
  int grid_h_ = 0;
  double cell_ = 5.0;
  double origin_ = 0.0;
  double tau_s_ = 0.0;
  Timestamp last_t_ = 0;
  bool seen_event_ = false;
};

}  // namespace neurotouch
