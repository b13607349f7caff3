#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "neurotouch/core.hpp"

namespace neurotouch::sim {

/// Attack/hold/release deformation envelope. Attack and release are raised-cosine ramps.
struct Envelope {
  Timestamp attack_us = 300'000;
  Timestamp hold_us = 800'000;
  Timestamp release_us = 300'000;

  Timestamp total_us() const { return attack_us + hold_us + release_us; }
  /// Envelope value in [0, 1] at `dt` microseconds after the gesture start.
  double value(Timestamp dt) const;
};

struct GestureScript {
  GestureType type = GestureType::Push;
  std::vector<Vec2> finger_centers;  // resting image positions, px
  double peak_intensity_mm = 4.0;
  Envelope envelope;
  Timestamp start_us = 0;
  double speed_cap_mm_s = 210.0;
  double deformation_sigma_px = 12.0;
  double push_direction_rad = 0.0;   // Push only, image frame
  std::vector<double> finger_gains;  // optional per-finger weight, empty = all 1

  Timestamp end_us() const { return start_us + envelope.total_us(); }
  /// Throws std::invalid_argument on finger-count, intensity, or speed violations.
  void validate() const;
};

inline constexpr double kMaxPeakIntensityMm = 18.1;
inline constexpr double kMaxSpeedCapMmS = 220.0;

struct GelScene {
  GeometryConfig geometry;
  std::vector<Vec2> rest_positions;
  double background = 10.0;
  double foreground = 230.0;
  double contrast_threshold = 0.2;   // log-intensity units
  double noise_rate = 0.0;           // background events per pixel per second
  double substep_hz = 1000.0;
  double frame_hz = 25.0;
  double label_radius_px = 30.0;     // r used to define label intensity
  std::uint64_t noise_seed = 1;

  /// Builds the resting marker grid; throws if it does not contain geometry.marker_count markers.
  static GelScene make(const GeometryConfig& geometry = {});
  void validate() const;
};

/// Square grid of marker pitch centered on the gel, clipped to the gel disk.
std::vector<Vec2> marker_grid(const GeometryConfig& g);

/// Closed-form displacement field of one scripted gesture, with the envelope amplitude
/// calibrated so the label intensity at hold equals the scripted peak intensity.
class GestureField {
 public:
  GestureField(const GelScene& scene, const GestureScript& script);

  const GestureScript& script() const { return script_; }
  /// Calibrated strength: approximately the peak finger displacement in px.
  double strength_px() const { return strength_; }

  /// Per-marker displacement at absolute time t (zero outside the script span).
  std::vector<Vec2> displacement(Timestamp t) const;
  void displacement(Timestamp t, std::span<Vec2> out) const;
  /// Displacement at envelope value e in [0, 1].
  void displacement_at_level(double e, std::span<Vec2> out) const;
  /// Displacement of an arbitrary resting point at envelope value e.
  Vec2 point_displacement(Vec2 rest, double e) const;

  /// Ground-truth label at absolute time t (type NoGesture outside the script span).
  GestureLabel label(Timestamp t) const;

 private:
  Vec2 apply(Vec2 rest, double weight, double e, double strength) const;
  double weight_at(Vec2 rest) const;
  GestureLabel label_at_level(double e, double strength, Timestamp t) const;

  const GelScene* scene_;
  GestureScript script_;
  std::vector<double> weights_;
  Vec2 centroid_;
  double finger_radius_ = 1.0;
  double strength_ = 0.0;
};

std::vector<Vec2> true_displacement_field(const GelScene& scene, const GestureScript& script, Timestamp t);

/// Label for a displacement field: per finger, the marker with the largest displacement within
/// label_radius of the finger's current position; intensity is the mean displacement of markers
/// within label_radius of those contact points.
GestureLabel label_from_field(const GelScene& scene, GestureType type, std::span<const Vec2> finger_positions,
                              std::span<const Vec2> displacement, Timestamp t);

/// Anti-aliased white disks on a black background at rest + displacement.
Frame render_frame(const GelScene& scene, std::span<const Vec2> displacement, Timestamp t);
/// Renders arbitrary disk centers (used by tests and tools).
Frame render_disks(const GelScene& scene, std::span<const Vec2> centers, double radius_px, Timestamp t);

/// Incremental event-camera model. Each step re-renders only the markers that moved and emits
/// one event per crossing of the log-intensity contrast threshold since the pixel's last event.
class EventSimulator {
 public:
  EventSimulator(const GelScene& scene, std::uint64_t noise_seed);

  /// Sets the reference state without emitting events.
  void reset(std::span<const Vec2> displacement, Timestamp t);
  /// Advances to time t; appends time-sorted events in (previous time, t].
  void step(std::span<const Vec2> displacement, Timestamp t, std::vector<Event>& out);

  Timestamp time() const { return now_; }
  std::span<const Vec2> rendered_positions() const { return rendered_; }

 private:
  void splat(Vec2 center, std::uint32_t stamp_filter, bool restrict_to_dirty);
  void mark_dirty(Vec2 center);
  void emit_noise(Timestamp t0, Timestamp t1, std::vector<Event>& out);

  const GelScene* scene_;
  int width_;
  int height_;
  double radius_;
  std::vector<Vec2> rendered_;
  std::vector<double> coverage_;
  std::vector<double> log_now_;
  std::vector<double> log_ref_;
  std::vector<std::uint32_t> stamp_;
  std::vector<std::uint32_t> dirty_;
  std::uint32_t step_id_ = 0;
  Timestamp now_ = 0;
  std::mt19937_64 rng_;
  // marker bucket grid
  int cell_ = 8;
  int grid_w_ = 0;
  int grid_h_ = 0;
  std::vector<std::vector<int>> buckets_;
};

/// Static (rest) recording helper and full labeled generation.
/// Scripts must not overlap in time; overlapping scripts throw std::invalid_argument.
Recording generate_labeled_recording(const GelScene& scene, std::vector<GestureScript> scripts,
                                     Timestamp duration_us);

/// Synthetic benchmark recipe: all five gesture types in rotation, 1-3 fingers, varied
/// position, intensity and speed, separated by resting gaps.
struct BenchmarkRecipe {
  double duration_s = 300.0;
  std::uint64_t seed = 7;
  double min_gap_s = 0.45;
  double max_gap_s = 0.9;
  double max_multi_finger_intensity_mm = 9.0;
};

std::vector<GestureScript> make_benchmark_scripts(const GelScene& scene, const BenchmarkRecipe& recipe);

/// Picks a deformation spread wide enough that the displacement map stays injective.
double sigma_for_intensity(const GelScene& scene, const GestureScript& script, double min_sigma_px = 12.0);

}  // namespace neurotouch::sim
