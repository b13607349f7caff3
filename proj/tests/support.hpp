#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "neurotouch/core.hpp"
#include "neurotouch/gel_sim.hpp"

namespace neurotouch::testkit {

/// Default scene reduced to one marker at `p`.
sim::GelScene single_marker_scene(Vec2 p, double noise_rate = 0.0, std::uint64_t seed = 1);

struct MarkerMotion {
  Recording rec;       // launch frame at t=0, events of the motion
  Vec2 final_true;     // true marker position at the end
  Vec2 final_velocity; // true velocity at the end, px/s
};

/// Raised-cosine move by `delta` px with the given peak speed, then `settle_s` at rest.
MarkerMotion eased_motion(Vec2 start, Vec2 delta, double peak_speed_px_s, double noise_rate, double settle_s,
                          std::uint64_t seed = 1);
/// Constant-velocity move by `delta` px over `duration_s`, ending while still moving.
MarkerMotion linear_motion(Vec2 start, Vec2 delta, double duration_s, double noise_rate, std::uint64_t seed = 1);

/// Tracks a one-marker recording with default parameters; returns the final estimate.
struct TrackResult {
  Vec2 position;
  Vec2 velocity;
};
TrackResult track_single(const Recording& rec);

/// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

std::string read_file(const std::filesystem::path& p);

}  // namespace neurotouch::testkit
