#include "support.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <unistd.h>

#include "neurotouch/blob_tracker.hpp"

namespace neurotouch::testkit {

sim::GelScene single_marker_scene(Vec2 p, double noise_rate, std::uint64_t seed) {
  sim::GelScene s = sim::GelScene::make();
  s.rest_positions = {p};
  s.geometry.marker_count = 1;
  s.noise_rate = noise_rate;
  s.noise_seed = seed;
  return s;
}

namespace {

template <class Pos, class Vel>
MarkerMotion simulate(Vec2 start, double duration_s, double noise_rate, std::uint64_t seed, Pos pos, Vel vel) {
  const sim::GelScene scene = single_marker_scene(start, noise_rate, seed);
  MarkerMotion m;
  const auto end = static_cast<Timestamp>(std::ceil(duration_s * 1e3)) * 1000;  // whole substeps
  m.rec.header.geometry = scene.geometry;
  m.rec.header.duration_us = end + 1;
  std::vector<Vec2> disp{Vec2{}};
  m.rec.frames.push_back(sim::render_frame(scene, disp, 0));
  sim::EventSimulator ev(scene, seed);
  ev.reset(disp, 0);
  for (Timestamp t = 1000; t <= end; t += 1000) {
    disp[0] = pos(t * 1e-6);
    ev.step(disp, t, m.rec.events);
  }
  m.final_true = start + pos(end * 1e-6);
  m.final_velocity = vel(end * 1e-6);
  return m;
}

}  // namespace

MarkerMotion eased_motion(Vec2 start, Vec2 delta, double peak_speed_px_s, double noise_rate, double settle_s,
                          std::uint64_t seed) {
  // x(u) = D (1 - cos(pi u)) / 2 over T; peak speed = pi D / (2 T).
  const double d = delta.norm();
  const double move_s = std::numbers::pi * d / (2.0 * peak_speed_px_s);
  const auto pos = [=](double t) {
    const double u = std::min(t / move_s, 1.0);
    return delta * (0.5 * (1.0 - std::cos(std::numbers::pi * u)));
  };
  const auto vel = [=](double t) {
    if (t >= move_s) return Vec2{};
    return delta * (0.5 * std::numbers::pi / move_s * std::sin(std::numbers::pi * t / move_s));
  };
  return simulate(start, move_s + settle_s, noise_rate, seed, pos, vel);
}

MarkerMotion linear_motion(Vec2 start, Vec2 delta, double duration_s, double noise_rate, std::uint64_t seed) {
  const auto pos = [=](double t) { return delta * std::min(t / duration_s, 1.0); };
  const auto vel = [=](double) { return delta / duration_s; };
  return simulate(start, duration_s, noise_rate, seed, pos, vel);
}

TrackResult track_single(const Recording& rec) {
  BlobParams p;
  p.expected_markers = 1;
  BlobTracker tr(p);
  tr.init_from_frame(rec.frames.front());
  tr.process(rec.events);
  return {tr.markers().front().position, tr.markers().front().velocity};
}

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          ("nt_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace neurotouch::testkit
