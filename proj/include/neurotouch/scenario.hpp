#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "neurotouch/gel_sim.hpp"

namespace neurotouch {

class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Scene parameters plus gesture scripts for `simulate`.
///
/// Text format, one `key = value` per line, `#` comments:
///
///   [scene]        duration_s, noise_rate, noise_seed, contrast_threshold, substep_hz, frame_hz,
///                  background, foreground, label_radius_px, and geometry keys
///                  (px_per_mm, gel_radius_mm, marker_pitch_mm, marker_diameter_mm,
///                  marker_count, center_x, center_y)
///   [gesture]      starts a new script: type, fingers (`x,y; x,y` in px), start_s, intensity_mm,
///                  attack_s, hold_s, release_s, speed_cap_mm_s, sigma_px (number or `auto`),
///                  direction_deg (Push only), gains (`g; g; g`)
///   [benchmark]    duration_s, seed, min_gap_s, max_gap_s, max_multi_finger_intensity_mm;
///                  appends the generated benchmark scripts
struct Scenario {
  sim::GelScene scene;
  std::vector<sim::GestureScript> scripts;
  Timestamp duration_us = 0;
};

Scenario parse_scenario(std::string_view text);
Scenario load_scenario(const std::filesystem::path& path);

/// Synthesizes the labeled recording. Scenario-level problems surface as ScenarioError.
Recording generate(const Scenario& scenario);

/// Benchmark suite of the given length on the default scene.
Scenario benchmark_scenario(double duration_s, double noise_rate, std::uint64_t seed);

}  // namespace neurotouch
