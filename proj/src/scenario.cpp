#include "neurotouch/scenario.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>

namespace neurotouch {

namespace {

using Section = std::map<std::string, std::pair<std::string, int>, std::less<>>;  // key -> (value, line)

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(int line, const std::string& msg) {
  throw ScenarioError(line > 0 ? "scenario line " + std::to_string(line) + ": " + msg : "scenario: " + msg);
}

double to_double(std::string_view s, int line) {
  s = trim(s);
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size() || !std::isfinite(v)) {
    fail(line, "bad number '" + std::string(s) + "'");
  }
  return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const auto k = s.find(sep, pos);
    out.push_back(trim(s.substr(pos, k == std::string_view::npos ? std::string_view::npos : k - pos)));
    if (k == std::string_view::npos) break;
    pos = k + 1;
  }
  return out;
}

Timestamp seconds(std::string_view s, int line) {
  const double v = to_double(s, line);
  if (v < 0.0) fail(line, "time must be >= 0");
  return static_cast<Timestamp>(std::llround(v * 1e6));
}

class Reader {
 public:
  explicit Reader(const Section& s) : s_(s) {}

  const std::pair<std::string, int>* get(std::string_view key) {
    const auto it = s_.find(key);
    if (it == s_.end()) return nullptr;
    used_.push_back(it->first);
    return &it->second;
  }
  void number(std::string_view key, double& dst) {
    if (const auto* v = get(key)) dst = to_double(v->first, v->second);
  }
  void reject_unused(std::string_view section) const {
    for (const auto& [k, v] : s_) {
      bool used = false;
      for (const auto& u : used_) used = used || u == k;
      if (!used) fail(v.second, "unknown key '" + k + "' in [" + std::string(section) + "]");
    }
  }

 private:
  const Section& s_;
  std::vector<std::string> used_;
};

sim::GestureScript build_script(const sim::GelScene& scene, const Section& sec) {
  Reader r(sec);
  sim::GestureScript s;
  const auto* type = r.get("type");
  if (!type) fail(0, "[gesture] needs a type");
  const auto gt = gesture_type_from_string(type->first);
  if (!gt || *gt == GestureType::NoGesture) fail(type->second, "bad gesture type '" + type->first + "'");
  s.type = *gt;

  const auto* fingers = r.get("fingers");
  if (!fingers) fail(type->second, "[gesture] needs fingers");
  for (auto f : split(fingers->first, ';')) {
    const auto xy = split(f, ',');
    if (xy.size() != 2) fail(fingers->second, "finger must be 'x,y'");
    s.finger_centers.push_back({to_double(xy[0], fingers->second), to_double(xy[1], fingers->second)});
  }
  if (const auto* v = r.get("start_s")) s.start_us = seconds(v->first, v->second);
  if (const auto* v = r.get("attack_s")) s.envelope.attack_us = seconds(v->first, v->second);
  if (const auto* v = r.get("hold_s")) s.envelope.hold_us = seconds(v->first, v->second);
  if (const auto* v = r.get("release_s")) s.envelope.release_us = seconds(v->first, v->second);
  r.number("intensity_mm", s.peak_intensity_mm);
  r.number("speed_cap_mm_s", s.speed_cap_mm_s);
  if (const auto* v = r.get("direction_deg")) {
    s.push_direction_rad = to_double(v->first, v->second) * std::numbers::pi / 180.0;
  }
  if (const auto* v = r.get("gains")) {
    for (auto g : split(v->first, ';')) s.finger_gains.push_back(to_double(g, v->second));
  }
  const auto* sigma = r.get("sigma_px");
  r.reject_unused("gesture");

  try {
    s.validate();
    if (!sigma || sigma->first == "auto") {
      s.deformation_sigma_px = sim::sigma_for_intensity(scene, s);
    } else {
      s.deformation_sigma_px = to_double(sigma->first, sigma->second);
    }
    sim::GestureField check(scene, s);
  } catch (const std::invalid_argument& e) {
    fail(type->second, e.what());
  }
  return s;
}

}  // namespace

Scenario parse_scenario(std::string_view text) {
  Section scene_sec, bench_sec;
  std::vector<Section> gestures;
  bool has_bench = false;
  Section* cur = nullptr;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto h = line.find('#'); h != std::string_view::npos) line = line.substr(0, h);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line == "[scene]") {
        cur = &scene_sec;
      } else if (line == "[gesture]") {
        gestures.emplace_back();
        cur = &gestures.back();
      } else if (line == "[benchmark]") {
        has_bench = true;
        cur = &bench_sec;
      } else {
        fail(line_no, "unknown section " + std::string(line));
      }
      continue;
    }
    if (!cur) fail(line_no, "key outside a section");
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) fail(line_no, "expected key = value");
    std::string key(trim(line.substr(0, eq)));
    if (cur->count(key)) fail(line_no, "duplicate key '" + key + "'");
    (*cur)[key] = {std::string(trim(line.substr(eq + 1))), line_no};
  }

  Reader r(scene_sec);
  GeometryConfig g;
  r.number("px_per_mm", g.px_per_mm);
  r.number("gel_radius_mm", g.gel_radius_mm);
  r.number("marker_pitch_mm", g.marker_pitch_mm);
  r.number("marker_diameter_mm", g.marker_diameter_mm);
  r.number("center_x", g.image_center.x);
  r.number("center_y", g.image_center.y);
  if (const auto* v = r.get("marker_count")) g.marker_count = static_cast<int>(to_double(v->first, v->second));

  Scenario sc;
  try {
    sc.scene = sim::GelScene::make(g);
  } catch (const std::invalid_argument& e) {
    fail(0, e.what());
  }
  auto& s = sc.scene;
  r.number("noise_rate", s.noise_rate);
  r.number("contrast_threshold", s.contrast_threshold);
  r.number("substep_hz", s.substep_hz);
  r.number("frame_hz", s.frame_hz);
  r.number("background", s.background);
  r.number("foreground", s.foreground);
  r.number("label_radius_px", s.label_radius_px);
  if (const auto* v = r.get("noise_seed")) s.noise_seed = static_cast<std::uint64_t>(to_double(v->first, v->second));
  const auto* duration = r.get("duration_s");
  r.reject_unused("scene");
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    fail(0, e.what());
  }

  for (const auto& gs : gestures) sc.scripts.push_back(build_script(s, gs));

  double bench_duration = 0.0;
  if (has_bench) {
    Reader b(bench_sec);
    sim::BenchmarkRecipe recipe;
    b.number("duration_s", recipe.duration_s);
    b.number("min_gap_s", recipe.min_gap_s);
    b.number("max_gap_s", recipe.max_gap_s);
    b.number("max_multi_finger_intensity_mm", recipe.max_multi_finger_intensity_mm);
    if (const auto* v = b.get("seed")) recipe.seed = static_cast<std::uint64_t>(to_double(v->first, v->second));
    b.reject_unused("benchmark");
    if (recipe.duration_s <= 0.0 || recipe.min_gap_s < 0.0 || recipe.max_gap_s < recipe.min_gap_s) {
      fail(0, "bad benchmark timing");
    }
    const auto bench = sim::make_benchmark_scripts(s, recipe);
    sc.scripts.insert(sc.scripts.end(), bench.begin(), bench.end());
    bench_duration = recipe.duration_s;
  }

  if (duration) {
    sc.duration_us = seconds(duration->first, duration->second);
  } else {
    Timestamp end = static_cast<Timestamp>(std::llround(bench_duration * 1e6));
    for (const auto& sp : sc.scripts) end = std::max(end, sp.end_us() + 500'000);
    sc.duration_us = end;
  }
  if (sc.duration_us == 0) fail(0, "duration_s must be positive");
  return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("scenario: cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

Recording generate(const Scenario& scenario) {
  try {
    return sim::generate_labeled_recording(scenario.scene, scenario.scripts, scenario.duration_us);
  } catch (const std::invalid_argument& e) {
    throw ScenarioError(std::string("scenario: ") + e.what());
  }
}

Scenario benchmark_scenario(double duration_s, double noise_rate, std::uint64_t seed) {
  Scenario sc;
  sc.scene = sim::GelScene::make();
  sc.scene.noise_rate = noise_rate;
  sc.scene.noise_seed = seed;
  sim::BenchmarkRecipe recipe;
  recipe.duration_s = duration_s;
  recipe.seed = seed;
  sc.scripts = sim::make_benchmark_scripts(sc.scene, recipe);
  sc.duration_us = static_cast<Timestamp>(std::llround(duration_s * 1e6));
  return sc;
}

}  // namespace neurotouch
