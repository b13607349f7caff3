#include "neurotouch/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>

namespace neurotouch {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}
std::string fmt(std::uint64_t v) { return std::to_string(v); }
std::string fmt(int v) { return std::to_string(v); }
std::string fmt(bool v) { return v ? "true" : "false"; }

template <class T>
T parse_number(std::string_view key, std::string_view s) {
  T v{};
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) {
    throw ConfigError("config: bad value '" + std::string(s) + "' for " + std::string(key));
  }
  return v;
}

bool parse_bool(std::string_view key, std::string_view s) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw ConfigError("config: bad boolean '" + std::string(s) + "' for " + std::string(key));
}

struct Entry {
  ConfigKey doc;
  std::function<void(PipelineConfig&, std::string_view)> set;
  std::function<std::string(const PipelineConfig&)> get;
};

template <class T>
Entry field(std::string key, std::string help, T PipelineConfig::*sec, auto member) {
  Entry e;
  e.doc = {key, std::move(help), {}};
  e.set = [sec, member, key](PipelineConfig& c, std::string_view v) {
    auto& dst = (c.*sec).*member;
    using V = std::remove_reference_t<decltype(dst)>;
    if constexpr (std::is_same_v<V, bool>) {
      dst = parse_bool(key, v);
    } else if constexpr (std::is_same_v<V, std::uint8_t>) {
      const int x = parse_number<int>(key, v);
      if (x < 0 || x > 255) throw ConfigError("config: " + key + " must be in [0,255]");
      dst = static_cast<std::uint8_t>(x);
    } else {
      dst = parse_number<V>(key, v);
    }
  };
  e.get = [sec, member](const PipelineConfig& c) {
    const auto& v = (c.*sec).*member;
    using V = std::remove_cvref_t<decltype(v)>;
    if constexpr (std::is_same_v<V, std::uint8_t>) {
      return fmt(static_cast<int>(v));
    } else {
      return fmt(v);
    }
  };
  return e;
}

template <class T>
Entry top(std::string key, std::string help, T PipelineConfig::*member) {
  Entry e;
  e.doc = {key, std::move(help), {}};
  e.set = [member, key](PipelineConfig& c, std::string_view v) {
    if constexpr (std::is_same_v<T, bool>) {
      c.*member = parse_bool(key, v);
    } else {
      c.*member = parse_number<T>(key, v);
    }
  };
  e.get = [member](const PipelineConfig& c) { return fmt(c.*member); };
  return e;
}

std::vector<Entry> build_entries() {
  using C = PipelineConfig;
  std::vector<Entry> v;
  v.push_back(top("pipeline.batch_window_us", "event batch length, microseconds", &C::batch_window_us));
  v.push_back(top("pipeline.reset_window_batches", "max age of a resting verdict used for a reset, in batches",
                  &C::reset_window_batches));
  v.push_back(top("pipeline.seed", "RANSAC seed, mixed with the batch index", &C::seed));
  v.push_back(top("pipeline.threaded", "run resting detection on a second worker", &C::threaded));
  v.push_back(top("pipeline.record_latency", "measure per-stage latencies (false writes zeros)", &C::record_latency));
  v.push_back(top("pipeline.emit_diagnostics", "add transform and set sizes to output records", &C::emit_diagnostics));

  v.push_back(field("geometry.px_per_mm", "image scale", &C::geometry, &GeometryConfig::px_per_mm));
  v.push_back(field("geometry.gel_radius_mm", "gel radius", &C::geometry, &GeometryConfig::gel_radius_mm));
  v.push_back(field("geometry.marker_pitch_mm", "marker grid spacing", &C::geometry, &GeometryConfig::marker_pitch_mm));
  v.push_back(field("geometry.marker_diameter_mm", "marker diameter", &C::geometry, &GeometryConfig::marker_diameter_mm));
  v.push_back(field("geometry.marker_count", "number of markers", &C::geometry, &GeometryConfig::marker_count));
  {
    Entry cx;
    cx.doc = {"geometry.center_x", "gel center column, px", {}};
    cx.set = [](C& c, std::string_view s) { c.geometry.image_center.x = parse_number<double>("geometry.center_x", s); };
    cx.get = [](const C& c) { return fmt(c.geometry.image_center.x); };
    v.push_back(cx);
    Entry cy;
    cy.doc = {"geometry.center_y", "gel center row, px", {}};
    cy.set = [](C& c, std::string_view s) { c.geometry.image_center.y = parse_number<double>("geometry.center_y", s); };
    cy.get = [](const C& c) { return fmt(c.geometry.image_center.y); };
    v.push_back(cy);
  }

  v.push_back(field("tracker.blob_sigma_px", "fixed blob size", &C::tracker, &BlobParams::blob_sigma_px));
  v.push_back(field("tracker.gate_px", "association distance", &C::tracker, &BlobParams::gate_px));
  v.push_back(field("tracker.process_noise_pos", "position process noise, px^2/s", &C::tracker,
                    &BlobParams::process_noise_pos));
  v.push_back(field("tracker.process_noise_vel", "velocity process noise, (px/s)^2/s", &C::tracker,
                    &BlobParams::process_noise_vel));
  v.push_back(field("tracker.measurement_variance", "px^2, 0 means blob_sigma_px^2", &C::tracker,
                    &BlobParams::measurement_variance));
  v.push_back(field("tracker.velocity_half_life_s", "velocity damping half-life", &C::tracker,
                    &BlobParams::velocity_half_life_s));
  v.push_back(field("tracker.initial_pos_variance", "px^2", &C::tracker, &BlobParams::initial_pos_variance));
  v.push_back(field("tracker.initial_vel_variance", "(px/s)^2", &C::tracker, &BlobParams::initial_vel_variance));
  v.push_back(field("tracker.bounds_margin_px", "allowed excursion outside the sensor", &C::tracker,
                    &BlobParams::bounds_margin_px));
  v.push_back(field("tracker.health_window_s", "event-rate window for marker health", &C::tracker,
                    &BlobParams::health_window_s));
  v.push_back(field("tracker.support_window_us", "isolated-event rejection window, 0 = off", &C::tracker,
                    &BlobParams::support_window_us));
  v.push_back(field("tracker.max_time_regression_us", "tolerated event timestamp regression", &C::tracker,
                    &BlobParams::max_time_regression_us));
  v.push_back(field("tracker.binarize_threshold", "init threshold, 0-255", &C::tracker, &BlobParams::binarize_threshold));
  v.push_back(field("tracker.min_area", "min region area, px", &C::tracker, &BlobParams::min_area));
  v.push_back(field("tracker.max_area", "max region area, px", &C::tracker, &BlobParams::max_area));
  v.push_back(field("tracker.expected_markers", "required region count, 0 = any", &C::tracker,
                    &BlobParams::expected_markers));

  v.push_back(field("engine.a", "RANSAC threshold coefficient", &C::engine, &EngineParams::a));
  v.push_back(field("engine.r", "neighborhood radius, px", &C::engine, &EngineParams::r));
  v.push_back(field("engine.n_min", "minimum neighbors", &C::engine, &EngineParams::n_min));
  v.push_back(field("engine.noise_floor", "mean displacement below which nothing is reported, px", &C::engine,
                    &EngineParams::noise_floor));
  v.push_back(field("engine.w_s", "scale weight", &C::engine, &EngineParams::w_s));
  v.push_back(field("engine.w_theta", "rotation weight", &C::engine, &EngineParams::w_theta));
  v.push_back(field("engine.w_t", "translation weight (translation is divided by r)", &C::engine, &EngineParams::w_t));
  v.push_back(field("engine.global_iterations", "homography RANSAC iterations", &C::engine,
                    &EngineParams::global_iterations));
  v.push_back(field("engine.constrained_iterations", "similarity RANSAC iterations", &C::engine,
                    &EngineParams::constrained_iterations));
  v.push_back(field("engine.min_peak_ratio", "drop maxima below this fraction of the strongest", &C::engine,
                    &EngineParams::min_peak_ratio));
  v.push_back(field("engine.max_contacts", "cap on contact points, 0 = none", &C::engine, &EngineParams::max_contacts));

  v.push_back(field("rest.binarize_threshold", "marker pixel threshold, 0-255", &C::rest, &RestParams::binarize_threshold));
  v.push_back(field("rest.chamfer_threshold", "normalized Chamfer distance for resting, px^2", &C::rest,
                    &RestParams::chamfer_threshold));

  const PipelineConfig defaults;
  for (auto& e : v) e.doc.default_value = e.get(defaults);
  return v;
}

const std::vector<Entry>& entries() {
  static const std::vector<Entry> e = build_entries();
  return e;
}

const Entry& find_entry(std::string_view key) {
  for (const auto& e : entries()) {
    if (e.doc.key == key) return e;
  }
  throw ConfigError("config: unknown key '" + std::string(key) + "'");
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> k;
    for (const auto& e : entries()) k.push_back(e.doc);
    return k;
  }();
  return keys;
}

void apply_config_value(PipelineConfig& cfg, std::string_view key, std::string_view value) {
  find_entry(key).set(cfg, trim(value));
}

void apply_override(PipelineConfig& cfg, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) throw ConfigError("config: expected key=value, got '" + std::string(assignment) + "'");
  apply_config_value(cfg, trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

PipelineConfig parse_config(std::string_view text, PipelineConfig base) {
  std::string section;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("config line " + std::to_string(line_no) + ": bad section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value");
    std::string key(trim(line.substr(0, eq)));
    if (!section.empty() && key.find('.') == std::string::npos) key = section + "." + key;
    try {
      apply_config_value(base, key, line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return base;
}

PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

std::string config_value(const PipelineConfig& cfg, std::string_view key) { return find_entry(key).get(cfg); }

void write_config(std::ostream& out, const PipelineConfig& cfg) {
  for (const auto& e : entries()) out << e.doc.key << " = " << e.get(cfg) << '\n';
}

}  // namespace neurotouch
