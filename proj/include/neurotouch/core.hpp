#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace neurotouch {

// DAVIS-346 sensor geometry.
inline constexpr int kSensorWidth = 346;
inline constexpr int kSensorHeight = 260;

using Timestamp = std::uint64_t;  // microseconds from stream start

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator*(double k) const { return {x * k, y * k}; }
  constexpr Vec2 operator/(double k) const { return {x / k, y / k}; }
  constexpr Vec2& operator+=(Vec2 o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  constexpr Vec2& operator-=(Vec2 o) {
    x -= o.x;
    y -= o.y;
    return *this;
  }
  constexpr bool operator==(const Vec2&) const = default;

  double norm() const { return std::hypot(x, y); }
  constexpr double squared_norm() const { return x * x + y * y; }
};

inline double distance(Vec2 a, Vec2 b) { return (a - b).norm(); }
inline constexpr double squared_distance(Vec2 a, Vec2 b) { return (a - b).squared_norm(); }

enum class Polarity : std::uint8_t { Negative = 0, Positive = 1 };

struct Event {
  std::uint16_t x = 0;
  std::uint16_t y = 0;
  Timestamp t = 0;
  Polarity polarity = Polarity::Positive;

  bool operator==(const Event&) const = default;
};

/// 8-bit grayscale APS frame, row-major.
struct Frame {
  int width = kSensorWidth;
  int height = kSensorHeight;
  Timestamp t = 0;
  std::vector<std::uint8_t> pixels;

  Frame() = default;
  Frame(int w, int h, Timestamp ts, std::uint8_t fill = 0)
      : width(w), height(h), t(ts), pixels(static_cast<std::size_t>(w) * h, fill) {}

  std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }

  bool operator==(const Frame&) const = default;
};

struct GeometryConfig {
  double px_per_mm = 2.5;
  double gel_radius_mm = 30.0;
  double marker_pitch_mm = 4.0;
  double marker_diameter_mm = 1.0;
  int marker_count = 177;
  Vec2 image_center{173.0, 130.0};

  /// Throws std::invalid_argument when the gel disk does not fit the sensor.
  void validate() const;

  double gel_radius_px() const { return gel_radius_mm * px_per_mm; }
  double marker_pitch_px() const { return marker_pitch_mm * px_per_mm; }
  double marker_radius_px() const { return 0.5 * marker_diameter_mm * px_per_mm; }

  bool operator==(const GeometryConfig&) const = default;
};

double mm_to_px(double mm, const GeometryConfig& g);
double px_to_mm(double px, const GeometryConfig& g);

enum class GestureType : std::uint8_t {
  NoGesture = 0,
  Push = 1,
  Pinch = 2,
  Zoom = 3,
  TwistCW = 4,
  TwistCCW = 5,
};

inline constexpr int kGestureTypeCount = 6;
inline constexpr GestureType kAllGestureTypes[] = {
    GestureType::NoGesture, GestureType::Push,    GestureType::Pinch,
    GestureType::Zoom,      GestureType::TwistCW, GestureType::TwistCCW,
};

std::string_view to_string(GestureType type);
std::optional<GestureType> gesture_type_from_string(std::string_view name);

struct GestureLabel {
  Timestamp t = 0;
  GestureType type = GestureType::NoGesture;
  std::vector<Vec2> contact_points;
  double intensity_mm = 0.0;

  bool operator==(const GestureLabel&) const = default;
};

struct RecordingHeader {
  GeometryConfig geometry;
  Timestamp duration_us = 0;
  std::uint64_t seed = 0;

  bool operator==(const RecordingHeader&) const = default;
};

struct Recording {
  RecordingHeader header;
  std::vector<Event> events;
  std::vector<Frame> frames;
  std::vector<GestureLabel> labels;

  bool operator==(const Recording&) const = default;
};

}  // namespace neurotouch
