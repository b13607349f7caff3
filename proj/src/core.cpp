#include "neurotouch/core.hpp"

#include <array>

namespace neurotouch {

void GeometryConfig::validate() const {
  if (!(px_per_mm > 0.0)) throw std::invalid_argument("geometry: px_per_mm must be positive");
  if (!(gel_radius_mm > 0.0)) throw std::invalid_argument("geometry: gel_radius_mm must be positive");
  if (!(marker_pitch_mm > 0.0)) throw std::invalid_argument("geometry: marker_pitch_mm must be positive");
  if (!(marker_diameter_mm > 0.0) || marker_diameter_mm >= marker_pitch_mm) {
    throw std::invalid_argument("geometry: marker_diameter_mm must be in (0, marker_pitch_mm)");
  }
  if (marker_count <= 0) throw std::invalid_argument("geometry: marker_count must be positive");
  const double r = gel_radius_px();
  if (image_center.x - r < 0.0 || image_center.x + r > kSensorWidth - 1 || image_center.y - r < 0.0 ||
      image_center.y + r > kSensorHeight - 1) {
    throw std::invalid_argument("geometry: gel disk does not fit inside the sensor");
  }
}

double mm_to_px(double mm, const GeometryConfig& g) { return mm * g.px_per_mm; }
double px_to_mm(double px, const GeometryConfig& g) { return px / g.px_per_mm; }

namespace {
constexpr std::array<std::string_view, kGestureTypeCount> kNames = {
    "NoGesture", "Push", "Pinch", "Zoom", "TwistCW", "TwistCCW",
};
}  // namespace

std::string_view to_string(GestureType type) {
  const auto i = static_cast<std::size_t>(type);
  return i < kNames.size() ? kNames[i] : std::string_view{"Unknown"};
}

std::optional<GestureType> gesture_type_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kNames.size(); ++i) {
    if (kNames[i] == name) return static_cast<GestureType>(i);
  }
  return std::nullopt;
}

}  // namespace neurotouch
