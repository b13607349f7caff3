#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "neurotouch/core.hpp"

namespace neurotouch {

inline constexpr char kRecordingMagic[4] = {'N', 'T', 'R', 'C'};
inline constexpr std::uint16_t kRecordingVersion = 1;

enum class DecodeErrorKind {
  Io,
  BadMagic,
  BadVersion,
  Truncated,
  TrailingBytes,
  BadHeader,
  NonMonotoneTimestamp,
  OutOfBounds,
  BadLabel,
};

std::string_view to_string(DecodeErrorKind kind);

class DecodeError : public std::runtime_error {
 public:
  DecodeError(DecodeErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  DecodeErrorKind kind() const noexcept { return kind_; }

 private:
  DecodeErrorKind kind_;
};

// Layout (little-endian):
//   "NTRC" u16 version
//   f64 px_per_mm, gel_radius_mm, marker_pitch_mm, marker_diameter_mm, center_x, center_y
//   u64 marker_count, duration_us, seed, frame_width, frame_height,
//       event_count, frame_count, label_count
//   events:  { u16 x, u16 y, u64 t, u8 polarity } * event_count
//   frames:  { u64 t, u8 pixels[w*h] } * frame_count
//   labels:  { u64 t, u8 type, u8 n, { f64 x, f64 y } * n, f64 intensity_mm } * label_count
std::vector<std::uint8_t> encode_recording(const Recording& rec);
Recording decode_recording(std::span<const std::uint8_t> bytes);

void write_recording(const Recording& rec, const std::filesystem::path& path);
Recording read_recording(const std::filesystem::path& path);

/// Exports events as `t,x,y,p` lines.
void write_events_csv(const Recording& rec, std::ostream& out);

}  // namespace neurotouch
