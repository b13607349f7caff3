#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "neurotouch/core.hpp"

namespace neurotouch {

struct PixelPoint {
  int x = 0;
  int y = 0;
  bool operator==(const PixelPoint&) const = default;
};

struct RestParams {
  std::uint8_t binarize_threshold = 128;
  double chamfer_threshold = 2.5;  // normalized: raw sum / (|P| + |Q|), px^2

  void validate() const;
};

class EmptyPointSetError : public std::invalid_argument {
 public:
  EmptyPointSetError() : std::invalid_argument("chamfer: empty point set") {}
};

/// All pixels with intensity >= threshold, row-major order.
std::vector<PixelPoint> marker_pixels(const Frame& frame, std::uint8_t threshold);

/// Exact squared Euclidean distance to the nearest point of `pts` for every grid pixel, by the
/// separable two-pass (column, then row lower-envelope) transform. Points must lie in the grid.
std::vector<std::int64_t> squared_distance_transform(std::span<const PixelPoint> pts, int width, int height);

struct ChamferResult {
  std::int64_t raw = 0;   // sum of squared nearest-neighbor distances, both directions
  double normalized = 0;  // raw / (|P| + |Q|)
};

/// Symmetric Chamfer distance on a width x height grid. Throws EmptyPointSetError.
ChamferResult chamfer(std::span<const PixelPoint> p, std::span<const PixelPoint> q, int width = kSensorWidth,
                      int height = kSensorHeight);

/// Direct O(|P||Q|) evaluation, used as a reference.
ChamferResult chamfer_brute_force(std::span<const PixelPoint> p, std::span<const PixelPoint> q);

struct RestVerdict {
  Timestamp t = 0;
  bool resting = false;
  double distance = 0.0;  // normalized Chamfer; infinity when the frame has no marker pixels
};

/// Compares frames against the marker pixels of a reference (launch) frame.
class RestDetector {
 public:
  explicit RestDetector(RestParams params = {});

  void set_reference(const Frame& frame);
  bool has_reference() const { return !reference_.empty(); }
  RestVerdict evaluate(const Frame& frame) const;
  const RestParams& params() const { return params_; }

 private:
  RestParams params_;
  int width_ = kSensorWidth;
  int height_ = kSensorHeight;
  std::vector<PixelPoint> reference_;
  std::vector<std::int64_t> reference_dt_;
};

}  // namespace neurotouch
