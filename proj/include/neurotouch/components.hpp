#pragma once

#include <cstdint>
#include <vector>

#include "neurotouch/core.hpp"

namespace neurotouch {

struct Region {
  Vec2 centroid;  // intensity-weighted, px
  int area = 0;   // thresholded pixel count
  int min_x = 0, min_y = 0, max_x = 0, max_y = 0;
};

/// 8-connected regions of pixels with intensity >= threshold, filtered by area.
/// Centroids weight each pixel by its intensity above the frame's dark level and include the
/// one-pixel anti-aliasing ring around the region.
std::vector<Region> white_regions(const Frame& frame, std::uint8_t threshold, int min_area = 1,
                                  int max_area = 1 << 20);

}  // namespace neurotouch
