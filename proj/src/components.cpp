#include "neurotouch/components.hpp"

#include <algorithm>
#include <array>

namespace neurotouch {

namespace {

std::uint8_t dark_level(const Frame& f) {
  std::array<std::size_t, 256> hist{};
  for (auto v : f.pixels) ++hist[v];
  const std::size_t cut = f.pixels.size() / 20;
  std::size_t acc = 0;
  for (int v = 0; v < 256; ++v) {
    acc += hist[v];
    if (acc > cut) return static_cast<std::uint8_t>(v);
  }
  return 0;
}

}  // namespace

std::vector<Region> white_regions(const Frame& frame, std::uint8_t threshold, int min_area, int max_area) {
  const int w = frame.width;
  const int h = frame.height;
  std::vector<int> label(static_cast<std::size_t>(w) * h, 0);
  std::vector<Region> regions;
  std::vector<int> stack;
  std::vector<int> members;
  const double dark = dark_level(frame);

  int next = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int seed = y * w + x;
      if (label[seed] != 0 || frame.pixels[seed] < threshold) continue;
      ++next;
      label[seed] = next;
      stack.assign(1, seed);
      members.clear();
      Region r{{}, 0, x, y, x, y};
      while (!stack.empty()) {
        const int p = stack.back();
        stack.pop_back();
        members.push_back(p);
        const int px = p % w;
        const int py = p / w;
        r.min_x = std::min(r.min_x, px);
        r.max_x = std::max(r.max_x, px);
        r.min_y = std::min(r.min_y, py);
        r.max_y = std::max(r.max_y, py);
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = px + dx;
            const int ny = py + dy;
            if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
            const int q = ny * w + nx;
            if (label[q] == 0 && frame.pixels[q] >= threshold) {
              label[q] = next;
              stack.push_back(q);
            }
          }
        }
      }
      r.area = static_cast<int>(members.size());
      if (r.area < min_area || r.area > max_area) continue;

      // Weighted centroid over the bounding box grown by one pixel, skipping other regions.
      double sw = 0.0, sx = 0.0, sy = 0.0;
      for (int yy = std::max(0, r.min_y - 1); yy <= std::min(h - 1, r.max_y + 1); ++yy) {
        for (int xx = std::max(0, r.min_x - 1); xx <= std::min(w - 1, r.max_x + 1); ++xx) {
          const int q = yy * w + xx;
          if (label[q] != 0 && label[q] != next) continue;
          // Unlabelled pixels may still belong to a later region when markers touch.
          if (label[q] == 0 && frame.pixels[q] >= threshold) continue;
          const double wgt = std::max(0.0, frame.pixels[q] - dark);
          sw += wgt;
          sx += wgt * xx;
          sy += wgt * yy;
        }
      }
      r.centroid = sw > 0.0 ? Vec2{sx / sw, sy / sw} : Vec2{(r.min_x + r.max_x) * 0.5, (r.min_y + r.max_y) * 0.5};
      regions.push_back(r);
    }
  }
  return regions;
}

}  // namespace neurotouch
