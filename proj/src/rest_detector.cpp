#include "neurotouch/rest_detector.hpp"

#include <algorithm>
#include <limits>

namespace neurotouch {

void RestParams::validate() const {
  if (binarize_threshold == 0) throw std::invalid_argument("rest: binarize_threshold must be positive");
  if (!(chamfer_threshold > 0.0)) throw std::invalid_argument("rest: chamfer_threshold must be positive");
}

std::vector<PixelPoint> marker_pixels(const Frame& frame, std::uint8_t threshold) {
  std::vector<PixelPoint> out;
  for (int y = 0; y < frame.height; ++y) {
    const std::uint8_t* row = frame.pixels.data() + static_cast<std::size_t>(y) * frame.width;
    for (int x = 0; x < frame.width; ++x) {
      if (row[x] >= threshold) out.push_back({x, y});
    }
  }
  return out;
}

std::vector<std::int64_t> squared_distance_transform(std::span<const PixelPoint> pts, int width, int height) {
  using i64 = std::int64_t;
  const i64 inf = width + height;
  // Pass 1: per column, distance to the nearest feature in that column.
  std::vector<i64> g(static_cast<std::size_t>(width) * height, inf);
  for (const PixelPoint& p : pts) {
    if (p.x < 0 || p.y < 0 || p.x >= width || p.y >= height) throw std::out_of_range("distance transform: point off grid");
    g[static_cast<std::size_t>(p.y) * width + p.x] = 0;
  }
  for (int x = 0; x < width; ++x) {
    for (int y = 1; y < height; ++y) {
      i64& c = g[static_cast<std::size_t>(y) * width + x];
      c = std::min(c, g[static_cast<std::size_t>(y - 1) * width + x] + 1);
    }
    for (int y = height - 2; y >= 0; --y) {
      i64& c = g[static_cast<std::size_t>(y) * width + x];
      c = std::min(c, g[static_cast<std::size_t>(y + 1) * width + x] + 1);
    }
  }
  // Pass 2: per row, lower envelope of parabolas (x - i)^2 + g(i)^2.
  std::vector<i64> out(g.size());
  std::vector<int> s(width), t(width);
  for (int y = 0; y < height; ++y) {
    const i64* gr = g.data() + static_cast<std::size_t>(y) * width;
    auto f = [&](i64 x, i64 i) { return (x - i) * (x - i) + gr[i] * gr[i]; };
    auto sep = [&](i64 i, i64 u) {
      const i64 num = u * u - i * i + gr[u] * gr[u] - gr[i] * gr[i];
      const i64 den = 2 * (u - i);
      return num >= 0 ? num / den : -((-num + den - 1) / den);
    };
    int q = 0;
    s[0] = 0;
    t[0] = 0;
    for (int u = 1; u < width; ++u) {
      while (q >= 0 && f(t[q], s[q]) > f(t[q], u)) --q;
      if (q < 0) {
        q = 0;
        s[0] = u;
      } else {
        const i64 w = 1 + sep(s[q], u);
        if (w < width) {
          ++q;
          s[q] = u;
          t[q] = static_cast<int>(w);
        }
      }
    }
    i64* orow = out.data() + static_cast<std::size_t>(y) * width;
    for (int u = width - 1; u >= 0; --u) {
      orow[u] = f(u, s[q]);
      if (u == t[q]) --q;
    }
  }
  return out;
}

ChamferResult chamfer(std::span<const PixelPoint> p, std::span<const PixelPoint> q, int width, int height) {
  if (p.empty() || q.empty()) throw EmptyPointSetError();
  const auto dq = squared_distance_transform(q, width, height);
  const auto dp = squared_distance_transform(p, width, height);
  ChamferResult r;
  for (const PixelPoint& a : p) r.raw += dq[static_cast<std::size_t>(a.y) * width + a.x];
  for (const PixelPoint& b : q) r.raw += dp[static_cast<std::size_t>(b.y) * width + b.x];
  r.normalized = static_cast<double>(r.raw) / static_cast<double>(p.size() + q.size());
  return r;
}

ChamferResult chamfer_brute_force(std::span<const PixelPoint> p, std::span<const PixelPoint> q) {
  if (p.empty() || q.empty()) throw EmptyPointSetError();
  auto nearest = [](PixelPoint a, std::span<const PixelPoint> set) {
    std::int64_t best = std::numeric_limits<std::int64_t>::max();
    for (const PixelPoint& b : set) {
      const std::int64_t dx = a.x - b.x, dy = a.y - b.y;
      best = std::min(best, dx * dx + dy * dy);
    }
    return best;
  };
  ChamferResult r;
  for (const PixelPoint& a : p) r.raw += nearest(a, q);
  for (const PixelPoint& b : q) r.raw += nearest(b, p);
  r.normalized = static_cast<double>(r.raw) / static_cast<double>(p.size() + q.size());
  return r;
}

RestDetector::RestDetector(RestParams params) : params_(params) { params_.validate(); }

void RestDetector::set_reference(const Frame& frame) {
  auto pts = marker_pixels(frame, params_.binarize_threshold);
  if (pts.empty()) throw EmptyPointSetError();
  width_ = frame.width;
  height_ = frame.height;
  reference_dt_ = squared_distance_transform(pts, width_, height_);
  reference_ = std::move(pts);
}

RestVerdict RestDetector::evaluate(const Frame& frame) const {
  if (reference_.empty()) throw std::logic_error("RestDetector: no reference frame");
  RestVerdict v;
  v.t = frame.t;
  const auto cur = marker_pixels(frame, params_.binarize_threshold);
  if (cur.empty() || frame.width != width_ || frame.height != height_) {
    v.distance = std::numeric_limits<double>::infinity();
    return v;
  }
  const auto dcur = squared_distance_transform(cur, width_, height_);
  std::int64_t raw = 0;
  for (const PixelPoint& a : cur) raw += reference_dt_[static_cast<std::size_t>(a.y) * width_ + a.x];
  for (const PixelPoint& b : reference_) raw += dcur[static_cast<std::size_t>(b.y) * width_ + b.x];
  v.distance = static_cast<double>(raw) / static_cast<double>(cur.size() + reference_.size());
  v.resting = v.distance <= params_.chamfer_threshold;
  return v;
}

}  // namespace neurotouch
