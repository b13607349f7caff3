#include "neurotouch/gesture_engine.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace neurotouch {

void EngineParams::validate() const {
  if (!(a > 0.0)) throw std::invalid_argument("engine: a must be positive");
  if (!(r > 0.0)) throw std::invalid_argument("engine: r must be positive");
  if (n_min < 1) throw std::invalid_argument("engine: n_min must be >= 1");
  if (noise_floor < 0.0) throw std::invalid_argument("engine: noise_floor must be >= 0");
  if (!(w_s > 0.0) || !(w_theta > 0.0) || !(w_t > 0.0)) throw std::invalid_argument("engine: weights must be positive");
  if (global_iterations < 1 || constrained_iterations < 1) throw std::invalid_argument("engine: iterations must be >= 1");
  if (min_peak_ratio < 0.0 || min_peak_ratio > 1.0) throw std::invalid_argument("engine: min_peak_ratio must be in [0,1]");
  if (max_contacts < 0) throw std::invalid_argument("engine: max_contacts must be >= 0");
  if (!(px_per_mm > 0.0)) throw std::invalid_argument("engine: px_per_mm must be positive");
}

ContactDetection detect_contact_points(std::span<const Vec2> anchors, std::span<const Vec2> positions,
                                       const EngineParams& params, std::uint64_t seed) {
  if (anchors.size() != positions.size()) throw std::invalid_argument("detect_contact_points: size mismatch");
  ContactDetection out;
  const int n = static_cast<int>(anchors.size());
  if (n == 0) return out;
  std::vector<double> mag(n);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    mag[i] = distance(positions[i], anchors[i]);
    sum += mag[i];
  }
  out.mean_displacement = sum / n;
  if (out.mean_displacement < params.noise_floor) return out;

  const auto fit = ransac_homography(anchors, positions, params.a * out.mean_displacement, params.global_iterations, seed);
  out.ransac_ok = fit.ok;
  for (int i = 0; i < n; ++i) {
    const bool in_s = fit.ok ? !fit.inlier[i] : mag[i] > params.noise_floor;
    if (in_s) out.outliers.push_back(i);
  }

  const double r2 = params.r * params.r;
  std::vector<int> maxima;
  for (int i : out.outliers) {
    int count = 0;
    bool is_max = true;
    for (int j : out.outliers) {
      if (squared_distance(positions[i], positions[j]) > r2) continue;
      ++count;
      if (mag[j] > mag[i] || (mag[j] == mag[i] && j < i)) is_max = false;
    }
    if (count >= params.n_min && is_max) maxima.push_back(i);
  }
  std::sort(maxima.begin(), maxima.end(), [&](int x, int y) { return mag[x] != mag[y] ? mag[x] > mag[y] : x < y; });
  if (!maxima.empty() && params.min_peak_ratio > 0.0) {
    const double cut = params.min_peak_ratio * mag[maxima.front()];
    std::erase_if(maxima, [&](int i) { return mag[i] < cut; });
  }
  if (params.max_contacts > 0 && static_cast<int>(maxima.size()) > params.max_contacts) {
    maxima.resize(params.max_contacts);
  }
  out.contact_ids = maxima;
  for (int i : maxima) out.contact_points.push_back(positions[i]);
  return out;
}

std::vector<int> contact_neighborhood(std::span<const Vec2> positions, std::span<const Vec2> contacts, double r) {
  std::vector<int> out;
  const double r2 = r * r;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    for (Vec2 c : contacts) {
      if (squared_distance(positions[i], c) <= r2) {
        out.push_back(static_cast<int>(i));
        break;
      }
    }
  }
  return out;
}

TransformParams fit_constrained_homography(std::span<const Vec2> anchors, std::span<const Vec2> positions,
                                           Vec2 origin, double threshold, int iterations, std::uint64_t seed) {
  if (anchors.size() != positions.size()) throw std::invalid_argument("fit_constrained_homography: size mismatch");
  // Gel frame: relative to origin with y pointing up.
  std::vector<Vec2> src(anchors.size()), dst(positions.size());
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    src[i] = {anchors[i].x - origin.x, origin.y - anchors[i].y};
    dst[i] = {positions[i].x - origin.x, origin.y - positions[i].y};
  }
  const auto res = ransac_similarity(src, dst, threshold, iterations, seed);
  const Similarity sim = decompose_similarity(compose_similarity(res.sim));
  return {sim.s, sim.theta, sim.t, origin};
}

GestureType classify(const TransformParams& tp, const EngineParams& params) {
  const double score_s = params.w_s * std::abs(tp.s - 1.0);
  const double score_theta = params.w_theta * std::abs(tp.theta);
  const double score_t = params.w_t * tp.t.norm() / params.r;
  if (score_t >= score_s && score_t >= score_theta) return GestureType::Push;
  if (score_s >= score_theta) return tp.s > 1.0 ? GestureType::Zoom : GestureType::Pinch;
  return tp.theta > 0.0 ? GestureType::TwistCCW : GestureType::TwistCW;
}

double intensity_mm(std::span<const Vec2> anchors, std::span<const Vec2> positions, std::span<const int> members,
                    double px_per_mm) {
  if (members.empty()) return 0.0;
  double sum = 0.0;
  for (int i : members) sum += distance(positions[i], anchors[i]);
  return sum / static_cast<double>(members.size()) / px_per_mm;
}

GestureEstimate estimate_from_contacts(std::span<const Vec2> anchors, std::span<const Vec2> positions,
                                       const ContactDetection& det, const EngineParams& params, std::uint64_t seed) {
  GestureEstimate est;
  est.outlier_count = static_cast<int>(det.outliers.size());
  if (det.contact_points.empty()) return est;

  const std::vector<int> members = contact_neighborhood(positions, det.contact_points, params.r);
  if (members.size() < 2) return est;
  std::vector<Vec2> src, dst;
  double mean = 0.0;
  for (int i : members) {
    src.push_back(anchors[i]);
    dst.push_back(positions[i]);
    mean += distance(positions[i], anchors[i]);
  }
  mean /= static_cast<double>(members.size());
  Vec2 origin;
  for (Vec2 c : det.contact_points) origin += c;
  origin = origin / static_cast<double>(det.contact_points.size());

  TransformParams tp;
  try {
    tp = fit_constrained_homography(src, dst, origin, params.a * mean, params.constrained_iterations,
                                    seed ^ 0x9e3779b97f4a7c15ULL);
  } catch (const std::exception&) {
    return est;
  }
  est.type = classify(tp, params);
  est.contact_points = det.contact_points;
  est.intensity_mm = mean / params.px_per_mm;
  est.transform = tp;
  est.neighborhood_size = static_cast<int>(members.size());
  return est;
}

GestureEstimate estimate_gesture(std::span<const Vec2> anchors, std::span<const Vec2> positions,
                                 const EngineParams& params, std::uint64_t seed) {
  return estimate_from_contacts(anchors, positions, detect_contact_points(anchors, positions, params, seed), params,
                                seed);
}

}  // namespace neurotouch
