#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "neurotouch/core.hpp"
#include "neurotouch/homography.hpp"

namespace neurotouch {

struct EngineParams {
  double a = 0.6;             // RANSAC threshold coefficient on mean displacement
  double r = 30.0;            // neighborhood radius, px
  int n_min = 4;              // minimum neighborhood size, the marker itself included
  double noise_floor = 1.0;   // mean |v| in px below which nothing is reported
  double w_s = 1.0;
  double w_theta = 1.0;
  double w_t = 1.0;
  int global_iterations = 200;
  int constrained_iterations = 100;
  double min_peak_ratio = 0.0;  // drop local maxima weaker than this fraction of the strongest
  int max_contacts = 3;         // 0 = unlimited
  double px_per_mm = 2.5;

  void validate() const;
};

/// Similarity parameters in the y-up gel frame, about `origin` (image px).
struct TransformParams {
  double s = 1.0;
  double theta = 0.0;  // CCW positive as seen on the gel
  Vec2 t;              // px, y up
  Vec2 origin;
};

struct GestureEstimate {
  GestureType type = GestureType::NoGesture;
  std::vector<Vec2> contact_points;  // current image positions, px
  double intensity_mm = 0.0;
  std::optional<TransformParams> transform;
  int outlier_count = 0;      // |S|
  int neighborhood_size = 0;  // |A|
};

struct ContactDetection {
  std::vector<int> contact_ids;  // marker indices, strongest first
  std::vector<Vec2> contact_points;
  std::vector<int> outliers;     // S, ascending marker index
  double mean_displacement = 0.0;
  bool ransac_ok = false;
};

/// Global homography RANSAC on anchor -> current correspondences, neighborhood filtering of
/// the outlier set and local maxima of |v|.
ContactDetection detect_contact_points(std::span<const Vec2> anchors, std::span<const Vec2> positions,
                                       const EngineParams& params, std::uint64_t seed);

/// Markers whose current position is within r of any contact point.
std::vector<int> contact_neighborhood(std::span<const Vec2> positions, std::span<const Vec2> contacts, double r);

/// Similarity RANSAC about `origin` on the given correspondences, expressed in the y-up gel frame.
/// Throws like ransac_similarity.
TransformParams fit_constrained_homography(std::span<const Vec2> anchors, std::span<const Vec2> positions,
                                           Vec2 origin, double threshold, int iterations, std::uint64_t seed);

/// Dominant component of the normalized scores {w_s|s-1|, w_theta|theta|, w_t|t|/r}.
GestureType classify(const TransformParams& tp, const EngineParams& params);

/// Mean displacement magnitude over the given markers, in mm.
double intensity_mm(std::span<const Vec2> anchors, std::span<const Vec2> positions, std::span<const int> members,
                    double px_per_mm);

/// Classification and intensity given detected contacts.
GestureEstimate estimate_from_contacts(std::span<const Vec2> anchors, std::span<const Vec2> positions,
                                       const ContactDetection& det, const EngineParams& params, std::uint64_t seed);

/// Full per-snapshot estimate: contacts, classification and intensity.
GestureEstimate estimate_gesture(std::span<const Vec2> anchors, std::span<const Vec2> positions,
                                 const EngineParams& params, std::uint64_t seed);

}  // namespace neurotouch
