#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "neurotouch/core.hpp"

namespace neurotouch {

using Mat3 = Eigen::Matrix3d;

Vec2 apply_homography(const Mat3& h, Vec2 p);

/// Normalized DLT over all correspondences (n >= 4). Returns nullopt for degenerate input.
std::optional<Mat3> fit_homography(std::span<const Vec2> src, std::span<const Vec2> dst);

struct HomographyRansacResult {
  Mat3 h = Mat3::Identity();
  std::vector<char> inlier;  // per correspondence
  int inlier_count = 0;
  bool ok = false;
};

/// 8-DOF RANSAC: 4-point minimal samples, inliers by transfer error below `threshold`,
/// final least-squares refit on the best consensus set.
HomographyRansacResult ransac_homography(std::span<const Vec2> src, std::span<const Vec2> dst, double threshold,
                                         int iterations, std::uint64_t seed);

/// Similarity transform x' = s R(theta) x + t, acting on coordinates relative to an origin.
struct Similarity {
  double s = 1.0;
  double theta = 0.0;
  Vec2 t;
};

/// H = [[s cos, -s sin, tx], [s sin, s cos, ty], [0, 0, 1]].
Mat3 compose_similarity(const Similarity& sim);
/// s = sqrt(H11^2 + H21^2), theta = atan2(H21, H11), t = (H13, H23).
Similarity decompose_similarity(const Mat3& h);

/// Closed-form least-squares similarity (no reflection). Needs two distinct source points.
std::optional<Similarity> fit_similarity(std::span<const Vec2> src, std::span<const Vec2> dst);

struct SimilarityRansacResult {
  Similarity sim;
  std::vector<char> inlier;
  int inlier_count = 0;
};

/// Two-point RANSAC for a similarity. Throws std::invalid_argument for fewer than two
/// correspondences and std::runtime_error when every sample is degenerate.
SimilarityRansacResult ransac_similarity(std::span<const Vec2> src, std::span<const Vec2> dst, double threshold,
                                         int iterations, std::uint64_t seed);

}  // namespace neurotouch
