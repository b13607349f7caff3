#include "neurotouch/homography.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace neurotouch {

namespace {

// Hartley normalization: centroid to origin, mean distance sqrt(2).
Mat3 normalizer(std::span<const Vec2> pts) {
  Vec2 c;
  for (Vec2 p : pts) c += p;
  c = c / static_cast<double>(pts.size());
  double d = 0.0;
  for (Vec2 p : pts) d += distance(p, c);
  d /= static_cast<double>(pts.size());
  const double k = d > 1e-12 ? std::sqrt(2.0) / d : 1.0;
  Mat3 t;
  t << k, 0, -k * c.x, 0, k, -k * c.y, 0, 0, 1;
  return t;
}

Vec2 xform(const Mat3& t, Vec2 p) { return {t(0, 0) * p.x + t(0, 2), t(1, 1) * p.y + t(1, 2)}; }

double cross(Vec2 a, Vec2 b, Vec2 c) { return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x); }

bool has_collinear_triple(const Vec2* p, double eps) {
  for (int i = 0; i < 4; ++i) {
    for (int j = i + 1; j < 4; ++j) {
      for (int k = j + 1; k < 4; ++k) {
        if (std::abs(cross(p[i], p[j], p[k])) < eps) return true;
      }
    }
  }
  return false;
}

// Exact 4-point solve with h33 = 1 on already-normalized points.
std::optional<Mat3> solve_four(const Vec2* s, const Vec2* d) {
  Eigen::Matrix<double, 8, 8> a;
  Eigen::Matrix<double, 8, 1> b;
  for (int i = 0; i < 4; ++i) {
    const double x = s[i].x, y = s[i].y, u = d[i].x, v = d[i].y;
    a.row(2 * i) << x, y, 1, 0, 0, 0, -u * x, -u * y;
    a.row(2 * i + 1) << 0, 0, 0, x, y, 1, -v * x, -v * y;
    b(2 * i) = u;
    b(2 * i + 1) = v;
  }
  Eigen::FullPivLU<Eigen::Matrix<double, 8, 8>> lu(a);
  if (!lu.isInvertible()) return std::nullopt;
  const Eigen::Matrix<double, 8, 1> h = lu.solve(b);
  if (!h.allFinite()) return std::nullopt;
  Mat3 m;
  m << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), 1.0;
  return m;
}

Mat3 denormalize(const Mat3& hn, const Mat3& ts, const Mat3& td) {
  Mat3 h = td.inverse() * hn * ts;
  if (std::abs(h(2, 2)) > 1e-15) h /= h(2, 2);
  return h;
}

int count_inliers(const Mat3& h, std::span<const Vec2> src, std::span<const Vec2> dst, double thr2,
                  std::vector<char>* mask) {
  int n = 0;
  for (std::size_t i = 0; i < src.size(); ++i) {
    const bool in = squared_distance(apply_homography(h, src[i]), dst[i]) < thr2;
    if (mask) (*mask)[i] = in ? 1 : 0;
    n += in ? 1 : 0;
  }
  return n;
}

}  // namespace

Vec2 apply_homography(const Mat3& h, Vec2 p) {
  const double w = h(2, 0) * p.x + h(2, 1) * p.y + h(2, 2);
  if (std::abs(w) < 1e-15) return {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  return {(h(0, 0) * p.x + h(0, 1) * p.y + h(0, 2)) / w, (h(1, 0) * p.x + h(1, 1) * p.y + h(1, 2)) / w};
}

std::optional<Mat3> fit_homography(std::span<const Vec2> src, std::span<const Vec2> dst) {
  if (src.size() != dst.size()) throw std::invalid_argument("fit_homography: size mismatch");
  if (src.size() < 4) return std::nullopt;
  const Mat3 ts = normalizer(src);
  const Mat3 td = normalizer(dst);
  Eigen::Matrix<double, 9, 9> ata = Eigen::Matrix<double, 9, 9>::Zero();
  Eigen::Matrix<double, 1, 9> r1, r2;
  for (std::size_t i = 0; i < src.size(); ++i) {
    const Vec2 s = xform(ts, src[i]);
    const Vec2 d = xform(td, dst[i]);
    r1 << s.x, s.y, 1, 0, 0, 0, -d.x * s.x, -d.x * s.y, -d.x;
    r2 << 0, 0, 0, s.x, s.y, 1, -d.y * s.x, -d.y * s.y, -d.y;
    ata.noalias() += r1.transpose() * r1;
    ata.noalias() += r2.transpose() * r2;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 9, 9>> es(ata);
  if (es.info() != Eigen::Success) return std::nullopt;
  const auto& ev = es.eigenvalues();
  // A second near-zero eigenvalue means the solution is not unique.
  if (ev(1) <= 1e-12 * std::max(1.0, ev(8))) return std::nullopt;
  const Eigen::Matrix<double, 9, 1> h = es.eigenvectors().col(0);
  Mat3 hn;
  hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
  const Mat3 out = denormalize(hn, ts, td);
  if (!out.allFinite() || std::abs(out.determinant()) < 1e-12) return std::nullopt;
  return out;
}

HomographyRansacResult ransac_homography(std::span<const Vec2> src, std::span<const Vec2> dst, double threshold,
                                         int iterations, std::uint64_t seed) {
  if (src.size() != dst.size()) throw std::invalid_argument("ransac_homography: size mismatch");
  HomographyRansacResult res;
  const int n = static_cast<int>(src.size());
  res.inlier.assign(src.size(), 0);
  if (n < 4) return res;

  const Mat3 ts = normalizer(src);
  const Mat3 td = normalizer(dst);
  std::vector<Vec2> ns(src.size()), nd(dst.size());
  for (int i = 0; i < n; ++i) {
    ns[i] = xform(ts, src[i]);
    nd[i] = xform(td, dst[i]);
  }
  const double thr2 = threshold * threshold;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, n - 1);

  int best = -1;
  Mat3 best_h = Mat3::Identity();
  for (int it = 0; it < iterations && best < n; ++it) {
    int idx[4];
    for (int k = 0; k < 4; ++k) {
      bool dup;
      do {
        idx[k] = pick(rng);
        dup = false;
        for (int j = 0; j < k; ++j) dup = dup || idx[j] == idx[k];
      } while (dup);
    }
    const Vec2 s[4] = {ns[idx[0]], ns[idx[1]], ns[idx[2]], ns[idx[3]]};
    const Vec2 d[4] = {nd[idx[0]], nd[idx[1]], nd[idx[2]], nd[idx[3]]};
    if (has_collinear_triple(s, 1e-6) || has_collinear_triple(d, 1e-6)) continue;
    const auto hn = solve_four(s, d);
    if (!hn) continue;
    const Mat3 h = denormalize(*hn, ts, td);
    if (!h.allFinite()) continue;
    const int c = count_inliers(h, src, dst, thr2, nullptr);
    if (c > best) {
      best = c;
      best_h = h;
    }
  }
  if (best < 4) return res;

  count_inliers(best_h, src, dst, thr2, &res.inlier);
  std::vector<Vec2> is, id;
  for (int i = 0; i < n; ++i) {
    if (res.inlier[i]) {
      is.push_back(src[i]);
      id.push_back(dst[i]);
    }
  }
  if (const auto refit = fit_homography(is, id)) {
    std::vector<char> mask(src.size(), 0);
    const int c = count_inliers(*refit, src, dst, thr2, &mask);
    if (c >= best) {
      best_h = *refit;
      best = c;
      res.inlier = std::move(mask);
    }
  }
  res.h = best_h;
  res.inlier_count = best;
  res.ok = true;
  return res;
}

Mat3 compose_similarity(const Similarity& sim) {
  const double c = sim.s * std::cos(sim.theta);
  const double s = sim.s * std::sin(sim.theta);
  Mat3 h;
  h << c, -s, sim.t.x, s, c, sim.t.y, 0, 0, 1;
  return h;
}

Similarity decompose_similarity(const Mat3& h) {
  return {std::hypot(h(0, 0), h(1, 0)), std::atan2(h(1, 0), h(0, 0)), {h(0, 2), h(1, 2)}};
}

std::optional<Similarity> fit_similarity(std::span<const Vec2> src, std::span<const Vec2> dst) {
  if (src.size() != dst.size()) throw std::invalid_argument("fit_similarity: size mismatch");
  if (src.size() < 2) return std::nullopt;
  const double n = static_cast<double>(src.size());
  Vec2 ms, md;
  for (std::size_t i = 0; i < src.size(); ++i) {
    ms += src[i];
    md += dst[i];
  }
  ms = ms / n;
  md = md / n;
  // In complex form dst = a * src + b; a = sum(d' * conj(s')) / sum(|s'|^2).
  double re = 0.0, im = 0.0, den = 0.0;
  for (std::size_t i = 0; i < src.size(); ++i) {
    const Vec2 s = src[i] - ms;
    const Vec2 d = dst[i] - md;
    re += d.x * s.x + d.y * s.y;
    im += d.y * s.x - d.x * s.y;
    den += s.squared_norm();
  }
  if (den < 1e-18) return std::nullopt;
  re /= den;
  im /= den;
  const double scale = std::hypot(re, im);
  if (!(scale > 1e-12)) return std::nullopt;
  const Vec2 t{md.x - (re * ms.x - im * ms.y), md.y - (im * ms.x + re * ms.y)};
  return Similarity{scale, std::atan2(im, re), t};
}

SimilarityRansacResult ransac_similarity(std::span<const Vec2> src, std::span<const Vec2> dst, double threshold,
                                         int iterations, std::uint64_t seed) {
  if (src.size() != dst.size()) throw std::invalid_argument("ransac_similarity: size mismatch");
  const int n = static_cast<int>(src.size());
  if (n < 2) throw std::invalid_argument("ransac_similarity: need at least 2 correspondences");
  const double thr2 = threshold * threshold;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, n - 1);

  auto score = [&](const Similarity& sim, std::vector<char>* mask) {
    const Mat3 h = compose_similarity(sim);
    int c = 0;
    for (int i = 0; i < n; ++i) {
      const Vec2 p = src[i];
      const Vec2 q{h(0, 0) * p.x + h(0, 1) * p.y + h(0, 2), h(1, 0) * p.x + h(1, 1) * p.y + h(1, 2)};
      const bool in = squared_distance(q, dst[i]) < thr2;
      if (mask) (*mask)[i] = in ? 1 : 0;
      c += in ? 1 : 0;
    }
    return c;
  };

  int best = -1;
  Similarity best_sim;
  const int iters = n == 2 ? 1 : iterations;
  for (int it = 0; it < iters && best < n; ++it) {
    int i = 0, j = 1;
    if (n > 2) {
      i = pick(rng);
      do j = pick(rng);
      while (j == i);
    }
    const Vec2 s2[2] = {src[i], src[j]};
    const Vec2 d2[2] = {dst[i], dst[j]};
    const auto sim = fit_similarity(s2, d2);
    if (!sim) continue;
    const int c = score(*sim, nullptr);
    if (c > best) {
      best = c;
      best_sim = *sim;
    }
  }
  if (best < 0) throw std::runtime_error("ransac_similarity: all samples degenerate");

  SimilarityRansacResult res;
  res.inlier.assign(src.size(), 0);
  score(best_sim, &res.inlier);
  std::vector<Vec2> is, id;
  for (int k = 0; k < n; ++k) {
    if (res.inlier[k]) {
      is.push_back(src[k]);
      id.push_back(dst[k]);
    }
  }
  if (const auto refit = fit_similarity(is, id)) {
    std::vector<char> mask(src.size(), 0);
    const int c = score(*refit, &mask);
    if (c >= best) {
      best_sim = *refit;
      best = c;
      res.inlier = std::move(mask);
    }
  }
  res.sim = best_sim;
  res.inlier_count = best;
  return res;
}

}  // namespace neurotouch
