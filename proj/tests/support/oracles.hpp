#pragma once
// Brute-force and closed-form references used by the unit and acceptance
// suites. Nothing here calls into the code paths it is used to check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace pnas3d::oracle {

/// O(M^2) k nearest other points, ordered by (distance^2, index).
inline std::vector<std::vector<std::size_t>> brute_force_knn(
    const std::vector<Eigen::Vector3d>& pts, std::size_t k) {
  std::vector<std::vector<std::size_t>> out(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    std::vector<std::pair<double, std::size_t>> all;
    for (std::size_t j = 0; j < pts.size(); ++j) {
      if (j == i) continue;
      const double dx = pts[i].x() - pts[j].x();
      const double dy = pts[i].y() - pts[j].y();
      const double dz = pts[i].z() - pts[j].z();
      all.emplace_back(dx * dx + dy * dy + dz * dz, j);
    }
    std::sort(all.begin(), all.end());
    for (std::size_t n = 0; n < k; ++n) out[i].push_back(all[n].second);
  }
  return out;
}

inline std::size_t count_above(const std::vector<double>& nu, double t) {
  return static_cast<std::size_t>(
      std::count_if(nu.begin(), nu.end(), [t](double v) { return std::abs(v) > t; }));
}

/// Scans every |nu_i| as a candidate cut and keeps the smallest one that lets
/// at most floor(rho*M) values strictly exceed it; tau itself when the initial
/// mask already satisfies the ratio.
inline double brute_force_threshold(const std::vector<double>& nu, double tau, double rho) {
  const double m = static_cast<double>(nu.size());
  if (static_cast<double>(count_above(nu, tau)) / m <= rho) return tau;
  const auto keep = static_cast<std::size_t>(std::floor(rho * m));
  double best = std::numeric_limits<double>::infinity();
  for (double v : nu) {
    const double candidate = std::abs(v);
    if (count_above(nu, candidate) <= keep) best = std::min(best, candidate);
  }
  return best;
}

/// Bilinear interpolation written from the textbook formula over a grid
/// spanning [x0,x1] x [y0,y1] with r nodes per axis (values[i*r+j]).
inline double bilinear(const std::vector<double>& values, int r, double x0, double x1,
                       double y0, double y1, double qx, double qy) {
  const double hx = (x1 - x0) / (r - 1);
  const double hy = (y1 - y0) / (r - 1);
  int i = static_cast<int>(std::floor((qx - x0) / hx));
  int j = static_cast<int>(std::floor((qy - y0) / hy));
  i = std::clamp(i, 0, r - 2);
  j = std::clamp(j, 0, r - 2);
  const double xa = x0 + i * hx, xb = x0 + (i + 1) * hx;
  const double ya = y0 + j * hy, yb = y0 + (j + 1) * hy;
  const double f00 = values[i * r + j], f10 = values[(i + 1) * r + j];
  const double f01 = values[i * r + j + 1], f11 = values[(i + 1) * r + j + 1];
  return (f00 * (xb - qx) * (yb - qy) + f10 * (qx - xa) * (yb - qy) +
          f01 * (xb - qx) * (qy - ya) + f11 * (qx - xa) * (qy - ya)) /
         ((xb - xa) * (yb - ya));
}

inline Eigen::Matrix3d random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Vector4d q(n(rng), n(rng), n(rng), n(rng));
  q.normalize();
  return Eigen::Quaterniond(q[0], q[1], q[2], q[3]).toRotationMatrix();
}

inline std::vector<Eigen::Vector3d> random_points(std::mt19937_64& rng, std::size_t n,
                                                  double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<Eigen::Vector3d> pts(n);
  for (auto& p : pts) p = Eigen::Vector3d(u(rng), u(rng), u(rng));
  return pts;
}

}  // namespace pnas3d::oracle
