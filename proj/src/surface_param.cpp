#include "pnas3d/surface_param.hpp"

#include <cmath>
#include <limits>
#include <string>

#include <Eigen/SVD>

#include "pnas3d/error.hpp"

namespace pnas3d {

Vec3 canonical_sign(const Vec3& v) noexcept {
  Eigen::Index arg = 0;
  for (Eigen::Index i = 1; i < 3; ++i) {
    if (std::abs(v[i]) > std::abs(v[arg])) arg = i;
  }
  return v[arg] < 0.0 ? Vec3(-v) : v;
}

SurfaceParam parameterize(std::span<const Vec3> coords) {
  const auto m = static_cast<Eigen::Index>(coords.size());
  if (m < 3) {
    throw Error(ErrorCode::TooFewPoints, "parameterize",
                "need at least 3 valid points, got " + std::to_string(m));
  }

  SurfaceParam param;
  Vec3 sum = Vec3::Zero();
  for (const auto& p : coords) sum += p;
  param.centroid = sum / static_cast<double>(m);

  Eigen::MatrixX3d centered(m, 3);
  for (Eigen::Index i = 0; i < m; ++i) {
    centered.row(i) = (coords[static_cast<std::size_t>(i)] - param.centroid)
                          .transpose();
  }

  Eigen::JacobiSVD<Eigen::MatrixX3d> svd(centered, Eigen::ComputeThinV);
  param.singular_values = svd.singularValues();
  const auto& sv = param.singular_values;
  if (!(sv[1] >= 1e-12 * sv[0]) || sv[0] == 0.0) {
    throw Error(ErrorCode::DegenerateGeometry, "parameterize",
                "valid points are collinear or coincident (singular values " +
                    std::to_string(sv[0]) + ", " + std::to_string(sv[1]) +
                    ")");
  }

  const Eigen::Matrix3d& v = svd.matrixV();
  param.basis.col(0) = canonical_sign(v.col(0));
  param.basis.col(1) = canonical_sign(v.col(1));
  param.normal_axis = canonical_sign(v.col(2));

  param.coords2d.resize(coords.size());
  param.bounds.min = Vec2::Constant(std::numeric_limits<double>::infinity());
  param.bounds.max = Vec2::Constant(-std::numeric_limits<double>::infinity());
  for (Eigen::Index i = 0; i < m; ++i) {
    const Vec2 q = (centered.row(i) * param.basis).transpose();
    param.coords2d[static_cast<std::size_t>(i)] = q;
    param.bounds.min = param.bounds.min.cwiseMin(q);
    param.bounds.max = param.bounds.max.cwiseMax(q);
  }
  return param;
}

}  // namespace pnas3d
