#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "pnas3d/point_cloud.hpp"

namespace pnas3d {

/// Axis-aligned 2D box in the parameter plane.
struct Bounds2 {
  Vec2 min = Vec2::Zero();
  Vec2 max = Vec2::Zero();
};

/// Planar PCA chart of a set of 3D points.
///
/// `basis` holds the two leading principal directions as columns and
/// `normal_axis` the third. Every singular vector has its largest-magnitude
/// entry made positive (first such entry on ties) so that identical inputs
/// always yield identical charts.
struct SurfaceParam {
  Vec3 centroid = Vec3::Zero();
  Eigen::Matrix<double, 3, 2> basis = Eigen::Matrix<double, 3, 2>::Zero();
  Vec3 normal_axis = Vec3::UnitZ();
  Vec3 singular_values = Vec3::Zero();
  std::vector<Vec2> coords2d;
  Bounds2 bounds;
};

/// Centers the points, takes the SVD of the centered matrix and projects onto
/// the top-two right-singular vectors.
///
/// Throws TooFewPoints if fewer than 3 points, DegenerateGeometry if the
/// second singular value is below 1e-12 times the first.
SurfaceParam parameterize(std::span<const Vec3> coords);

inline SurfaceParam parameterize(const ValidSubset& subset) {
  return parameterize(std::span<const Vec3>(subset.coords));
}

/// Flips `v` so its largest-magnitude component is positive.
Vec3 canonical_sign(const Vec3& v) noexcept;

}  // namespace pnas3d
