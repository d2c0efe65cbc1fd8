#include "pnas3d/point_cloud.hpp"

#include <algorithm>
#include <cstring>
#include <string>

#include "pnas3d/error.hpp"

namespace pnas3d {

PointCloud::PointCloud(std::vector<Vec3> points)
    : points_(std::move(points)), validity_(points_.size(), 1) {
  check();
}

PointCloud::PointCloud(std::vector<Vec3> points,
                       std::vector<std::uint8_t> validity)
    : points_(std::move(points)), validity_(std::move(validity)) {
  check();
}

PointCloud::PointCloud(std::vector<Vec3> points,
                       std::vector<std::uint8_t> validity, RasterShape shape)
    : points_(std::move(points)),
      validity_(std::move(validity)),
      shape_(shape) {
  check();
}

PointCloud PointCloud::from_raster(std::vector<Vec3> points,
                                   RasterShape shape) {
  std::vector<std::uint8_t> validity(points.size());
  std::transform(points.begin(), points.end(), validity.begin(),
                 [](const Vec3& p) -> std::uint8_t {
                   return is_zero_triple(p) ? 0 : 1;
                 });
  return PointCloud(std::move(points), std::move(validity), shape);
}

void PointCloud::check() const {
  if (points_.empty()) {
    throw Error(ErrorCode::ShapeMismatch, "point_cloud",
                "a point cloud needs at least one point");
  }
  if (validity_.size() != points_.size()) {
    throw Error(ErrorCode::ShapeMismatch, "point_cloud",
                "validity has " + std::to_string(validity_.size()) +
                    " flags for " + std::to_string(points_.size()) +
                    " points");
  }
  if (shape_) {
    if (shape_->height == 0 || shape_->width == 0 ||
        shape_->height * shape_->width != points_.size()) {
      throw Error(ErrorCode::ShapeMismatch, "point_cloud",
                  "raster " + std::to_string(shape_->height) + "x" +
                      std::to_string(shape_->width) + " does not hold " +
                      std::to_string(points_.size()) + " points");
    }
  }
}

std::size_t PointCloud::valid_count() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(validity_.begin(), validity_.end(),
                    [](std::uint8_t v) { return v != 0; }));
}

bool operator==(const PointCloud& a, const PointCloud& b) {
  if (a.shape_ != b.shape_ || a.validity_ != b.validity_ ||
      a.points_.size() != b.points_.size()) {
    return false;
  }
  // Bitwise comparison so that -0.0 and NaN payloads count as differences.
  return std::memcmp(a.points_.data(), b.points_.data(),
                     a.points_.size() * sizeof(Vec3)) == 0;
}

bool is_zero_triple(const Vec3& p) noexcept {
  return p.x() == 0.0 && p.y() == 0.0 && p.z() == 0.0;
}

ValidSubset extract_valid(const PointCloud& cloud) {
  ValidSubset subset;
  const auto points = cloud.points();
  subset.coords.reserve(cloud.valid_count());
  subset.index_map.reserve(cloud.valid_count());
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (cloud.is_valid(i)) {
      subset.coords.push_back(points[i]);
      subset.index_map.push_back(i);
    }
  }
  if (subset.coords.empty()) {
    throw Error(ErrorCode::EmptyValidSet, "extract_valid",
                "no valid points among " + std::to_string(points.size()));
  }
  return subset;
}

PointCloud reintegrate(const PointCloud& cloud, const ValidSubset& subset,
                       std::span<const Vec3> new_coords) {
  if (new_coords.size() != subset.size()) {
    throw Error(ErrorCode::ShapeMismatch, "reintegrate",
                "expected " + std::to_string(subset.size()) +
                    " rows, got " + std::to_string(new_coords.size()));
  }
  std::vector<Vec3> points(cloud.points().begin(), cloud.points().end());
  for (std::size_t i = 0; i < subset.size(); ++i) {
    points[subset.index_map[i]] = new_coords[i];
  }
  std::vector<std::uint8_t> validity(cloud.validity().begin(),
                                     cloud.validity().end());
  if (cloud.shape()) {
    return PointCloud(std::move(points), std::move(validity), *cloud.shape());
  }
  return PointCloud(std::move(points), std::move(validity));
}

}  // namespace pnas3d
