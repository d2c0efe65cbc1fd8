#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace pnas3d {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

/// H x W raster layout of a depth-sensor cloud, stored row-major.
struct RasterShape {
  std::size_t height = 0;
  std::size_t width = 0;

  friend bool operator==(const RasterShape&, const RasterShape&) = default;
};

/// N points with an optional organized layout and per-point validity.
/// Invalid points keep their stored coordinates but take no part in any
/// geometric computation.
class PointCloud {
 public:
  /// Unorganized cloud, all points valid.
  explicit PointCloud(std::vector<Vec3> points);
  /// Unorganized cloud with explicit validity flags.
  PointCloud(std::vector<Vec3> points, std::vector<std::uint8_t> validity);
  /// Organized cloud. Validity flags must be supplied by the caller; use
  /// from_raster() to apply the zero-triple rule.
  PointCloud(std::vector<Vec3> points, std::vector<std::uint8_t> validity,
             RasterShape shape);

  /// Organized cloud where exact (0,0,0) triples mark missing sensor returns.
  static PointCloud from_raster(std::vector<Vec3> points, RasterShape shape);

  std::size_t size() const noexcept { return points_.size(); }
  std::span<const Vec3> points() const noexcept { return points_; }
  std::span<const std::uint8_t> validity() const noexcept { return validity_; }
  bool is_valid(std::size_t i) const { return validity_[i] != 0; }
  std::size_t valid_count() const noexcept;

  bool organized() const noexcept { return shape_.has_value(); }
  const std::optional<RasterShape>& shape() const noexcept { return shape_; }

  friend bool operator==(const PointCloud& a, const PointCloud& b);

 private:
  void check() const;

  std::vector<Vec3> points_;
  std::vector<std::uint8_t> validity_;
  std::optional<RasterShape> shape_;
};

/// The valid points of a parent cloud and where each came from.
struct ValidSubset {
  std::vector<Vec3> coords;
  std::vector<std::size_t> index_map;

  std::size_t size() const noexcept { return coords.size(); }
};

/// Valid points in original index order. Throws EmptyValidSet if none.
ValidSubset extract_valid(const PointCloud& cloud);

/// Writes `new_coords` back at the subset's parent indices; every other point
/// is copied unchanged. Throws ShapeMismatch if the row count differs.
PointCloud reintegrate(const PointCloud& cloud, const ValidSubset& subset,
                       std::span<const Vec3> new_coords);

/// True for an exact (0,0,0) triple (either sign of zero).
bool is_zero_triple(const Vec3& p) noexcept;

}  // namespace pnas3d
