#include "pnas3d/fixtures.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include "pnas3d/hash.hpp"

namespace pnas3d::fixtures {

PointCloud plane(std::size_t height, std::size_t width, double extent, double z) {
  std::vector<Vec3> points;
  points.reserve(height * width);
  auto coord = [extent](std::size_t i, std::size_t n) {
    return n > 1 ? extent * (static_cast<double>(i) / static_cast<double>(n - 1) - 0.5) : 0.0;
  };
  for (std::size_t row = 0; row < height; ++row) {
    for (std::size_t col = 0; col < width; ++col) {
      points.emplace_back(coord(col, width), coord(row, height), z);
    }
  }
  return PointCloud::from_raster(std::move(points), RasterShape{height, width});
}

PointCloud sphere_cap(std::size_t count, double radius, double max_polar_deg, double jitter,
                      std::uint64_t seed) {
  const double cos_max = std::cos(max_polar_deg * std::numbers::pi / 180.0);
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  auto unit = [seed](std::uint64_t k) {
    return static_cast<double>(mix64(seed + k) >> 11) * 0x1.0p-53 - 0.5;
  };
  std::vector<Vec3> points;
  points.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    // Uniform in cos(theta) over [cos_max, 1] gives uniform area density.
    const double t = (static_cast<double>(i) + 0.5) / static_cast<double>(count);
    double theta = std::acos(1.0 - t * (1.0 - cos_max));
    double phi = golden * static_cast<double>(i);
    theta += jitter * unit(2 * i);
    phi += jitter * unit(2 * i + 1);
    theta = std::abs(theta);
    points.emplace_back(radius * std::sin(theta) * std::cos(phi),
                        radius * std::sin(theta) * std::sin(phi), radius * std::cos(theta));
  }
  return PointCloud(std::move(points));
}

}  // namespace pnas3d::fixtures
