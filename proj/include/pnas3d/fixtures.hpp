#pragma once

#include <cstddef>
#include <cstdint>

#include "pnas3d/point_cloud.hpp"

namespace pnas3d::fixtures {

/// Organized H x W raster of a flat square of side `extent`, centered on the
/// z axis at height `z` (no exact zero triples as long as z != 0).
PointCloud plane(std::size_t height = 100, std::size_t width = 100, double extent = 1.0,
                 double z = 1.0);

/// Unorganized Fibonacci-lattice samples of the cap of a sphere of `radius`
/// centered at the origin, within `max_polar_deg` of the +z pole. `jitter`
/// (radians, seeded) breaks the lattice's exact symmetries.
PointCloud sphere_cap(std::size_t count = 5000, double radius = 1.0,
                      double max_polar_deg = 45.0, double jitter = 0.0,
                      std::uint64_t seed = 1);

}  // namespace pnas3d::fixtures
