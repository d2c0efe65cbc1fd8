#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "pnas3d/point_cloud.hpp"

namespace pnas3d {

/// Exact k-nearest-neighbor index over a fixed point set.
///
/// Neighbors are ordered by (squared distance, index), so ties always resolve
/// to the lower index. Queries never approximate.
class KdTree {
 public:
  explicit KdTree(std::span<const Vec3> points);

  /// The k nearest points to `query`, excluding index `exclude` (pass
  /// `npos` to keep every point). Closest first.
  std::vector<std::size_t> nearest(const Vec3& query, std::size_t k,
                                   std::size_t exclude = npos) const;

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
  struct Node {
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    int axis = 0;
    double split = 0.0;
  };

  std::int32_t build(std::uint32_t begin, std::uint32_t end, int depth);

  std::span<const Vec3> points_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

/// Row i lists the k nearest other points of point i, closest first.
using NeighborLists = std::vector<std::vector<std::size_t>>;

/// Exact k-NN for every point, self excluded. Throws TooFewPoints if
/// M <= k and InvalidParameter if k < 3.
NeighborLists knn(std::span<const Vec3> coords, int k);

struct NormalField {
  std::vector<Vec3> normals;
  /// 1 where the neighborhood was collinear and normal_axis was substituted.
  std::vector<std::uint8_t> degenerate;
  std::size_t degenerate_count = 0;
  int k = 0;
};

/// Smallest-eigenvalue eigenvector of each neighborhood's scatter matrix
/// (neighbors centered on their own mean), flipped into the half-space of
/// `normal_axis`.
NormalField estimate_normals(std::span<const Vec3> coords,
                             const NeighborLists& neighbors,
                             const Vec3& normal_axis);

}  // namespace pnas3d
