#include "pnas3d/normals.hpp"

#include <algorithm>
#include <queue>
#include <string>
#include <utility>

#include <Eigen/Eigenvalues>

#include "pnas3d/error.hpp"

namespace pnas3d {

namespace {

constexpr std::uint32_t kLeafSize = 16;

inline double squared_distance(const Vec3& a, const Vec3& b) noexcept {
  const double dx = a.x() - b.x();
  const double dy = a.y() - b.y();
  const double dz = a.z() - b.z();
  return dx * dx + dy * dy + dz * dz;
}

// (distance^2, index); lexicographic order gives the lower-index tie break.
using Candidate = std::pair<double, std::size_t>;

}  // namespace

KdTree::KdTree(std::span<const Vec3> points) : points_(points) {
  order_.resize(points.size());
  for (std::uint32_t i = 0; i < order_.size(); ++i) order_[i] = i;
  nodes_.reserve(2 * (points.size() / kLeafSize + 1));
  if (!points.empty()) build(0, static_cast<std::uint32_t>(points.size()), 0);
}

std::int32_t KdTree::build(std::uint32_t begin, std::uint32_t end, int depth) {
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back(Node{begin, end});
  if (end - begin <= kLeafSize) return id;

  // Split on the axis of largest extent.
  Vec3 lo = points_[order_[begin]];
  Vec3 hi = lo;
  for (std::uint32_t i = begin; i < end; ++i) {
    lo = lo.cwiseMin(points_[order_[i]]);
    hi = hi.cwiseMax(points_[order_[i]]);
  }
  int axis = 0;
  (hi - lo).maxCoeff(&axis);
  if (hi[axis] == lo[axis]) return id;  // all coincident

  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid,
                   order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) {
                     return points_[a][axis] < points_[b][axis];
                   });
  const double split = points_[order_[mid]][axis];

  nodes_[static_cast<std::size_t>(id)].axis = axis;
  nodes_[static_cast<std::size_t>(id)].split = split;
  const std::int32_t left = build(begin, mid, depth + 1);
  const std::int32_t right = build(mid, end, depth + 1);
  nodes_[static_cast<std::size_t>(id)].left = left;
  nodes_[static_cast<std::size_t>(id)].right = right;
  return id;
}

std::vector<std::size_t> KdTree::nearest(const Vec3& query, std::size_t k,
                                         std::size_t exclude) const {
  std::priority_queue<Candidate> best;  // max-heap: worst candidate on top
  if (k == 0 || nodes_.empty()) return {};

  auto consider = [&](std::size_t idx) {
    if (idx == exclude) return;
    const Candidate c{squared_distance(query, points_[idx]), idx};
    if (best.size() < k) {
      best.push(c);
    } else if (c < best.top()) {
      best.pop();
      best.push(c);
    }
  };

  // Left holds coordinates <= split, right holds >= split, so a point on the
  // far side is at least (query - split)^2 away along the split axis.
  auto visit = [&](auto&& self, std::int32_t id) -> void {
    const Node& node = nodes_[static_cast<std::size_t>(id)];
    if (node.left < 0) {
      for (std::uint32_t i = node.begin; i < node.end; ++i) consider(order_[i]);
      return;
    }
    const double diff = query[node.axis] - node.split;
    const std::int32_t near = diff <= 0.0 ? node.left : node.right;
    const std::int32_t far = diff <= 0.0 ? node.right : node.left;
    self(self, near);
    if (best.size() < k || diff * diff <= best.top().first) self(self, far);
  };
  visit(visit, 0);

  std::vector<std::size_t> out(best.size());
  for (std::size_t i = out.size(); i-- > 0;) {
    out[i] = best.top().second;
    best.pop();
  }
  return out;
}

NeighborLists knn(std::span<const Vec3> coords, int k) {
  if (k < 3) {
    throw Error(ErrorCode::InvalidParameter, "knn", "knn violates k >= 3",
                "knn");
  }
  if (coords.size() <= static_cast<std::size_t>(k)) {
    throw Error(ErrorCode::TooFewPoints, "knn",
                "need more than k=" + std::to_string(k) + " valid points, got " +
                    std::to_string(coords.size()));
  }
  const KdTree tree(coords);
  NeighborLists lists(coords.size());
  for (std::size_t i = 0; i < coords.size(); ++i) {
    lists[i] = tree.nearest(coords[i], static_cast<std::size_t>(k), i);
  }
  return lists;
}

NormalField estimate_normals(std::span<const Vec3> coords,
                             const NeighborLists& neighbors,
                             const Vec3& normal_axis) {
  if (neighbors.size() != coords.size()) {
    throw Error(ErrorCode::ShapeMismatch, "estimate_normals",
                "neighbor lists do not match point count");
  }
  NormalField field;
  field.k = neighbors.empty() ? 0 : static_cast<int>(neighbors.front().size());
  field.normals.resize(coords.size());
  field.degenerate.assign(coords.size(), 0);

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver;
  for (std::size_t i = 0; i < coords.size(); ++i) {
    const auto& nbrs = neighbors[i];
    if (static_cast<int>(nbrs.size()) != field.k) {
      throw Error(ErrorCode::ShapeMismatch, "estimate_normals",
                  "neighbor lists must all have size k");
    }
    Vec3 mean = Vec3::Zero();
    for (std::size_t j : nbrs) mean += coords[j];
    mean /= static_cast<double>(nbrs.size());

    Eigen::Matrix3d scatter = Eigen::Matrix3d::Zero();
    for (std::size_t j : nbrs) {
      const Vec3 d = coords[j] - mean;
      scatter.noalias() += d * d.transpose();
    }

    solver.compute(scatter);
    const Vec3 eigenvalues = solver.eigenvalues();  // ascending
    const double trace = scatter.trace();
    if (solver.info() != Eigen::Success ||
        (eigenvalues[0] <= 1e-12 * trace && eigenvalues[1] <= 1e-12 * trace)) {
      field.normals[i] = normal_axis;
      field.degenerate[i] = 1;
      ++field.degenerate_count;
      continue;
    }
    Vec3 n = solver.eigenvectors().col(0).normalized();
    if (n.dot(normal_axis) < 0.0) n = -n;
    field.normals[i] = n;
  }
  return field;
}

}  // namespace pnas3d
