#include <random>
#include <set>

#include <Eigen/Eigenvalues>

#include "doctest.h"
#include "pnas3d/error.hpp"
#include "pnas3d/fixtures.hpp"
#include "pnas3d/normals.hpp"
#include "pnas3d/surface_param.hpp"
#include "support/oracles.hpp"

using namespace pnas3d;

namespace {

double angle_deg(const Vec3& a, const Vec3& b) {
  return std::acos(std::clamp(a.normalized().dot(b.normalized()), -1.0, 1.0)) * 180.0 / M_PI;
}

std::vector<Vec3> coords_of(const PointCloud& c) { return {c.points().begin(), c.points().end()}; }

}  // namespace

TEST_CASE("knn on collinear points") {
  std::vector<Vec3> pts;
  for (int i = 0; i < 5; ++i) pts.emplace_back(i, 0, 0);
  const KdTree tree(pts);
  CHECK(tree.nearest(pts[0], 2, 0) == std::vector<std::size_t>{1, 2});
  const auto center = tree.nearest(pts[2], 2, 2);
  CHECK(std::set<std::size_t>(center.begin(), center.end()) == std::set<std::size_t>{1, 3});
  // Equal distances resolve to the lower index.
  CHECK(tree.nearest(pts[2], 3, 2) == std::vector<std::size_t>{1, 3, 0});
}

TEST_CASE("knn matches brute force on random clouds") {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 10; ++trial) {
    const auto pts = oracle::random_points(rng, 200);
    CHECK(knn(pts, 10) == oracle::brute_force_knn(pts, 10));
  }
}

TEST_CASE("knn matches brute force on tie-heavy lattices") {
  const auto plane = coords_of(fixtures::plane(12, 15));
  CHECK(knn(plane, 10) == oracle::brute_force_knn(plane, 10));
  // Duplicated points.
  std::vector<Vec3> dup;
  for (int i = 0; i < 40; ++i) dup.emplace_back(i % 4, (i / 4) % 3, 0.0);
  CHECK(knn(dup, 6) == oracle::brute_force_knn(dup, 6));
}

TEST_CASE("knn preconditions") {
  std::vector<Vec3> pts(5, Vec3::Zero());
  for (int i = 0; i < 5; ++i) pts[static_cast<std::size_t>(i)] = Vec3(i, i * i, 0);
  try {
    knn(pts, 5);
    FAIL("expected TooFewPoints");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::TooFewPoints);
  }
  CHECK_THROWS_AS(knn(pts, 2), Error);
  CHECK(knn(pts, 4).size() == 5);
}

TEST_CASE("planar cloud normals all equal the plane normal") {
  const auto pts = coords_of(fixtures::plane(20, 20, 1.0, 0.5));
  const NormalField nf = estimate_normals(pts, knn(pts, 10), Vec3(0, 0, 1));
  CHECK(nf.degenerate_count == 0);
  CHECK(nf.k == 10);
  for (const auto& n : nf.normals) CHECK((n - Vec3(0, 0, 1)).norm() < 1e-9);
}

TEST_CASE("sphere-cap normals follow the radial direction") {
  const auto pts = coords_of(fixtures::sphere_cap(4000, 1.0, 45.0, 0.002, 3));
  const SurfaceParam sp = parameterize(pts);
  const NormalField nf = estimate_normals(pts, knn(pts, 10), sp.normal_axis);
  std::size_t within = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (angle_deg(nf.normals[i], pts[i]) <= 5.0) ++within;
  }
  CHECK(static_cast<double>(within) >= 0.99 * static_cast<double>(pts.size()));
}

TEST_CASE("collinear neighborhoods fall back to the normal axis") {
  // A long line of points far from a small planar patch: line points only see
  // each other.
  std::vector<Vec3> pts;
  for (int i = 0; i < 30; ++i) pts.emplace_back(100.0 + i, 0, 0);
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) pts.emplace_back(i, j, 0);
  }
  const Vec3 axis(0, 0, 1);
  const NormalField nf = estimate_normals(pts, knn(pts, 4), axis);
  CHECK(nf.degenerate[0] == 1);
  CHECK(nf.normals[0] == axis);
  CHECK(nf.degenerate[40] == 0);
  CHECK(nf.degenerate_count >= 30);
}

TEST_CASE("normals satisfy the eigen equation and the orientation rule") {
  std::mt19937_64 rng(12);
  auto pts = coords_of(fixtures::sphere_cap(1500, 2.0, 60.0, 0.01, 9));
  const Vec3 axis = parameterize(pts).normal_axis;
  const auto neighbors = knn(pts, 10);
  const NormalField nf = estimate_normals(pts, neighbors, axis);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    CHECK(std::abs(nf.normals[i].norm() - 1.0) < 1e-9);
    CHECK(nf.normals[i].dot(axis) >= 0.0);
    Vec3 mean = Vec3::Zero();
    for (auto j : neighbors[i]) mean += pts[j];
    mean /= 10.0;
    Eigen::Matrix3d c = Eigen::Matrix3d::Zero();
    for (auto j : neighbors[i]) c += (pts[j] - mean) * (pts[j] - mean).transpose();
    const double lambda_min = Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(c).eigenvalues()[0];
    CHECK((c * nf.normals[i] - lambda_min * nf.normals[i]).norm() <= 1e-9 * c.trace());
  }
}

TEST_CASE("normals rotate with the cloud") {
  std::mt19937_64 rng(14);
  const auto pts = coords_of(fixtures::sphere_cap(1200, 1.0, 40.0, 0.01, 4));
  const Vec3 axis = parameterize(pts).normal_axis;
  const NormalField ref = estimate_normals(pts, knn(pts, 10), axis);
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::Matrix3d rot = oracle::random_rotation(rng);
    std::vector<Vec3> rotated(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) rotated[i] = rot * pts[i];
    const NormalField nf = estimate_normals(rotated, knn(rotated, 10), rot * axis);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      CHECK((nf.normals[i] - rot * ref.normals[i]).norm() < 1e-7);
    }
  }
}
