#include <random>

#include <Eigen/Geometry>

#include "doctest.h"
#include "pnas3d/error.hpp"
#include "pnas3d/surface_param.hpp"
#include "support/oracles.hpp"

using namespace pnas3d;

namespace {

std::vector<Vec3> random_planar(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Vec3> pts(n);
  for (auto& p : pts) p = Vec3(2.0 * u(rng), u(rng), 0.0);
  return pts;
}

// Anisotropic so that the three singular values are well separated.
std::vector<Vec3> random_anisotropic(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Vec3> pts(n);
  for (auto& p : pts) p = Vec3(3.0 * u(rng), 1.5 * u(rng), 0.2 * u(rng));
  return pts;
}

void check_structure(const SurfaceParam& sp, std::span<const Vec3> pts) {
  CHECK(std::abs(sp.basis.col(0).norm() - 1.0) < 1e-9);
  CHECK(std::abs(sp.basis.col(1).norm() - 1.0) < 1e-9);
  CHECK(std::abs(sp.basis.col(0).dot(sp.basis.col(1))) < 1e-9);
  CHECK(std::abs(sp.normal_axis.dot(sp.basis.col(0))) < 1e-9);
  CHECK(std::abs(sp.normal_axis.dot(sp.basis.col(1))) < 1e-9);
  CHECK(std::abs(sp.normal_axis.norm() - 1.0) < 1e-9);

  Vec2 mean = Vec2::Zero();
  double magnitude = 0.0;
  for (const auto& q : sp.coords2d) {
    mean += q;
    magnitude = std::max(magnitude, q.cwiseAbs().maxCoeff());
  }
  mean /= static_cast<double>(sp.coords2d.size());
  CHECK(mean.norm() <= 1e-9 * std::max(1.0, magnitude));
  CHECK((sp.bounds.min.array() <= sp.bounds.max.array()).all());
  CHECK(sp.coords2d.size() == pts.size());

  for (int c = 0; c < 3; ++c) {
    const Vec3 v = c < 2 ? Vec3(sp.basis.col(c)) : sp.normal_axis;
    Eigen::Index arg;
    v.cwiseAbs().maxCoeff(&arg);
    CHECK(v[arg] > 0.0);
  }
}

}  // namespace

TEST_CASE("points on z=0 map isometrically and get a z normal axis") {
  std::mt19937_64 rng(3);
  const auto pts = random_planar(rng, 300);
  const SurfaceParam sp = parameterize(pts);
  check_structure(sp, pts);
  CHECK((sp.normal_axis - Vec3(0, 0, 1)).norm() < 1e-9);
  for (int t = 0; t < 500; ++t) {
    const std::size_t a = rng() % pts.size(), b = rng() % pts.size();
    CHECK(std::abs((pts[a] - pts[b]).norm() - (sp.coords2d[a] - sp.coords2d[b]).norm()) < 1e-9);
  }
}

TEST_CASE("unit square: equal singular values and the square up to rotation") {
  const std::vector<Vec3> pts = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(1, 1, 0)};
  const SurfaceParam sp = parameterize(pts);
  check_structure(sp, pts);
  CHECK((sp.centroid - Vec3(0.5, 0.5, 0)).norm() < 1e-15);
  // Centered matrix has P^T P = diag(1, 1, 0).
  CHECK(sp.singular_values[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(sp.singular_values[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(sp.singular_values[2]) < 1e-12);
  for (std::size_t a = 0; a < 4; ++a) {
    for (std::size_t b = 0; b < 4; ++b) {
      CHECK(std::abs((pts[a] - pts[b]).norm() - (sp.coords2d[a] - sp.coords2d[b]).norm()) < 1e-12);
    }
  }
}

TEST_CASE("rigid rotations leave 2D pairwise distances unchanged") {
  std::mt19937_64 rng(5);
  const auto base = random_anisotropic(rng, 400);
  const SurfaceParam ref = parameterize(base);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::Matrix3d rot = oracle::random_rotation(rng);
    std::vector<Vec3> rotated(base.size());
    for (std::size_t i = 0; i < base.size(); ++i) rotated[i] = rot * base[i];
    const SurfaceParam sp = parameterize(rotated);
    check_structure(sp, rotated);
    for (int t = 0; t < 200; ++t) {
      const std::size_t a = rng() % base.size(), b = rng() % base.size();
      CHECK(std::abs((ref.coords2d[a] - ref.coords2d[b]).norm() -
                     (sp.coords2d[a] - sp.coords2d[b]).norm()) < 1e-9);
    }
  }
}

TEST_CASE("planar inputs reconstruct exactly from the chart") {
  std::mt19937_64 rng(8);
  const Eigen::Matrix3d rot = oracle::random_rotation(rng);
  auto pts = random_planar(rng, 200);
  for (auto& p : pts) p = rot * p + Vec3(4, -2, 7);
  const SurfaceParam sp = parameterize(pts);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Vec3 back = sp.basis * sp.coords2d[i];
    CHECK((pts[i] - sp.centroid - back).norm() <= 1e-9);
  }
}

TEST_CASE("projection never stretches distances") {
  std::mt19937_64 rng(13);
  const auto pts = oracle::random_points(rng, 300);
  const SurfaceParam sp = parameterize(pts);
  for (int t = 0; t < 2000; ++t) {
    const std::size_t a = rng() % pts.size(), b = rng() % pts.size();
    CHECK((sp.coords2d[a] - sp.coords2d[b]).norm() <= (pts[a] - pts[b]).norm() + 1e-12);
  }
}

TEST_CASE("parameterize is bitwise deterministic") {
  std::mt19937_64 rng(21);
  const auto pts = oracle::random_points(rng, 500);
  const SurfaceParam a = parameterize(pts);
  const SurfaceParam b = parameterize(pts);
  CHECK(a.basis == b.basis);
  CHECK(a.normal_axis == b.normal_axis);
  CHECK(a.centroid == b.centroid);
  CHECK(std::memcmp(a.coords2d.data(), b.coords2d.data(), a.coords2d.size() * sizeof(Vec2)) == 0);
}

TEST_CASE("parameterize rejects too few and collinear points") {
  try {
    parameterize(std::vector<Vec3>{Vec3(0, 0, 0), Vec3(1, 1, 1)});
    FAIL("expected TooFewPoints");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::TooFewPoints);
  }
  std::vector<Vec3> line;
  for (int i = 0; i < 10; ++i) line.emplace_back(i, 2.0 * i, -i);
  try {
    parameterize(line);
    FAIL("expected DegenerateGeometry");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateGeometry);
    CHECK(e.stage() == "parameterize");
  }
  CHECK_THROWS_AS(parameterize(std::vector<Vec3>(5, Vec3(1, 2, 3))), Error);
}
