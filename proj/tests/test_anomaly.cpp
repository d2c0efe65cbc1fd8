#include <random>

#include "doctest.h"
#include "pnas3d/anomaly.hpp"
#include "pnas3d/error.hpp"
#include "pnas3d/fixtures.hpp"
#include "pnas3d/profiles.hpp"
#include "support/oracles.hpp"

using namespace pnas3d;

namespace {

AnomalyParams medium() { return *find_profile("medium"); }

const PointCloud& plane_fixture() {
  static const PointCloud cloud = fixtures::plane(100, 100);
  return cloud;
}

}  // namespace

TEST_CASE("mask_points uses a strict absolute-value rule") {
  const std::vector<double> nu = {0.7, -0.7, 0.6, -0.6, 0.0, 1.0};
  CHECK(mask_points(nu, 0.6) == std::vector<std::uint8_t>{1, 1, 0, 0, 0, 1});
}

TEST_CASE("mask_points with a near-one threshold only keeps extremes") {
  const std::vector<double> nu = {1.0, -1.0, 0.999999, 0.3};
  CHECK(mask_points(nu, 1.0 - 1e-9) == std::vector<std::uint8_t>{1, 1, 0, 0});
}

TEST_CASE("adapt_threshold worked example") {
  std::vector<double> nu;
  for (int i = 1; i <= 10; ++i) nu.push_back(i / 10.0);
  const double t = adapt_threshold(nu, 0.5, 0.2);
  CHECK(t == 0.8);
  CHECK(oracle::brute_force_threshold(nu, 0.5, 0.2) == 0.8);
  CHECK(oracle::count_above(nu, t) == 2);
  // Initial mask already small enough: unchanged.
  CHECK(adapt_threshold(nu, 0.95, 0.2) == 0.95);
}

TEST_CASE("adapt_threshold with all magnitudes equal masks nothing") {
  const std::vector<double> nu = {0.9, -0.9, 0.9, 0.9, -0.9};
  const double t = adapt_threshold(nu, 0.5, 0.3);
  CHECK(t == 0.9);
  CHECK(oracle::count_above(nu, t) == 0);
}

TEST_CASE("adapt_threshold agrees with the brute-force scan") {
  std::mt19937_64 rng(20);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> ratio(0.01, 0.9);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> nu(1 + rng() % 300);
    for (auto& v : nu) v = u(rng);
    // Some repeated values to exercise ties.
    if (trial % 3 == 0) {
      for (std::size_t i = 0; i + 1 < nu.size(); i += 2) nu[i + 1] = -nu[i];
    }
    const double tau = std::uniform_real_distribution<double>(0.05, 0.95)(rng);
    const double rho = ratio(rng);
    const double t = adapt_threshold(nu, tau, rho);
    CHECK(t == oracle::brute_force_threshold(nu, tau, rho));
    CHECK(static_cast<double>(oracle::count_above(nu, t)) <= rho * nu.size() + 1e-9);
  }
}

TEST_CASE("local_normalize examples") {
  const std::vector<double> nu = {0.8, 1.0, -1.0, 0.3};
  const auto mask = mask_points(nu, 0.6);
  const auto out = local_normalize(nu, mask, 0.6);
  CHECK(out[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(out[1] == 1.0);
  CHECK(out[2] == -1.0);
  CHECK(out[3] == 0.0);

  const double tau = 0.6;
  const double just_above = tau + 0.005 * (1.0 - tau);
  const std::vector<double> edge = {just_above, -just_above};
  const auto small = local_normalize(edge, mask_points(edge, tau), tau);
  CHECK(small[0] > 0.0);
  CHECK(small[0] < 0.01);
  CHECK(small[1] < 0.0);
  CHECK(small[1] > -0.01);
}

TEST_CASE("local_normalize refuses tau >= 1") {
  const std::vector<double> nu = {0.5};
  const std::vector<std::uint8_t> mask = {0};
  try {
    local_normalize(nu, mask, 1.0);
    FAIL("expected InvalidThreshold");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidThreshold);
  }
}

TEST_CASE("displace moves along the normal by nu_hat * alpha") {
  const std::vector<Vec3> p = {Vec3(1, 2, 3), Vec3(1, 2, 3), Vec3(4, 5, 6)};
  const std::vector<Vec3> n = {Vec3(0, 0, 1), Vec3(0, 0, 1), Vec3(1, 0, 0)};
  const auto out = displace(p, n, std::vector<double>{1.0, -1.0, 0.0}, 0.05);
  CHECK(out[0] == Vec3(1, 2, 3.05));
  CHECK(out[1] == Vec3(1, 2, 2.95));
  CHECK(out[2] == p[2]);
  CHECK(displace(p, n, std::vector<double>{1.0, -0.3, 0.7}, 0.0) == p);
}

TEST_CASE("anomaly parameters are validated") {
  auto field_of = [](const AnomalyParams& p, bool zero_ok = false) {
    try {
      p.validate(zero_ok);
    } catch (const Error& e) {
      return e.field();
    }
    return std::string("ok");
  };
  AnomalyParams p = medium();
  CHECK(field_of(p) == "ok");
  p.threshold = 1.5;
  CHECK(field_of(p) == "threshold");
  p = medium();
  p.mask_ratio = 0.0;
  CHECK(field_of(p) == "mask_ratio");
  p = medium();
  p.strength = 0.0;
  CHECK(field_of(p) == "strength");
  CHECK(field_of(p, true) == "ok");
  p = medium();
  p.knn = 2;
  CHECK(field_of(p) == "knn");
  p = medium();
  p.grid_res = 1;
  CHECK(field_of(p) == "grid_res");
}

TEST_CASE("synthesize on the plane with the medium profile") {
  const PointCloud& cloud = plane_fixture();
  const AnomalyResult r = synthesize(cloud, medium(), 7);
  const std::size_t masked = r.masked_count();
  CHECK(masked > 0);
  CHECK(static_cast<double>(masked) / 10000.0 <= 0.05 + 1.0 / 10000.0);
  CHECK(r.max_displacement() <= 0.05 + 1e-9);
  CHECK(r.effective_threshold >= 0.6);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3 d = r.augmented.points()[i] - cloud.points()[i];
    if (!r.mask[i]) {
      CHECK(r.augmented.points()[i] == cloud.points()[i]);
      CHECK(r.signed_magnitude[i] == 0.0);
      continue;
    }
    CHECK(std::abs(d.normalized().dot(Vec3(0, 0, 1))) >= std::cos(5.0 * M_PI / 180.0));
    CHECK(std::abs(d.norm() - std::abs(r.signed_magnitude[i])) <= 1e-9);
    CHECK(std::abs(r.signed_magnitude[i]) <= 0.05);
    // Sign convention: positive magnitude moves along +normal.
    CHECK((r.signed_magnitude[i] > 0) == (d.dot(r.normals[i]) > 0));
    // Direction parallel to the stored normal.
    const double cross = d.normalized().cross(r.normals[i]).norm();
    CHECK(cross <= 1e-9);
    // Boundary fade.
    const double tau = r.effective_threshold;
    CHECK(std::abs(r.signed_magnitude[i]) <=
          0.05 * (std::abs(r.noise[i]) - tau) / (1.0 - tau) + 1e-12);
  }
}

TEST_CASE("a threshold above every sample leaves the cloud untouched") {
  AnomalyParams p = medium();
  p.threshold = 1.0 - 1e-12;
  const AnomalyResult r = synthesize(plane_fixture(), p, 7, {.disable_adaptation = true});
  CHECK(r.masked_count() == 0);
  CHECK(r.augmented == plane_fixture());
}

TEST_CASE("zero strength is an identity only through the harness flag") {
  AnomalyParams p = medium();
  p.strength = 0.0;
  CHECK_THROWS_AS(synthesize(plane_fixture(), p, 1), Error);
  const AnomalyResult r = synthesize(plane_fixture(), p, 1, {.allow_zero_strength = true});
  CHECK(r.augmented == plane_fixture());
  CHECK(r.masked_count() > 0);
}

TEST_CASE("synthesize is deterministic and seed-sensitive") {
  const AnomalyResult a = synthesize(plane_fixture(), medium(), 7);
  const AnomalyResult b = synthesize(plane_fixture(), medium(), 7);
  CHECK(a.augmented == b.augmented);
  CHECK(a.mask == b.mask);
  CHECK(a.signed_magnitude == b.signed_magnitude);
  CHECK(a.effective_threshold == b.effective_threshold);

  int differing = 0;
  const auto base = synthesize(plane_fixture(), medium(), 100).mask;
  for (std::uint64_t seed : {101ULL, 102ULL, 103ULL}) {
    if (synthesize(plane_fixture(), medium(), seed).mask != base) ++differing;
  }
  CHECK(differing >= 2);
}

TEST_CASE("displacement scales linearly with strength") {
  AnomalyParams p = medium();
  p.strength = 0.01;
  const AnomalyResult low = synthesize(plane_fixture(), p, 9);
  p.strength = 0.05;
  const AnomalyResult high = synthesize(plane_fixture(), p, 9);
  CHECK(low.mask == high.mask);
  for (std::size_t i = 0; i < plane_fixture().size(); ++i) {
    const Vec3 d_low = low.augmented.points()[i] - plane_fixture().points()[i];
    const Vec3 d_high = high.augmented.points()[i] - plane_fixture().points()[i];
    CHECK((d_high - 5.0 * d_low).norm() <= 1e-12);
  }
}

TEST_CASE("invalid points are never touched or masked") {
  std::vector<Vec3> pts(plane_fixture().points().begin(), plane_fixture().points().end());
  for (std::size_t i = 0; i < pts.size(); i += 7) pts[i] = Vec3::Zero();
  const auto cloud = PointCloud::from_raster(pts, RasterShape{100, 100});
  const AnomalyResult r = synthesize(cloud, medium(), 3);
  const std::size_t valid = cloud.valid_count();
  CHECK(static_cast<double>(r.masked_count()) <= 0.05 * valid + 1.0);
  for (std::size_t i = 0; i < pts.size(); i += 7) {
    CHECK(r.mask[i] == 0);
    CHECK(r.augmented.points()[i] == Vec3::Zero());
  }
  CHECK(r.augmented.shape() == cloud.shape());
}

TEST_CASE("synthesize errors name their stage") {
  const PointCloud tiny({Vec3(0, 0, 1), Vec3(1, 0, 1), Vec3(0, 1, 1), Vec3(1, 1, 1.2)});
  try {
    synthesize(tiny, medium(), 1);
    FAIL("expected TooFewPoints");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::TooFewPoints);
    CHECK(e.stage() == "synthesize");
  }
  std::vector<Vec3> line;
  for (int i = 0; i < 50; ++i) line.emplace_back(i, 0, 1);
  try {
    synthesize(PointCloud(line), medium(), 1);
    FAIL("expected DegenerateGeometry");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateGeometry);
    CHECK(e.stage() == "parameterize");
  }
  AnomalyParams bad = medium();
  bad.threshold = 1.5;
  try {
    synthesize(plane_fixture(), bad, 1);
    FAIL("expected InvalidParameter");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidParameter);
    CHECK(e.field() == "threshold");
    CHECK(std::string(e.what()).find("validate") != std::string::npos);
  }
}

TEST_CASE("built-in profiles carry the published values") {
  const auto pronounced = *find_profile("pronounced");
  CHECK(pronounced.noise.scale == 1.0);
  CHECK(pronounced.noise.octaves == 1);
  CHECK(pronounced.noise.persistence == 0.7);
  CHECK(pronounced.noise.lacunarity == 2.0);
  CHECK(pronounced.threshold == 0.5);
  CHECK(pronounced.mask_ratio == 0.03);
  CHECK(pronounced.grid_res == 64);
  CHECK(pronounced.strength == 0.1);
  const auto m = *find_profile("medium");
  CHECK((m.noise.scale == 2.0 && m.noise.octaves == 2 && m.noise.persistence == 0.5 &&
         m.noise.lacunarity == 2.0 && m.threshold == 0.6 && m.mask_ratio == 0.05 &&
         m.grid_res == 64 && m.strength == 0.05));
  const auto s = *find_profile("subtle");
  CHECK((s.noise.scale == 3.0 && s.noise.octaves == 3 && s.noise.persistence == 0.4 &&
         s.noise.lacunarity == 2.0 && s.threshold == 0.6 && s.mask_ratio == 0.08 &&
         s.grid_res == 64 && s.strength == 0.02));
  CHECK_FALSE(find_profile("extreme").has_value());
  const auto g = grid_search_defaults();
  CHECK((g.noise.persistence == 0.5 && g.noise.lacunarity == 2.0 && g.threshold == 0.6 &&
         g.mask_ratio == 0.05 && g.strength == 0.02 && g.grid_res == 64));
}
