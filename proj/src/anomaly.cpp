#include "pnas3d/anomaly.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "pnas3d/error.hpp"
#include "pnas3d/surface_param.hpp"

namespace pnas3d {

void AnomalyParams::validate(bool allow_zero_strength) const {
  auto fail = [](const char* field, const char* rule) {
    throw Error(ErrorCode::InvalidParameter, "parameters",
                std::string(field) + " violates " + rule, field);
  };
  noise.validate();
  if (!(threshold > 0.0 && threshold < 1.0)) fail("threshold", "0 < tau < 1");
  if (!(mask_ratio > 0.0 && mask_ratio < 1.0)) {
    fail("mask_ratio", "0 < rho < 1");
  }
  if (allow_zero_strength) {
    if (!(strength >= 0.0) || !std::isfinite(strength)) {
      fail("strength", "alpha >= 0");
    }
  } else if (!(strength > 0.0) || !std::isfinite(strength)) {
    fail("strength", "alpha > 0");
  }
  if (grid_res < 2) fail("grid_res", "r >= 2");
  if (knn < 3) fail("knn", "k >= 3");
}

std::size_t AnomalyResult::masked_count() const noexcept {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), 1));
}

double AnomalyResult::max_displacement() const noexcept {
  double out = 0.0;
  for (double m : signed_magnitude) out = std::max(out, std::abs(m));
  return out;
}

std::vector<std::uint8_t> mask_points(std::span<const double> nu, double tau) {
  std::vector<std::uint8_t> mask(nu.size());
  std::transform(nu.begin(), nu.end(), mask.begin(),
                 [tau](double v) -> std::uint8_t { return std::abs(v) > tau ? 1 : 0; });
  return mask;
}

double adapt_threshold(std::span<const double> nu, double tau, double rho) {
  if (nu.empty()) return tau;
  const auto exceeding = static_cast<std::size_t>(std::count_if(
      nu.begin(), nu.end(), [tau](double v) { return std::abs(v) > tau; }));
  const auto m = static_cast<double>(nu.size());
  if (static_cast<double>(exceeding) / m <= rho) return tau;

  const auto keep = static_cast<std::size_t>(std::floor(rho * m));
  std::vector<double> magnitudes(nu.size());
  std::transform(nu.begin(), nu.end(), magnitudes.begin(),
                 [](double v) { return std::abs(v); });
  // keep < M because rho < 1, so the (keep+1)-th largest exists.
  std::nth_element(magnitudes.begin(),
                   magnitudes.begin() + static_cast<std::ptrdiff_t>(keep),
                   magnitudes.end(), std::greater<>());
  return magnitudes[keep];
}

std::vector<double> local_normalize(std::span<const double> nu,
                                    std::span<const std::uint8_t> mask,
                                    double tau) {
  if (!(tau < 1.0)) {
    throw Error(ErrorCode::InvalidThreshold, "local_normalize",
                "threshold " + std::to_string(tau) + " leaves no room below 1");
  }
  if (mask.size() != nu.size()) {
    throw Error(ErrorCode::ShapeMismatch, "local_normalize",
                "mask and noise lengths differ");
  }
  std::vector<double> out(nu.size(), 0.0);
  const double span = 1.0 - tau;
  for (std::size_t i = 0; i < nu.size(); ++i) {
    if (!mask[i]) continue;
    const double magnitude = (std::abs(nu[i]) - tau) / span;
    out[i] = nu[i] < 0.0 ? -magnitude : magnitude;
  }
  return out;
}

std::vector<Vec3> displace(std::span<const Vec3> coords,
                           std::span<const Vec3> normals,
                           std::span<const double> nu_hat, double alpha) {
  if (normals.size() != coords.size() || nu_hat.size() != coords.size()) {
    throw Error(ErrorCode::ShapeMismatch, "displace",
                "coords, normals and noise must share one length");
  }
  std::vector<Vec3> out(coords.begin(), coords.end());
  for (std::size_t i = 0; i < coords.size(); ++i) {
    if (nu_hat[i] == 0.0) continue;
    out[i] = coords[i] + (nu_hat[i] * alpha) * normals[i];
  }
  return out;
}

namespace {

template <typename F>
auto run_stage(const char* stage, F&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    if (e.stage() == stage) throw;
    throw e.with_stage(std::string(stage) + "/" + e.stage());
  }
}

}  // namespace

AnomalyResult synthesize(const PointCloud& cloud, const AnomalyParams& params,
                         std::uint64_t seed, const SynthesisOptions& options) {
  AnomalyParams p = params;
  p.noise.seed = seed;
  run_stage("validate", [&] { p.validate(options.allow_zero_strength); return 0; });

  const ValidSubset subset = run_stage("extract_valid", [&] { return extract_valid(cloud); });
  if (subset.size() <= static_cast<std::size_t>(p.knn)) {
    throw Error(ErrorCode::TooFewPoints, "synthesize",
                "need more than k=" + std::to_string(p.knn) +
                    " valid points, got " + std::to_string(subset.size()));
  }
  const SurfaceParam chart = run_stage("parameterize", [&] { return parameterize(subset); });
  const NoiseGrid grid = run_stage("build_grid", [&] {
    return build_grid(chart.bounds, p.grid_res, p.noise, p.coordinate_mode);
  });

  const std::size_t m = subset.size();
  std::vector<double> nu(m);
  for (std::size_t i = 0; i < m; ++i) nu[i] = sample(grid, chart.coords2d[i]);

  const NormalField normals = run_stage("estimate_normals", [&] {
    const NeighborLists neighbors = knn(subset.coords, p.knn);
    return estimate_normals(subset.coords, neighbors, chart.normal_axis);
  });

  double tau = p.threshold;
  if (!options.disable_adaptation) tau = adapt_threshold(nu, tau, p.mask_ratio);
  const std::vector<std::uint8_t> mask = mask_points(nu, tau);

  // A self-adjusted tau can reach 1 only when nothing lies strictly above it.
  std::vector<double> nu_hat(m, 0.0);
  if (tau < 1.0) {
    nu_hat = run_stage("local_normalize", [&] { return local_normalize(nu, mask, tau); });
  }
  const std::vector<Vec3> moved = displace(subset.coords, normals.normals, nu_hat, p.strength);

  AnomalyResult result{
      .augmented = reintegrate(cloud, subset, moved),
      .mask = std::vector<std::uint8_t>(cloud.size(), 0),
      .signed_magnitude = std::vector<double>(cloud.size(), 0.0),
      .normals = std::vector<Vec3>(cloud.size(), Vec3::Zero()),
      .noise = std::vector<double>(cloud.size(), 0.0),
      .effective_threshold = tau,
      .warnings = {.constant_field = grid.constant_field,
                   .degenerate_neighborhoods = normals.degenerate_count,
                   .threshold_adjusted = tau != p.threshold},
  };
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t dst = subset.index_map[i];
    result.mask[dst] = mask[i];
    result.signed_magnitude[dst] = nu_hat[i] * p.strength;
    result.normals[dst] = normals.normals[i];
    result.noise[dst] = nu[i];
  }
  return result;
}

}  // namespace pnas3d
