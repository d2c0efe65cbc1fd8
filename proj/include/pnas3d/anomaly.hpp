#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pnas3d/noise_field.hpp"
#include "pnas3d/normals.hpp"
#include "pnas3d/point_cloud.hpp"

namespace pnas3d {

struct AnomalyParams {
  NoiseParams noise;
  double threshold = 0.6;   // tau, initial cutoff on |nu|
  double mask_ratio = 0.05; // rho, upper bound on the displaced fraction
  double strength = 0.05;   // alpha, scene units
  int grid_res = 64;
  int knn = 10;
  CoordinateMode coordinate_mode = CoordinateMode::Normalized;

  /// Throws InvalidParameter naming the first field that breaks its bound.
  /// `allow_zero_strength` admits alpha == 0 for identity checks.
  void validate(bool allow_zero_strength = false) const;

  friend bool operator==(const AnomalyParams&, const AnomalyParams&) = default;
};

struct SynthesisWarnings {
  bool constant_field = false;
  std::size_t degenerate_neighborhoods = 0;
  bool threshold_adjusted = false;
};

struct AnomalyResult {
  PointCloud augmented;
  /// Length N_p; 0 for unmasked and invalid points.
  std::vector<std::uint8_t> mask;
  /// Length N_p; normalized noise times alpha, 0 where mask is 0.
  std::vector<double> signed_magnitude;
  /// Length N_p; estimated normals at valid points, zero at invalid ones.
  std::vector<Vec3> normals;
  /// Length N_p; interpolated noise value nu at valid points, 0 elsewhere.
  std::vector<double> noise;
  double effective_threshold = 0.0;
  SynthesisWarnings warnings;

  std::size_t masked_count() const noexcept;
  double max_displacement() const noexcept;
};

/// m_i = 1 iff |nu_i| > tau.
std::vector<std::uint8_t> mask_points(std::span<const double> nu, double tau);

/// Keeps tau when at most a fraction rho of |nu| exceeds it; otherwise
/// returns the (floor(rho*M)+1)-th largest |nu|, so that at most
/// floor(rho*M) values strictly exceed the result.
double adapt_threshold(std::span<const double> nu, double tau, double rho);

/// sign(nu) * (|nu| - tau) / (1 - tau) on masked points, 0 elsewhere.
/// Throws InvalidThreshold if tau >= 1.
std::vector<double> local_normalize(std::span<const double> nu,
                                    std::span<const std::uint8_t> mask,
                                    double tau);

/// p_i + nu_hat_i * alpha * n_i where nu_hat_i != 0; other rows copied as is.
std::vector<Vec3> displace(std::span<const Vec3> coords,
                           std::span<const Vec3> normals,
                           std::span<const double> nu_hat, double alpha);

struct SynthesisOptions {
  /// Admit alpha == 0; only meant for test harnesses.
  bool allow_zero_strength = false;
  /// Skip threshold self-adjustment and mask with tau as given.
  bool disable_adaptation = false;
};

/// The full pipeline: valid-point extraction, PCA chart, noise grid, per-point
/// sampling, normals on the original surface, adaptive mask, local
/// normalization, displacement along normals, reintegration.
///
/// The `seed` argument replaces params.noise.seed. Errors name the stage
/// they came from.
AnomalyResult synthesize(const PointCloud& cloud, const AnomalyParams& params,
                         std::uint64_t seed, const SynthesisOptions& options = {});

}  // namespace pnas3d
