#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

#include "pnas3d/surface_param.hpp"

namespace pnas3d {

/// How grid nodes are fed to the noise function.
///   Normalized: the 2D bounds are mapped onto [0,1]^2 first, so `scale`
///               counts noise periods across the object.
///   Physical:   raw parameter-plane coordinates times `scale`.
enum class CoordinateMode { Normalized, Physical };

std::string_view to_string(CoordinateMode mode) noexcept;
/// Throws InvalidParameter (field "coordinate_mode") on anything else.
CoordinateMode parse_coordinate_mode(std::string_view text);

struct NoiseParams {
  double scale = 2.0;
  int octaves = 2;
  double persistence = 0.5;
  double lacunarity = 2.0;
  std::uint64_t seed = 0;

  /// s > 0, o >= 1, 0 < p <= 1, l >= 1; throws InvalidParameter naming the field.
  void validate() const;

  friend bool operator==(const NoiseParams&, const NoiseParams&) = default;
};

/// Single-octave improved Perlin gradient noise with a seeded permutation.
///
/// The 256-entry permutation is a Fisher-Yates shuffle of 0..255 driven by
/// mix64(seed + i * 0xD1B54A32D192ED03) for i = 255 down to 1. Corners pick
/// one of 8 unit gradients at 45 degree steps; interpolation uses the quintic
/// fade 6t^5 - 15t^4 + 10t^3.
class PerlinKernel {
 public:
  explicit PerlinKernel(std::uint64_t seed);

  double operator()(double u, double v) const noexcept;

 private:
  std::array<std::uint8_t, 512> perm_{};
};

double perlin2(double u, double v, std::uint64_t seed);

/// Seed used by octave `octave` of a fractal built from `seed`.
std::uint64_t octave_seed(std::uint64_t seed, int octave) noexcept;

/// Sum over octaves j of p^j * perlin(u * s * l^j, v * s * l^j), each octave
/// on its own derived seed. Raw, not normalized.
class FractalNoise {
 public:
  explicit FractalNoise(const NoiseParams& params);

  double operator()(double u, double v) const noexcept;

 private:
  NoiseParams params_;
  std::vector<PerlinKernel> kernels_;
};

double fractal(double u, double v, const NoiseParams& params);

/// r x r field over a 2D bounding box, normalized to [-1, 1].
struct NoiseGrid {
  int resolution = 0;
  Bounds2 bounds;
  /// Row-major: values[i * r + j] sits at axis-0 index i, axis-1 index j.
  std::vector<double> values;
  /// Set when the raw field was constant and every value was zeroed.
  bool constant_field = false;

  double at(int i, int j) const { return values[static_cast<std::size_t>(i * resolution + j)]; }
  /// Parameter-plane position of node (i, j); the last node lands exactly on
  /// bounds.max.
  Vec2 node_position(int i, int j) const noexcept;
};

/// Evaluates the fractal at every node, then min-max normalizes and maps to
/// [-1, 1] via 2x - 1. Throws DegenerateBounds on a zero-extent axis and
/// InvalidParameter if r < 2.
NoiseGrid build_grid(const Bounds2& bounds, int resolution,
                     const NoiseParams& params,
                     CoordinateMode mode = CoordinateMode::Normalized);

/// Bilinear interpolation of the grid at `q`; queries outside the bounds are
/// clamped onto them.
double sample(const NoiseGrid& grid, const Vec2& q) noexcept;

}  // namespace pnas3d
