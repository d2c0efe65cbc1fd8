#include "pnas3d/noise_field.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "pnas3d/error.hpp"
#include "pnas3d/hash.hpp"

namespace pnas3d {

std::string_view to_string(CoordinateMode mode) noexcept {
  return mode == CoordinateMode::Physical ? "physical" : "normalized";
}

CoordinateMode parse_coordinate_mode(std::string_view text) {
  if (text == "normalized") return CoordinateMode::Normalized;
  if (text == "physical") return CoordinateMode::Physical;
  throw Error(ErrorCode::InvalidParameter, "parameters",
              "coordinate_mode must be 'normalized' or 'physical', got '" +
                  std::string(text) + "'",
              "coordinate_mode");
}

void NoiseParams::validate() const {
  auto fail = [](const char* field, const std::string& rule) {
    throw Error(ErrorCode::InvalidParameter, "parameters",
                std::string(field) + " violates " + rule, field);
  };
  if (!(scale > 0.0) || !std::isfinite(scale)) fail("scale", "s > 0");
  if (octaves < 1) fail("octaves", "o >= 1");
  if (!(persistence > 0.0 && persistence <= 1.0)) {
    fail("persistence", "0 < p <= 1");
  }
  if (!(lacunarity >= 1.0) || !std::isfinite(lacunarity)) {
    fail("lacunarity", "l >= 1");
  }
}

// --- Perlin kernel ----------------------------------------------------------

namespace {

constexpr double kDiag = 0.70710678118654752440;

inline double fade(double t) noexcept {
  return t * t * t * (t * (t * 6.0 - 15.0) + 10.0);
}

inline double gradient_dot(std::uint8_t hash, double x, double y) noexcept {
  switch (hash & 7) {
    case 0: return x;
    case 1: return -x;
    case 2: return y;
    case 3: return -y;
    case 4: return kDiag * x + kDiag * y;
    case 5: return -kDiag * x + kDiag * y;
    case 6: return kDiag * x - kDiag * y;
    default: return -kDiag * x - kDiag * y;
  }
}

inline double lerp(double a, double b, double t) noexcept {
  return a + t * (b - a);
}

}  // namespace

PerlinKernel::PerlinKernel(std::uint64_t seed) {
  std::array<std::uint8_t, 256> base{};
  std::iota(base.begin(), base.end(), std::uint8_t{0});
  for (std::uint64_t i = 255; i >= 1; --i) {
    const std::uint64_t r = mix64(seed + i * 0xD1B54A32D192ED03ULL);
    std::swap(base[i], base[r % (i + 1)]);
  }
  std::copy(base.begin(), base.end(), perm_.begin());
  std::copy(base.begin(), base.end(), perm_.begin() + 256);
}

double PerlinKernel::operator()(double u, double v) const noexcept {
  const double fu = std::floor(u);
  const double fv = std::floor(v);
  const double xf = u - fu;
  const double yf = v - fv;
  const auto xi = static_cast<std::size_t>(static_cast<std::int64_t>(fu) & 255);
  const auto yi = static_cast<std::size_t>(static_cast<std::int64_t>(fv) & 255);

  const std::uint8_t h00 = perm_[perm_[xi] + yi];
  const std::uint8_t h10 = perm_[perm_[xi + 1] + yi];
  const std::uint8_t h01 = perm_[perm_[xi] + yi + 1];
  const std::uint8_t h11 = perm_[perm_[xi + 1] + yi + 1];

  const double n00 = gradient_dot(h00, xf, yf);
  const double n10 = gradient_dot(h10, xf - 1.0, yf);
  const double n01 = gradient_dot(h01, xf, yf - 1.0);
  const double n11 = gradient_dot(h11, xf - 1.0, yf - 1.0);

  const double wu = fade(xf);
  const double wv = fade(yf);
  return lerp(lerp(n00, n10, wu), lerp(n01, n11, wu), wv);
}

double perlin2(double u, double v, std::uint64_t seed) {
  return PerlinKernel(seed)(u, v);
}

std::uint64_t octave_seed(std::uint64_t seed, int octave) noexcept {
  return mix64(seed ^ mix64(static_cast<std::uint64_t>(octave)));
}

// --- fractal ----------------------------------------------------------------

FractalNoise::FractalNoise(const NoiseParams& params) : params_(params) {
  params_.validate();
  kernels_.reserve(static_cast<std::size_t>(params_.octaves));
  for (int j = 0; j < params_.octaves; ++j) {
    kernels_.emplace_back(octave_seed(params_.seed, j));
  }
}

double FractalNoise::operator()(double u, double v) const noexcept {
  double total = 0.0;
  double amplitude = 1.0;
  double frequency = params_.scale;
  for (const auto& kernel : kernels_) {
    total += amplitude * kernel(u * frequency, v * frequency);
    amplitude *= params_.persistence;
    frequency *= params_.lacunarity;
  }
  return total;
}

double fractal(double u, double v, const NoiseParams& params) {
  return FractalNoise(params)(u, v);
}

// --- grid -------------------------------------------------------------------

namespace {

// Position of node `i` of `r` along one axis, exact at both ends.
inline double linspace(double lo, double hi, int i, int r) noexcept {
  if (i == r - 1) return hi;
  return lo + (hi - lo) * (static_cast<double>(i) / static_cast<double>(r - 1));
}

}  // namespace

Vec2 NoiseGrid::node_position(int i, int j) const noexcept {
  return {linspace(bounds.min.x(), bounds.max.x(), i, resolution),
          linspace(bounds.min.y(), bounds.max.y(), j, resolution)};
}

NoiseGrid build_grid(const Bounds2& bounds, int resolution,
                     const NoiseParams& params, CoordinateMode mode) {
  if (resolution < 2) {
    throw Error(ErrorCode::InvalidParameter, "build_grid",
                "grid_res violates r >= 2", "grid_res");
  }
  for (int axis = 0; axis < 2; ++axis) {
    if (!(bounds.max[axis] > bounds.min[axis])) {
      throw Error(ErrorCode::DegenerateBounds, "build_grid",
                  "zero-extent projection along axis " + std::to_string(axis));
    }
  }

  const FractalNoise noise(params);
  NoiseGrid grid;
  grid.resolution = resolution;
  grid.bounds = bounds;
  grid.values.resize(static_cast<std::size_t>(resolution) * resolution);

  for (int i = 0; i < resolution; ++i) {
    for (int j = 0; j < resolution; ++j) {
      Vec2 at;
      if (mode == CoordinateMode::Normalized) {
        at = {linspace(0.0, 1.0, i, resolution), linspace(0.0, 1.0, j, resolution)};
      } else {
        at = grid.node_position(i, j);
      }
      grid.values[static_cast<std::size_t>(i * resolution + j)] = noise(at.x(), at.y());
    }
  }

  const auto [lo_it, hi_it] = std::minmax_element(grid.values.begin(), grid.values.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (!(hi > lo)) {
    std::fill(grid.values.begin(), grid.values.end(), 0.0);
    grid.constant_field = true;
    return grid;
  }
  const double range = hi - lo;
  for (double& value : grid.values) {
    value = 2.0 * ((value - lo) / range) - 1.0;
  }
  return grid;
}

double sample(const NoiseGrid& grid, const Vec2& q) noexcept {
  const int r = grid.resolution;
  int cell[2];
  double frac[2];
  for (int axis = 0; axis < 2; ++axis) {
    const double lo = grid.bounds.min[axis];
    const double hi = grid.bounds.max[axis];
    const double x = std::clamp(q[axis], lo, hi);
    double f = (x - lo) / (hi - lo) * static_cast<double>(r - 1);
    // Node positions can come back a few ulps off an integer; snap them so
    // sampling at a node returns the node value exactly.
    const double nearest = std::round(f);
    if (std::abs(f - nearest) <= 1e-13 * static_cast<double>(r)) f = nearest;
    int i = static_cast<int>(std::floor(f));
    i = std::clamp(i, 0, r - 2);
    cell[axis] = i;
    frac[axis] = std::clamp(f - static_cast<double>(i), 0.0, 1.0);
  }
  const double a = grid.at(cell[0], cell[1]);
  const double b = grid.at(cell[0] + 1, cell[1]);
  const double c = grid.at(cell[0], cell[1] + 1);
  const double d = grid.at(cell[0] + 1, cell[1] + 1);
  const double tx = frac[0];
  const double ty = frac[1];
  // Weighted form rather than nested lerps: exact at every corner, including
  // tx == 1 or ty == 1 on the last cell.
  return (1.0 - tx) * (1.0 - ty) * a + tx * (1.0 - ty) * b +
         (1.0 - tx) * ty * c + tx * ty * d;
}

}  // namespace pnas3d
