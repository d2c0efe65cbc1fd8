#include "pnas3d/profiles.hpp"

#include <array>

namespace pnas3d {

namespace {

constexpr AnomalyParams make(double s, int o, double p, double l, double tau, double rho,
                             int r, double alpha) {
  AnomalyParams params;
  params.noise.scale = s;
  params.noise.octaves = o;
  params.noise.persistence = p;
  params.noise.lacunarity = l;
  params.threshold = tau;
  params.mask_ratio = rho;
  params.grid_res = r;
  params.strength = alpha;
  params.knn = 10;
  return params;
}

constexpr std::array<Profile, 3> kProfiles{{
    {"pronounced", make(1.0, 1, 0.7, 2.0, 0.5, 0.03, 64, 0.1)},
    {"medium", make(2.0, 2, 0.5, 2.0, 0.6, 0.05, 64, 0.05)},
    {"subtle", make(3.0, 3, 0.4, 2.0, 0.6, 0.08, 64, 0.02)},
}};

}  // namespace

std::span<const Profile> builtin_profiles() noexcept { return kProfiles; }

std::optional<AnomalyParams> find_profile(std::string_view name) noexcept {
  for (const auto& profile : kProfiles) {
    if (profile.name == name) return profile.params;
  }
  return std::nullopt;
}

AnomalyParams grid_search_defaults() noexcept {
  return make(1.0, 1, 0.5, 2.0, 0.6, 0.05, 64, 0.02);
}

}  // namespace pnas3d
