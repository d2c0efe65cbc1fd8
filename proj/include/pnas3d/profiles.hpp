#pragma once

#include <optional>
#include <span>
#include <string_view>

#include "pnas3d/anomaly.hpp"

namespace pnas3d {

/// Named parameter preset.
struct Profile {
  std::string_view name;
  AnomalyParams params;
};

/// pronounced, medium, subtle; in that order.
std::span<const Profile> builtin_profiles() noexcept;

std::optional<AnomalyParams> find_profile(std::string_view name) noexcept;

/// Fixed parameters of the scale x octaves sweep (p=0.5, l=2, tau=0.6,
/// rho=0.05, alpha=0.02, r=64); scale and octaves are overwritten per cell.
AnomalyParams grid_search_defaults() noexcept;

}  // namespace pnas3d
