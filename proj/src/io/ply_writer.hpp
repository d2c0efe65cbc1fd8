#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace pnas3d::detail {

enum class PlyScalar { UChar, Float, Double };

struct PlyColumn {
  std::string name;
  PlyScalar type;
  std::function<double(std::size_t)> value;
};

/// Binary little-endian PLY with a single vertex element.
std::string encode_vertex_ply(std::size_t count,
                              const std::vector<std::string>& comments,
                              const std::vector<PlyColumn>& columns);

}  // namespace pnas3d::detail
