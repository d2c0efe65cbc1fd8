#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "pnas3d/point_cloud.hpp"

namespace pnas3d {

// Wire encodings. Binary arrays travel as standard base64 (with padding);
// float arrays are little-endian float32, index arrays little-endian uint32,
// and boolean arrays a bitset with element i at bit (i % 8) of byte i / 8.
std::string base64_encode(std::string_view bytes);
/// Throws ParseError on malformed input.
std::string base64_decode(std::string_view text);
std::string pack_float32(std::span<const double> values);
std::string pack_vec3_float32(std::span<const Vec3> values);
std::string pack_uint32(std::span<const std::uint32_t> values);
std::string pack_bitset(std::span<const std::uint8_t> flags);
std::vector<std::uint8_t> unpack_bitset(std::string_view bytes, std::size_t count);

/// Indices of the `target` kept points among `candidates`, chosen by the
/// smallest per-index hash under `seed` and returned in ascending order.
std::vector<std::uint32_t> downsample_indices(std::span<const std::uint32_t> candidates,
                                              std::size_t target, std::uint64_t seed);

struct ApiResponse {
  int status = 200;
  std::string body;
  double compute_ms = 0.0;
};

/// Stateless request handlers. Fixtures are the built-in `plane` (100 x 100
/// organized) and `sphere_cap` (5000 points), plus every .ply/.xyz/.opc file
/// in the fixtures directory, named by file stem; a file shadows a built-in
/// of the same name.
class ExplorerApi {
 public:
  explicit ExplorerApi(std::filesystem::path fixtures_dir = {});

  std::vector<std::string> cloud_names() const;

  ApiResponse clouds() const;
  ApiResponse profiles() const;
  ApiResponse synthesize(std::string_view body) const;
  ApiResponse grid(std::string_view body) const;

 private:
  std::filesystem::path fixtures_dir_;
};

/// HTTP front end. Requests are served on httplib's thread pool.
class ExplorerServer {
 public:
  explicit ExplorerServer(ExplorerApi api);
  ~ExplorerServer();
  ExplorerServer(const ExplorerServer&) = delete;
  ExplorerServer& operator=(const ExplorerServer&) = delete;

  /// Binds `host:port`; port 0 picks a free one. Returns the bound port and
  /// throws IoError (AddressInUse) when the bind fails.
  int bind(const std::string& host, int port);
  /// Blocks until stop().
  void run();
  /// run() on a background thread; returns once the server accepts.
  void start();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Sets the spdlog level from PNAS3D_LOG (trace, debug, info, warn, error,
/// critical, off); `fallback` applies when the variable is unset.
void configure_logging(std::string_view fallback = "info");

}  // namespace pnas3d
