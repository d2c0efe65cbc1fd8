#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "pnas3d/anomaly.hpp"
#include "pnas3d/error.hpp"
#include "pnas3d/io.hpp"

namespace pnas3d {

/// Hex FNV-1a of raw input bytes, as stored in meta.json.
std::string hash_hex(std::uint64_t hash);

/// Seed used when none is given: the FNV-1a hash of the input bytes.
std::uint64_t default_seed(std::string_view input_bytes) noexcept;

/// Base params: the named profile, or the medium defaults; then `overrides`
/// (a JSON object of AnomalyParams fields) on top.
AnomalyParams resolve_params(const std::optional<std::string>& profile,
                             const nlohmann::json& overrides);

struct GenerateOptions {
  std::filesystem::path input;  // may be empty when from_meta names one
  std::filesystem::path output;
  std::optional<std::string> profile;
  nlohmann::json overrides = nlohmann::json::object();
  std::optional<std::uint64_t> seed;
  std::optional<CloudFormat> input_format;
  std::optional<CloudFormat> output_format;  // defaults to the input format
  std::optional<std::filesystem::path> from_meta;
  bool overwrite = false;
  bool visualization = true;
  bool labels_as_text = false;
};

struct GenerateOutcome {
  ResultFiles files;
  std::uint64_t seed = 0;
  AnomalyParams params;
  std::size_t valid_points = 0;
  std::size_t masked_points = 0;
  double effective_threshold = 0.0;
  double max_displacement = 0.0;
  std::vector<std::string> warnings;

  double masked_fraction() const noexcept;
  /// "masked 0.0500 (500/10000) tau_eff 0.61 max|d| 0.05 seed 7"
  std::string summary_line() const;
};

/// Reads the input, runs synthesize once and writes the result files.
/// With from_meta, params, seed and (unless given) input come from the
/// record; explicit overrides still apply on top.
GenerateOutcome run_generate(const GenerateOptions& options);

struct GridOptions {
  std::filesystem::path input;
  std::filesystem::path output;
  std::vector<double> scales{1.0, 2.0, 3.0, 4.0};
  std::vector<int> octaves{1, 2, 3, 4};
  nlohmann::json overrides = nlohmann::json::object();
  std::optional<std::uint64_t> seed;
  std::optional<CloudFormat> input_format;
  std::optional<CloudFormat> output_format;
  bool overwrite = false;
  bool visualization = true;
  unsigned threads = 0;  // 0: hardware concurrency
};

struct GridCell {
  double scale = 0.0;
  int octaves = 0;
  std::string name;  // s1.0_o1
  std::optional<std::string> error;
  std::size_t valid_points = 0;
  std::size_t masked_points = 0;
  double effective_threshold = 0.0;
  double max_displacement = 0.0;

  double masked_fraction() const noexcept;
};

struct GridOutcome {
  std::uint64_t seed = 0;
  AnomalyParams fixed;
  std::vector<GridCell> cells;  // row-major in (scale, octaves)
  std::filesystem::path manifest;

  std::size_t failures() const noexcept;
};

/// Fixed-decimal, locale-free cell directory name: s1.0_o1, s2.5_o3.
std::string grid_cell_name(double scale, int octaves);

/// Runs every (scale, octaves) cell in a worker pool, one result directory
/// per cell, plus grid.json. Throws only when every cell fails, or on
/// problems shared by all cells (unreadable input, bad fixed params).
GridOutcome run_grid(const GridOptions& options);

nlohmann::json grid_manifest_json(const GridOutcome& outcome, const GridOptions& options);

/// Exit code for an error: 1 parse, 2 geometry, 3 io.
int exit_code_for(const Error& error) noexcept;

}  // namespace pnas3d
