#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "pnas3d/anomaly.hpp"
#include "pnas3d/point_cloud.hpp"

namespace pnas3d {

inline constexpr std::string_view kToolVersion = "1.0.0";

/// Supported cloud encodings.
///   Ply: reads ascii and binary_little_endian; writes binary_little_endian.
///   Xyz: whitespace-separated triples, '#' starts a comment.
///   Opc: "OPC1", uint32 H, uint32 W (LE), then H*W*3 float32 LE, row-major.
enum class CloudFormat { Ply, Xyz, Opc };

std::string_view to_string(CloudFormat format) noexcept;
std::string_view extension(CloudFormat format) noexcept;
/// "ply" / "xyz" / "opc"; throws ParseError otherwise.
CloudFormat parse_cloud_format(std::string_view name);
/// From the file extension; throws ParseError for unknown extensions.
CloudFormat format_from_path(const std::filesystem::path& path);

/// Decodes a cloud from memory. Non-vertex PLY elements are skipped and
/// reported through `warnings` when given.
PointCloud decode_cloud(std::string_view bytes, CloudFormat format,
                        std::vector<std::string>* warnings = nullptr);

/// Reads `path`; the format defaults to the one implied by the extension.
/// Throws IoError if the file cannot be read and ParseError (with a line or
/// byte offset) if it does not parse.
PointCloud read_cloud(const std::filesystem::path& path,
                      std::optional<CloudFormat> format = std::nullopt,
                      std::vector<std::string>* warnings = nullptr);

/// Encodes a cloud. PLY stores float64 coordinates, a `valid` uchar column
/// when some point is invalid, and a "raster H W" comment for organized
/// clouds. OPC stores float32, and unorganized clouds as a 1 x N raster.
std::string encode_cloud(const PointCloud& cloud, CloudFormat format);

/// Refuses to replace an existing file unless `overwrite` is set (IoError).
void write_file(const std::filesystem::path& path, std::string_view bytes,
                bool overwrite);

void write_cloud(const PointCloud& cloud, const std::filesystem::path& path,
                 CloudFormat format, bool overwrite = false);

std::string read_file(const std::filesystem::path& path);

using Rgb = std::array<std::uint8_t, 3>;

/// Gray for unmasked points; masked points run red (+alpha) through white (0)
/// to blue (-alpha), clamped at the ends.
Rgb displacement_color(double signed_magnitude, double alpha, bool masked) noexcept;

/// Everything needed to reproduce a run.
struct RunRecord {
  AnomalyParams params;
  std::uint64_t seed = 0;
  std::optional<std::string> profile;
  std::string input_path;
  std::string input_format;
  std::string input_hash;  // FNV-1a 64 of the input bytes, hex
  std::string output_format;
};

nlohmann::json params_to_json(const AnomalyParams& params);
/// Reads every field of a full parameter record.
AnomalyParams params_from_json(const nlohmann::json& j);
/// Applies whichever fields are present; unknown keys and wrong types raise
/// InvalidParameter naming the key.
void apply_param_overrides(AnomalyParams& params, const nlohmann::json& j);

nlohmann::json run_record_to_json(const RunRecord& record,
                                  const AnomalyResult& result);
RunRecord run_record_from_json(const nlohmann::json& j);
RunRecord read_run_record(const std::filesystem::path& path);

struct ResultFiles {
  std::filesystem::path augmented;
  std::filesystem::path labels;
  std::optional<std::filesystem::path> visualization;
  std::filesystem::path metadata;
};

struct WriteOptions {
  CloudFormat cloud_format = CloudFormat::Opc;
  bool overwrite = false;
  bool visualization = true;
  /// Side-car text table (labels.txt) instead of PLY vertex properties.
  bool labels_as_text = false;
};

/// Labels-only PLY: coordinates plus `anomaly_mask` (uchar) and
/// `anomaly_disp` (float32) vertex properties.
std::string encode_labels_ply(const AnomalyResult& result);
/// One "mask disp" line per point.
std::string encode_labels_text(const AnomalyResult& result);
/// Colored PLY with red/green/blue uchar vertex properties.
std::string encode_visualization_ply(const AnomalyResult& result, double alpha);

/// Emits augmented.<ext>, labels.ply (or labels.txt), viz.ply and meta.json
/// into `dir`, creating it when missing.
ResultFiles write_result(const AnomalyResult& result, const RunRecord& record,
                         const std::filesystem::path& dir,
                         const WriteOptions& options);

/// Shortest decimal that parses back to the same double.
std::string format_double(double value);

}  // namespace pnas3d
