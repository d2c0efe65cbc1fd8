#include <algorithm>
#include <cmath>
#include <cstdio>

#include "io/ply_writer.hpp"
#include "pnas3d/error.hpp"
#include "pnas3d/io.hpp"

namespace pnas3d {

using nlohmann::json;

Rgb displacement_color(double signed_magnitude, double alpha, bool masked) noexcept {
  if (!masked) return {128, 128, 128};
  const double t = alpha > 0.0 ? std::clamp(signed_magnitude / alpha, -1.0, 1.0) : 0.0;
  const auto fade = static_cast<std::uint8_t>(std::lround(255.0 * (1.0 - std::abs(t))));
  if (t >= 0.0) return {255, fade, fade};
  return {fade, fade, 255};
}

// --- parameter records --------------------------------------------------------

json params_to_json(const AnomalyParams& p) {
  // nlohmann::json keeps keys sorted, so the dump order is fixed.
  return json{
      {"scale", p.noise.scale},
      {"octaves", p.noise.octaves},
      {"persistence", p.noise.persistence},
      {"lacunarity", p.noise.lacunarity},
      {"threshold", p.threshold},
      {"mask_ratio", p.mask_ratio},
      {"strength", p.strength},
      {"grid_res", p.grid_res},
      {"knn", p.knn},
      {"coordinate_mode", std::string(to_string(p.coordinate_mode))},
  };
}

namespace {

[[noreturn]] void bad_field(const std::string& key, const std::string& why) {
  throw Error(ErrorCode::InvalidParameter, "parameters", key + ": " + why, key);
}

double number_field(const json& v, const std::string& key) {
  if (!v.is_number()) bad_field(key, "expected a number");
  return v.get<double>();
}

int integer_field(const json& v, const std::string& key) {
  if (!v.is_number_integer()) {
    if (v.is_number_float() && std::floor(v.get<double>()) == v.get<double>()) {
      return static_cast<int>(v.get<double>());
    }
    bad_field(key, "expected an integer");
  }
  const auto value = v.get<std::int64_t>();
  if (value < -1'000'000'000 || value > 1'000'000'000) bad_field(key, "out of range");
  return static_cast<int>(value);
}

}  // namespace

void apply_param_overrides(AnomalyParams& p, const json& j) {
  if (!j.is_object()) bad_field("params", "expected an object");
  for (const auto& [key, v] : j.items()) {
    if (key == "scale") p.noise.scale = number_field(v, key);
    else if (key == "octaves") p.noise.octaves = integer_field(v, key);
    else if (key == "persistence") p.noise.persistence = number_field(v, key);
    else if (key == "lacunarity") p.noise.lacunarity = number_field(v, key);
    else if (key == "threshold") p.threshold = number_field(v, key);
    else if (key == "mask_ratio") p.mask_ratio = number_field(v, key);
    else if (key == "strength") p.strength = number_field(v, key);
    else if (key == "grid_res") p.grid_res = integer_field(v, key);
    else if (key == "knn") p.knn = integer_field(v, key);
    else if (key == "coordinate_mode") {
      if (!v.is_string()) bad_field(key, "expected 'normalized' or 'physical'");
      p.coordinate_mode = parse_coordinate_mode(v.get<std::string>());
    } else {
      bad_field(key, "unknown parameter");
    }
  }
}

AnomalyParams params_from_json(const json& j) {
  static const char* const required[] = {"scale", "octaves", "persistence", "lacunarity",
                                         "threshold", "mask_ratio", "strength", "grid_res",
                                         "knn", "coordinate_mode"};
  for (const char* key : required) {
    if (!j.contains(key)) bad_field(key, "missing from parameter record");
  }
  AnomalyParams p;
  apply_param_overrides(p, j);
  return p;
}

json run_record_to_json(const RunRecord& record, const AnomalyResult& result) {
  const std::size_t valid = result.augmented.valid_count();
  const std::size_t masked = result.masked_count();
  return json{
      {"tool", "pnas3d"},
      {"version", std::string(kToolVersion)},
      {"seed", record.seed},
      {"profile", record.profile ? json(*record.profile) : json(nullptr)},
      {"params", params_to_json(record.params)},
      {"input", {{"path", record.input_path},
                 {"format", record.input_format},
                 {"fnv1a64", record.input_hash}}},
      {"output_format", record.output_format},
      {"result",
       {{"points", result.augmented.size()},
        {"valid_points", valid},
        {"masked_points", masked},
        {"masked_fraction", valid ? static_cast<double>(masked) / static_cast<double>(valid) : 0.0},
        {"effective_threshold", result.effective_threshold},
        {"max_displacement", result.max_displacement()},
        {"warnings",
         {{"constant_field", result.warnings.constant_field},
          {"degenerate_neighborhoods", result.warnings.degenerate_neighborhoods},
          {"threshold_adjusted", result.warnings.threshold_adjusted}}}}},
  };
}

RunRecord run_record_from_json(const json& j) {
  try {
    RunRecord record;
    record.params = params_from_json(j.at("params"));
    record.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("profile") && j["profile"].is_string()) {
      record.profile = j["profile"].get<std::string>();
    }
    const auto& input = j.at("input");
    record.input_path = input.at("path").get<std::string>();
    record.input_format = input.at("format").get<std::string>();
    record.input_hash = input.at("fnv1a64").get<std::string>();
    record.output_format = j.at("output_format").get<std::string>();
    return record;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, "read_metadata", e.what());
  }
}

RunRecord read_run_record(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, "read_metadata",
                path.string() + ": byte " + std::to_string(e.byte) + ": malformed JSON");
  }
  return run_record_from_json(j);
}

// --- result files -------------------------------------------------------------

std::string encode_labels_ply(const AnomalyResult& result) {
  using detail::PlyColumn;
  using detail::PlyScalar;
  const auto points = result.augmented.points();
  std::vector<std::string> comments;
  if (const auto& shape = result.augmented.shape()) {
    comments.push_back("raster " + std::to_string(shape->height) + " " +
                       std::to_string(shape->width));
  }
  return detail::encode_vertex_ply(
      points.size(), comments,
      {
          {"x", PlyScalar::Double, [&](std::size_t i) { return points[i].x(); }},
          {"y", PlyScalar::Double, [&](std::size_t i) { return points[i].y(); }},
          {"z", PlyScalar::Double, [&](std::size_t i) { return points[i].z(); }},
          {"anomaly_mask", PlyScalar::UChar,
           [&](std::size_t i) { return static_cast<double>(result.mask[i]); }},
          {"anomaly_disp", PlyScalar::Float,
           [&](std::size_t i) { return result.signed_magnitude[i]; }},
      });
}

std::string encode_labels_text(const AnomalyResult& result) {
  std::string out = "# anomaly_mask anomaly_disp\n";
  for (std::size_t i = 0; i < result.mask.size(); ++i) {
    out += result.mask[i] ? '1' : '0';
    out += ' ';
    out += format_double(result.signed_magnitude[i]);
    out += '\n';
  }
  return out;
}

std::string encode_visualization_ply(const AnomalyResult& result, double alpha) {
  using detail::PlyColumn;
  using detail::PlyScalar;
  const auto points = result.augmented.points();
  std::vector<Rgb> colors(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    colors[i] = displacement_color(result.signed_magnitude[i], alpha, result.mask[i] != 0);
  }
  return detail::encode_vertex_ply(
      points.size(), {},
      {
          {"x", PlyScalar::Float, [&](std::size_t i) { return points[i].x(); }},
          {"y", PlyScalar::Float, [&](std::size_t i) { return points[i].y(); }},
          {"z", PlyScalar::Float, [&](std::size_t i) { return points[i].z(); }},
          {"red", PlyScalar::UChar, [&](std::size_t i) { return double(colors[i][0]); }},
          {"green", PlyScalar::UChar, [&](std::size_t i) { return double(colors[i][1]); }},
          {"blue", PlyScalar::UChar, [&](std::size_t i) { return double(colors[i][2]); }},
      });
}

ResultFiles write_result(const AnomalyResult& result, const RunRecord& record,
                         const std::filesystem::path& dir, const WriteOptions& options) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw Error(ErrorCode::IoError, "write_result",
                "cannot create '" + dir.string() + "': " + ec.message());
  }
  ResultFiles files;
  files.augmented = dir / ("augmented." + std::string(extension(options.cloud_format)));
  files.labels = dir / (options.labels_as_text ? "labels.txt" : "labels.ply");
  if (options.visualization) files.visualization = dir / "viz.ply";
  files.metadata = dir / "meta.json";

  if (!options.overwrite) {
    for (const auto* path : {&files.augmented, &files.labels, &files.metadata}) {
      if (std::filesystem::exists(*path)) {
        throw Error(ErrorCode::IoError, "write_result",
                    "'" + path->string() + "' exists; pass the overwrite flag to replace it");
      }
    }
    if (files.visualization && std::filesystem::exists(*files.visualization)) {
      throw Error(ErrorCode::IoError, "write_result",
                  "'" + files.visualization->string() +
                      "' exists; pass the overwrite flag to replace it");
    }
  }

  write_file(files.augmented, encode_cloud(result.augmented, options.cloud_format), true);
  write_file(files.labels,
             options.labels_as_text ? encode_labels_text(result) : encode_labels_ply(result), true);
  if (files.visualization) {
    write_file(*files.visualization, encode_visualization_ply(result, record.params.strength),
               true);
  }
  RunRecord stamped = record;
  stamped.output_format = std::string(to_string(options.cloud_format));
  write_file(files.metadata, run_record_to_json(stamped, result).dump(2) + "\n", true);
  return files;
}

}  // namespace pnas3d
