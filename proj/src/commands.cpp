#include "pnas3d/commands.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdio>
#include <thread>

#include <spdlog/spdlog.h>

#include "pnas3d/error.hpp"
#include "pnas3d/hash.hpp"
#include "pnas3d/profiles.hpp"

namespace pnas3d {

using nlohmann::json;

std::string hash_hex(std::uint64_t hash) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

std::uint64_t default_seed(std::string_view input_bytes) noexcept {
  return fnv1a64(input_bytes);
}

AnomalyParams resolve_params(const std::optional<std::string>& profile, const json& overrides) {
  AnomalyParams params;
  if (profile) {
    const auto found = find_profile(*profile);
    if (!found) {
      throw Error(ErrorCode::InvalidParameter, "parameters",
                  "profile: unknown profile '" + *profile +
                      "' (expected pronounced, medium or subtle)",
                  "profile");
    }
    params = *found;
  }
  apply_param_overrides(params, overrides);
  return params;
}

namespace {

struct LoadedInput {
  PointCloud cloud;
  CloudFormat format;
  std::uint64_t hash;
};

LoadedInput load_input(const std::filesystem::path& path, std::optional<CloudFormat> format,
                       std::vector<std::string>* warnings) {
  const CloudFormat fmt = format ? *format : format_from_path(path);
  const std::string bytes = read_file(path);
  try {
    return {decode_cloud(bytes, fmt, warnings), fmt, fnv1a64(bytes)};
  } catch (const Error& e) {
    throw Error(e.code(), e.stage(), path.string() + ": " + e.detail(), e.field());
  }
}

}  // namespace

double GenerateOutcome::masked_fraction() const noexcept {
  return valid_points ? static_cast<double>(masked_points) / static_cast<double>(valid_points)
                      : 0.0;
}

std::string GenerateOutcome::summary_line() const {
  char buf[256];
  std::snprintf(buf, sizeof buf, "masked %.4f (%zu/%zu) tau_eff %.6g max|d| %.6g seed %llu",
                masked_fraction(), masked_points, valid_points, effective_threshold,
                max_displacement, static_cast<unsigned long long>(seed));
  return buf;
}

GenerateOutcome run_generate(const GenerateOptions& options) {
  std::optional<RunRecord> recorded;
  if (options.from_meta) recorded = read_run_record(*options.from_meta);

  std::filesystem::path input = options.input;
  if (input.empty() && recorded) input = recorded->input_path;
  if (input.empty()) {
    throw Error(ErrorCode::InvalidParameter, "generate", "no input cloud given", "input");
  }
  std::optional<CloudFormat> input_format = options.input_format;
  if (!input_format && recorded && !recorded->input_format.empty()) {
    input_format = parse_cloud_format(recorded->input_format);
  }

  GenerateOutcome outcome;
  const LoadedInput loaded = load_input(input, input_format, &outcome.warnings);
  for (const auto& w : outcome.warnings) spdlog::warn("{}: {}", input.string(), w);

  std::optional<std::string> profile = options.profile;
  if (recorded) {
    if (!profile) profile = recorded->profile;
    outcome.params = recorded->params;
    if (options.profile) outcome.params = resolve_params(options.profile, json::object());
    apply_param_overrides(outcome.params, options.overrides);
    if (hash_hex(loaded.hash) != recorded->input_hash) {
      spdlog::warn("input {} does not match the recorded fingerprint {}", input.string(),
                   recorded->input_hash);
    }
  } else {
    outcome.params = resolve_params(profile, options.overrides);
  }

  if (options.seed) {
    outcome.seed = *options.seed;
  } else if (recorded) {
    outcome.seed = recorded->seed;
  } else {
    outcome.seed = loaded.hash;
  }

  const AnomalyResult result = synthesize(loaded.cloud, outcome.params, outcome.seed);

  RunRecord record{.params = outcome.params,
                   .seed = outcome.seed,
                   .profile = profile,
                   .input_path = input.string(),
                   .input_format = std::string(to_string(loaded.format)),
                   .input_hash = hash_hex(loaded.hash)};
  outcome.files = write_result(result, record, options.output,
                               {.cloud_format = options.output_format.value_or(loaded.format),
                                .overwrite = options.overwrite,
                                .visualization = options.visualization,
                                .labels_as_text = options.labels_as_text});
  outcome.valid_points = result.augmented.valid_count();
  outcome.masked_points = result.masked_count();
  outcome.effective_threshold = result.effective_threshold;
  outcome.max_displacement = result.max_displacement();
  if (result.warnings.constant_field) outcome.warnings.push_back("constant noise field");
  if (result.warnings.degenerate_neighborhoods) {
    outcome.warnings.push_back(std::to_string(result.warnings.degenerate_neighborhoods) +
                               " degenerate neighborhoods");
  }
  return outcome;
}

// --- grid ---------------------------------------------------------------------

double GridCell::masked_fraction() const noexcept {
  return valid_points ? static_cast<double>(masked_points) / static_cast<double>(valid_points)
                      : 0.0;
}

std::size_t GridOutcome::failures() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(cells.begin(), cells.end(), [](const GridCell& c) { return c.error.has_value(); }));
}

std::string grid_cell_name(double scale, int octaves) {
  std::string s = format_double(scale);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return "s" + s + "_o" + std::to_string(octaves);
}

json grid_manifest_json(const GridOutcome& outcome, const GridOptions& options) {
  json cells = json::array();
  for (std::size_t i = 0; i < outcome.cells.size(); ++i) {
    const GridCell& c = outcome.cells[i];
    json cell{{"row", i / options.octaves.size()},
              {"col", i % options.octaves.size()},
              {"scale", c.scale},
              {"octaves", c.octaves},
              {"dir", c.name}};
    if (c.error) {
      cell["status"] = "error";
      cell["error"] = *c.error;
    } else {
      cell["status"] = "ok";
      cell["valid_points"] = c.valid_points;
      cell["masked_points"] = c.masked_points;
      cell["masked_fraction"] = c.masked_fraction();
      cell["effective_threshold"] = c.effective_threshold;
      cell["max_displacement"] = c.max_displacement;
    }
    cells.push_back(std::move(cell));
  }
  json fixed = params_to_json(outcome.fixed);
  fixed.erase("scale");
  fixed.erase("octaves");
  return json{{"tool", "pnas3d"},
              {"version", std::string(kToolVersion)},
              {"seed", outcome.seed},
              {"input", options.input.string()},
              {"rows", options.scales},
              {"cols", options.octaves},
              {"fixed_params", fixed},
              {"cells", cells}};
}

GridOutcome run_grid(const GridOptions& options) {
  if (options.scales.empty() || options.octaves.empty()) {
    throw Error(ErrorCode::InvalidParameter, "grid", "scale and octave lists must be nonempty",
                options.scales.empty() ? "scales" : "octaves");
  }
  const std::filesystem::path manifest = options.output / "grid.json";
  if (!options.overwrite && std::filesystem::exists(manifest)) {
    throw Error(ErrorCode::IoError, "grid",
                "'" + manifest.string() + "' exists; pass the overwrite flag to replace it");
  }

  std::vector<std::string> warnings;
  const LoadedInput loaded = load_input(options.input, options.input_format, &warnings);
  for (const auto& w : warnings) spdlog::warn("{}: {}", options.input.string(), w);

  GridOutcome outcome;
  outcome.fixed = grid_search_defaults();
  apply_param_overrides(outcome.fixed, options.overrides);
  outcome.seed = options.seed.value_or(loaded.hash);
  outcome.manifest = manifest;

  for (double s : options.scales) {
    for (int o : options.octaves) {
      outcome.cells.push_back({.scale = s, .octaves = o, .name = grid_cell_name(s, o)});
    }
  }

  std::vector<std::optional<Error>> errors(outcome.cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < outcome.cells.size(); i = next++) {
      GridCell& cell = outcome.cells[i];
      try {
        AnomalyParams params = outcome.fixed;
        params.noise.scale = cell.scale;
        params.noise.octaves = cell.octaves;
        const AnomalyResult result = synthesize(loaded.cloud, params, outcome.seed);
        RunRecord record{.params = params,
                         .seed = outcome.seed,
                         .input_path = options.input.string(),
                         .input_format = std::string(to_string(loaded.format)),
                         .input_hash = hash_hex(loaded.hash)};
        write_result(result, record, options.output / cell.name,
                     {.cloud_format = options.output_format.value_or(loaded.format),
                      .overwrite = options.overwrite,
                      .visualization = options.visualization});
        cell.valid_points = result.augmented.valid_count();
        cell.masked_points = result.masked_count();
        cell.effective_threshold = result.effective_threshold;
        cell.max_displacement = result.max_displacement();
      } catch (const Error& e) {
        cell.error = e.what();
        errors[i] = e;
      }
    }
  };

  unsigned threads = options.threads ? options.threads : std::thread::hardware_concurrency();
  threads = std::clamp<unsigned>(threads, 1, static_cast<unsigned>(outcome.cells.size()));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  for (const GridCell& c : outcome.cells) {
    if (c.error) spdlog::warn("grid cell {} failed: {}", c.name, *c.error);
  }
  if (outcome.failures() == outcome.cells.size()) throw errors.front()->with_stage("grid/" + errors.front()->stage());

  write_file(manifest, grid_manifest_json(outcome, options).dump(2) + "\n", true);
  return outcome;
}

int exit_code_for(const Error& error) noexcept {
  return static_cast<int>(error.category());
}

}  // namespace pnas3d
