// pnas3d: command-line front end for anomaly synthesis on point clouds.

#include <csignal>
#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <spdlog/spdlog.h>

#include "CLI11.hpp"

#include "pnas3d/commands.hpp"
#include "pnas3d/error.hpp"
#include "pnas3d/explorer_api.hpp"
#include "pnas3d/fixtures.hpp"
#include "pnas3d/io.hpp"

using namespace pnas3d;
using nlohmann::json;

namespace {

/// AnomalyParams flags; only the ones given end up in the override object.
struct ParamFlags {
  std::map<std::string, CLI::Option*> numbers;
  std::map<std::string, double> values;
  std::string coordinate_mode;
  CLI::Option* mode_opt = nullptr;

  void add(CLI::App& app, bool include_scale_octaves) {
    auto num = [&](const std::string& flag, const std::string& key, const std::string& help) {
      numbers[key] = app.add_option(flag, values[key], help);
    };
    if (include_scale_octaves) {
      num("--scale", "scale", "noise scale s");
      num("--octaves", "octaves", "octave count o");
    }
    num("--persistence", "persistence", "amplitude factor p per octave");
    num("--lacunarity", "lacunarity", "frequency factor l per octave");
    num("--threshold", "threshold", "initial threshold tau, 0 < tau < 1");
    num("--mask-ratio", "mask_ratio", "maximum masked fraction rho, 0 < rho < 1");
    num("--strength", "strength", "displacement strength alpha > 0");
    num("--grid-res", "grid_res", "noise grid resolution r >= 2");
    num("--knn", "knn", "neighbors per normal estimate k >= 3");
    mode_opt = app.add_option("--coordinate-mode", coordinate_mode,
                              "grid coordinates: normalized or physical");
  }

  json overrides() const {
    json j = json::object();
    for (const auto& [key, opt] : numbers) {
      if (opt->count() == 0) continue;
      const double v = values.at(key);
      if (key == "octaves" || key == "grid_res" || key == "knn") {
        j[key] = static_cast<long long>(v) == v ? json(static_cast<long long>(v)) : json(v);
      } else {
        j[key] = v;
      }
    }
    if (mode_opt->count()) j["coordinate_mode"] = coordinate_mode;
    return j;
  }
};

std::optional<CloudFormat> format_opt(const std::string& name) {
  if (name.empty()) return std::nullopt;
  return parse_cloud_format(name);
}

ExplorerServer* g_server = nullptr;

void handle_signal(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging("warn");
  CLI::App app{"Synthesize surface anomalies on 3D point clouds"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  // generate
  auto* gen = app.add_subcommand("generate", "run synthesis once and write result files");
  std::vector<std::string> gen_paths;
  std::string gen_profile, gen_in_fmt, gen_out_fmt, gen_meta;
  std::uint64_t gen_seed = 0;
  bool gen_overwrite = false, gen_no_viz = false, gen_labels_text = false;
  ParamFlags gen_params;
  gen->add_option("paths", gen_paths, "INPUT OUTPUT_DIR (OUTPUT_DIR alone with --from-meta)")
      ->required()
      ->expected(1, 2);
  gen->add_option("--profile", gen_profile, "pronounced, medium or subtle");
  auto* gen_seed_opt = gen->add_option("--seed", gen_seed, "noise seed (default: input hash)");
  gen_params.add(*gen, true);
  gen->add_option("--input-format", gen_in_fmt, "ply, xyz or opc (default: from extension)");
  gen->add_option("--output-format", gen_out_fmt, "ply, xyz or opc (default: input format)");
  gen->add_option("--from-meta", gen_meta, "replay parameters, seed and input from meta.json");
  gen->add_flag("--overwrite", gen_overwrite, "replace existing result files");
  gen->add_flag("--no-viz", gen_no_viz, "skip viz.ply");
  gen->add_flag("--labels-text", gen_labels_text, "write labels.txt instead of labels.ply");

  // grid
  auto* grid = app.add_subcommand("grid", "sweep noise scale x octaves");
  std::string grid_in, grid_out, grid_in_fmt, grid_out_fmt;
  std::vector<double> grid_scales{1, 2, 3, 4};
  std::vector<int> grid_octaves{1, 2, 3, 4};
  std::uint64_t grid_seed = 0;
  unsigned grid_threads = 0;
  bool grid_overwrite = false, grid_no_viz = false;
  ParamFlags grid_params;
  grid->add_option("input", grid_in, "input cloud")->required();
  grid->add_option("output", grid_out, "output directory")->required();
  grid->add_option("--scales", grid_scales, "row values of s")->delimiter(',');
  grid->add_option("--octaves", grid_octaves, "column values of o")->delimiter(',');
  auto* grid_seed_opt = grid->add_option("--seed", grid_seed, "noise seed (default: input hash)");
  grid->add_option("--threads", grid_threads, "worker threads (default: all cores)");
  grid_params.add(*grid, false);
  grid->add_option("--input-format", grid_in_fmt, "ply, xyz or opc");
  grid->add_option("--output-format", grid_out_fmt, "ply, xyz or opc");
  grid->add_flag("--overwrite", grid_overwrite, "replace existing result files");
  grid->add_flag("--no-viz", grid_no_viz, "skip viz.ply");

  // serve
  auto* serve = app.add_subcommand("serve", "HTTP API for the parameter explorer");
  int port = 8080;
  std::string host = "127.0.0.1", fixtures_dir;
  serve->add_option("--port", port, "TCP port (0 picks a free one)");
  serve->add_option("--host", host, "bind address");
  serve->add_option("--fixtures", fixtures_dir, "directory of .ply/.xyz/.opc clouds");

  // make-fixture
  auto* make = app.add_subcommand("make-fixture", "write a synthetic test cloud");
  std::string fixture_kind, fixture_out;
  std::size_t height = 100, width = 100, count = 5000;
  double jitter = 0.0;
  std::uint64_t fixture_seed = 1;
  bool make_overwrite = false;
  make->add_option("kind", fixture_kind, "plane or sphere_cap")
      ->required()
      ->check(CLI::IsMember({"plane", "sphere_cap"}));
  make->add_option("output", fixture_out, "output file (.opc, .ply or .xyz)")->required();
  make->add_option("--height", height, "plane rows");
  make->add_option("--width", width, "plane columns");
  make->add_option("--count", count, "sphere cap points");
  make->add_option("--jitter", jitter, "sphere cap angular jitter (radians)");
  make->add_option("--seed", fixture_seed, "jitter seed");
  make->add_flag("--overwrite", make_overwrite, "replace an existing file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) {
      GenerateOptions o;
      if (!gen_meta.empty()) o.from_meta = gen_meta;
      if (gen_paths.size() == 2) {
        o.input = gen_paths[0];
        o.output = gen_paths[1];
      } else if (o.from_meta) {
        o.output = gen_paths[0];
      } else {
        throw Error(ErrorCode::InvalidParameter, "generate",
                    "expected INPUT and OUTPUT_DIR", "paths");
      }
      if (!gen_profile.empty()) o.profile = gen_profile;
      o.overrides = gen_params.overrides();
      if (gen_seed_opt->count()) o.seed = gen_seed;
      o.input_format = format_opt(gen_in_fmt);
      o.output_format = format_opt(gen_out_fmt);
      o.overwrite = gen_overwrite;
      o.visualization = !gen_no_viz;
      o.labels_as_text = gen_labels_text;
      const GenerateOutcome out = run_generate(o);
      for (const auto& w : out.warnings) spdlog::warn("{}", w);
      std::cout << out.summary_line() << '\n';
    } else if (grid->parsed()) {
      GridOptions o;
      o.input = grid_in;
      o.output = grid_out;
      o.scales = grid_scales;
      o.octaves = grid_octaves;
      o.overrides = grid_params.overrides();
      if (grid_seed_opt->count()) o.seed = grid_seed;
      o.threads = grid_threads;
      o.input_format = format_opt(grid_in_fmt);
      o.output_format = format_opt(grid_out_fmt);
      o.overwrite = grid_overwrite;
      o.visualization = !grid_no_viz;
      const GridOutcome out = run_grid(o);
      std::cout << "grid " << o.scales.size() << "x" << o.octaves.size() << " cells "
                << out.cells.size() - out.failures() << " ok " << out.failures()
                << " failed seed " << out.seed << " manifest " << out.manifest.string() << '\n';
    } else if (serve->parsed()) {
      configure_logging("info");
      ExplorerServer server{ExplorerApi(fixtures_dir)};
      const int bound = server.bind(host, port);
      g_server = &server;
      std::signal(SIGINT, handle_signal);
      std::signal(SIGTERM, handle_signal);
      spdlog::info("serving on http://{}:{}", host, bound);
      std::cout << "listening on " << host << ":" << bound << std::endl;
      server.run();
      g_server = nullptr;
    } else if (make->parsed()) {
      const PointCloud cloud = fixture_kind == "plane"
                                   ? fixtures::plane(height, width)
                                   : fixtures::sphere_cap(count, 1.0, 45.0, jitter, fixture_seed);
      write_cloud(cloud, fixture_out, format_from_path(fixture_out), make_overwrite);
      std::cout << "wrote " << cloud.size() << " points to " << fixture_out << '\n';
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
  return 0;
}
