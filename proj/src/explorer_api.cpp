#include "pnas3d/explorer_api.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <cstring>
#include <optional>
#include <thread>

#include <boost/beast/core/detail/base64.hpp>
#include <spdlog/spdlog.h>

#include "httplib.h"

#include "pnas3d/commands.hpp"
#include "pnas3d/error.hpp"
#include "pnas3d/fixtures.hpp"
#include "pnas3d/hash.hpp"
#include "pnas3d/io.hpp"
#include "pnas3d/profiles.hpp"

namespace pnas3d {

using nlohmann::json;
namespace b64 = boost::beast::detail::base64;

// --- encodings ----------------------------------------------------------------

std::string base64_encode(std::string_view bytes) {
  std::string out(b64::encoded_size(bytes.size()), '\0');
  out.resize(b64::encode(out.data(), bytes.data(), bytes.size()));
  return out;
}

std::string base64_decode(std::string_view text) {
  if (text.size() % 4 != 0) {
    throw Error(ErrorCode::ParseError, "base64", "length is not a multiple of 4");
  }
  std::size_t body = text.size();
  for (int pad = 0; pad < 2 && body > 0 && text[body - 1] == '='; ++pad) --body;
  std::string out(b64::decoded_size(text.size()), '\0');
  const auto [written, read] = b64::decode(out.data(), text.data(), body);
  if (read != body) {
    throw Error(ErrorCode::ParseError, "base64",
                "invalid base64 at byte " + std::to_string(read));
  }
  out.resize(written);
  return out;
}

namespace {

template <typename T>
void append_le(std::string& out, T value) {
  static_assert(std::endian::native == std::endian::little);
  out.append(reinterpret_cast<const char*>(&value), sizeof value);
}

}  // namespace

std::string pack_float32(std::span<const double> values) {
  std::string out;
  out.reserve(values.size() * 4);
  for (double v : values) append_le(out, static_cast<float>(v));
  return out;
}

std::string pack_vec3_float32(std::span<const Vec3> values) {
  std::string out;
  out.reserve(values.size() * 12);
  for (const Vec3& v : values) {
    for (int a = 0; a < 3; ++a) append_le(out, static_cast<float>(v[a]));
  }
  return out;
}

std::string pack_uint32(std::span<const std::uint32_t> values) {
  std::string out;
  out.reserve(values.size() * 4);
  for (std::uint32_t v : values) append_le(out, v);
  return out;
}

std::string pack_bitset(std::span<const std::uint8_t> flags) {
  std::string out((flags.size() + 7) / 8, '\0');
  for (std::size_t i = 0; i < flags.size(); ++i) {
    if (flags[i]) out[i / 8] = static_cast<char>(out[i / 8] | (1u << (i % 8)));
  }
  return out;
}

std::vector<std::uint8_t> unpack_bitset(std::string_view bytes, std::size_t count) {
  std::vector<std::uint8_t> flags(count);
  for (std::size_t i = 0; i < count && i / 8 < bytes.size(); ++i) {
    flags[i] = (static_cast<unsigned char>(bytes[i / 8]) >> (i % 8)) & 1u;
  }
  return flags;
}

std::vector<std::uint32_t> downsample_indices(std::span<const std::uint32_t> candidates,
                                              std::size_t target, std::uint64_t seed) {
  if (target >= candidates.size()) return {candidates.begin(), candidates.end()};
  std::vector<std::pair<std::uint64_t, std::uint32_t>> keyed(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    keyed[i] = {mix64(seed ^ mix64(candidates[i])), candidates[i]};
  }
  std::nth_element(keyed.begin(), keyed.begin() + static_cast<std::ptrdiff_t>(target),
                   keyed.end());
  std::vector<std::uint32_t> kept(target);
  for (std::size_t i = 0; i < target; ++i) kept[i] = keyed[i].second;
  std::sort(kept.begin(), kept.end());
  return kept;
}

// --- request handling -----------------------------------------------------------

namespace {

/// Failure with an HTTP status other than the default 422.
struct HttpError {
  int status;
  std::string code;
  std::string field;
  std::string message;
};

std::string error_body(const std::string& code, const std::string& stage,
                       const std::string& field, const std::string& message) {
  return json{{"error",
               {{"code", code}, {"stage", stage}, {"field", field}, {"message", message}}}}
      .dump();
}

int status_for(const Error& e) {
  return e.code() == ErrorCode::IoError ? 500 : 422;
}

struct Source {
  PointCloud cloud;
  std::uint64_t hash = 0;
  json reference;  // {"fixture": name} or {"cloud": {...}} as sent
};

json parse_body(std::string_view body) {
  try {
    json j = json::parse(body);
    if (!j.is_object()) throw HttpError{400, "ParseError", "", "request body must be a JSON object"};
    return j;
  } catch (const json::parse_error& e) {
    throw HttpError{400, "ParseError", "",
                    "malformed JSON at byte " + std::to_string(e.byte)};
  }
}

std::uint64_t seed_field(const json& j, std::uint64_t fallback) {
  if (!j.contains("seed")) return fallback;
  const json& v = j["seed"];
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
    throw Error(ErrorCode::InvalidParameter, "request", "seed: expected a non-negative integer",
                "seed");
  }
  return v.get<std::uint64_t>();
}

std::optional<std::size_t> downsample_field(const json& j) {
  if (!j.contains("downsample") || j["downsample"].is_null()) return std::nullopt;
  const json& v = j["downsample"];
  if (!v.is_number_unsigned() || v.get<std::uint64_t>() == 0) {
    throw Error(ErrorCode::InvalidParameter, "request",
                "downsample: expected a positive integer", "downsample");
  }
  return v.get<std::size_t>();
}

AnomalyParams params_field(const json& j, AnomalyParams base) {
  if (j.contains("profile") && !j["profile"].is_null()) {
    if (!j["profile"].is_string()) {
      throw Error(ErrorCode::InvalidParameter, "request", "profile: expected a string", "profile");
    }
    base = resolve_params(j["profile"].get<std::string>(), json::object());
  }
  if (j.contains("params")) apply_param_overrides(base, j["params"]);
  return base;
}

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
      .count();
}

template <typename F>
ApiResponse guarded(F&& handler) {
  const auto start = std::chrono::steady_clock::now();
  ApiResponse response;
  try {
    response.body = handler();
  } catch (const HttpError& e) {
    response.status = e.status;
    response.body = error_body(e.code, "request", e.field, e.message);
  } catch (const Error& e) {
    response.status = status_for(e);
    response.body = error_body(std::string(to_string(e.code())), e.stage(), e.field(), e.what());
  } catch (const std::exception& e) {
    response.status = 500;
    response.body = error_body("Internal", "", "", e.what());
  }
  response.compute_ms = elapsed_ms(start);
  return response;
}

json summary_json(const AnomalyResult& r) {
  const std::size_t valid = r.augmented.valid_count();
  const std::size_t masked = r.masked_count();
  return {{"valid_points", valid},
          {"masked_points", masked},
          {"masked_fraction", valid ? static_cast<double>(masked) / static_cast<double>(valid) : 0.0},
          {"effective_threshold", r.effective_threshold},
          {"max_displacement", r.max_displacement()}};
}

json warnings_json(const AnomalyResult& r) {
  return {{"constant_field", r.warnings.constant_field},
          {"degenerate_neighborhoods", r.warnings.degenerate_neighborhoods},
          {"threshold_adjusted", r.warnings.threshold_adjusted}};
}

json payload_json(const AnomalyResult& r, std::optional<std::size_t> downsample,
                  std::uint64_t seed, bool with_normals) {
  const std::size_t n = r.augmented.size();
  std::vector<std::uint32_t> indices;
  bool downsampled = false;
  if (downsample && *downsample < r.augmented.valid_count()) {
    std::vector<std::uint32_t> valid;
    valid.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (r.augmented.is_valid(i)) valid.push_back(static_cast<std::uint32_t>(i));
    }
    indices = downsample_indices(valid, *downsample, seed);
    downsampled = true;
  } else {
    indices.resize(n);
    for (std::size_t i = 0; i < n; ++i) indices[i] = static_cast<std::uint32_t>(i);
  }

  const auto points = r.augmented.points();
  std::vector<Vec3> positions, normals;
  std::vector<double> magnitude;
  std::vector<std::uint8_t> mask, valid;
  for (std::uint32_t i : indices) {
    positions.push_back(points[i]);
    normals.push_back(r.normals[i]);
    magnitude.push_back(r.signed_magnitude[i]);
    mask.push_back(r.mask[i]);
    valid.push_back(r.augmented.is_valid(i) ? 1 : 0);
  }

  json out{{"count", indices.size()},
           {"total_points", n},
           {"downsampled", downsampled},
           {"positions", base64_encode(pack_vec3_float32(positions))},
           {"signed_magnitude", base64_encode(pack_float32(magnitude))},
           {"mask", base64_encode(pack_bitset(mask))},
           {"valid", base64_encode(pack_bitset(valid))}};
  if (downsampled) out["indices"] = base64_encode(pack_uint32(indices));
  if (with_normals) out["normals"] = base64_encode(pack_vec3_float32(normals));
  return out;
}

}  // namespace

ExplorerApi::ExplorerApi(std::filesystem::path fixtures_dir)
    : fixtures_dir_(std::move(fixtures_dir)) {}

namespace {

constexpr std::string_view kBuiltins[] = {"plane", "sphere_cap"};

/// Files in `dir` with a cloud extension, keyed by stem; first in sorted
/// order wins.
std::vector<std::pair<std::string, std::filesystem::path>> fixture_files(
    const std::filesystem::path& dir) {
  std::vector<std::pair<std::string, std::filesystem::path>> out;
  if (dir.empty()) return out;
  std::error_code ec;
  std::vector<std::filesystem::path> paths;
  for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
    if (!entry.is_regular_file()) continue;
    try {
      format_from_path(entry.path());
      paths.push_back(entry.path());
    } catch (const Error&) {
    }
  }
  std::sort(paths.begin(), paths.end());
  for (const auto& p : paths) {
    const std::string stem = p.stem().string();
    if (std::none_of(out.begin(), out.end(), [&](const auto& e) { return e.first == stem; })) {
      out.emplace_back(stem, p);
    }
  }
  return out;
}

Source load_source(const json& j, const std::filesystem::path& fixtures_dir) {
  const bool has_fixture = j.contains("fixture");
  const bool has_cloud = j.contains("cloud");
  if (has_fixture == has_cloud) {
    throw Error(ErrorCode::InvalidParameter, "request",
                "fixture: give exactly one of 'fixture' and 'cloud'", "fixture");
  }
  if (has_cloud) {
    const json& c = j["cloud"];
    if (!c.is_object() || !c.contains("format") || !c["format"].is_string() ||
        !c.contains("data") || !c["data"].is_string()) {
      throw Error(ErrorCode::InvalidParameter, "request",
                  "cloud: expected {\"format\": \"ply|xyz|opc\", \"data\": base64}", "cloud");
    }
    try {
      const std::string bytes = base64_decode(c["data"].get<std::string>());
      return {decode_cloud(bytes, parse_cloud_format(c["format"].get<std::string>())),
              fnv1a64(bytes), {{"cloud", c}}};
    } catch (const Error& e) {
      throw Error(e.code(), e.stage(), e.detail(), "cloud");
    }
  }

  if (!j["fixture"].is_string()) {
    throw Error(ErrorCode::InvalidParameter, "request", "fixture: expected a name", "fixture");
  }
  const std::string name = j["fixture"].get<std::string>();
  const json reference = {{"fixture", name}};
  for (const auto& [stem, path] : fixture_files(fixtures_dir)) {
    if (stem != name) continue;
    const std::string bytes = read_file(path);
    return {decode_cloud(bytes, format_from_path(path)), fnv1a64(bytes), reference};
  }
  auto builtin = [&](PointCloud cloud) {
    const std::uint64_t hash = fnv1a64(encode_cloud(cloud, CloudFormat::Opc));
    return Source{std::move(cloud), hash, reference};
  };
  if (name == "plane") return builtin(fixtures::plane());
  if (name == "sphere_cap") return builtin(fixtures::sphere_cap());
  throw HttpError{404, "UnknownFixture", "fixture", "unknown fixture '" + name + "'"};
}

}  // namespace

std::vector<std::string> ExplorerApi::cloud_names() const {
  std::vector<std::string> names;
  for (const auto& [stem, path] : fixture_files(fixtures_dir_)) names.push_back(stem);
  for (std::string_view b : kBuiltins) {
    if (std::find(names.begin(), names.end(), b) == names.end()) names.emplace_back(b);
  }
  std::sort(names.begin(), names.end());
  return names;
}

ApiResponse ExplorerApi::clouds() const {
  return guarded([&] { return json{{"clouds", cloud_names()}}.dump(); });
}

ApiResponse ExplorerApi::profiles() const {
  return guarded([&] {
    json list = json::array();
    for (const Profile& p : builtin_profiles()) {
      list.push_back({{"name", std::string(p.name)}, {"params", params_to_json(p.params)}});
    }
    json grid = params_to_json(grid_search_defaults());
    grid.erase("scale");
    grid.erase("octaves");
    return json{{"profiles", list}, {"grid_defaults", grid}}.dump();
  });
}

ApiResponse ExplorerApi::synthesize(std::string_view body) const {
  return guarded([&] {
    const json request = parse_body(body);
    const Source source = load_source(request, fixtures_dir_);
    const AnomalyParams params = params_field(request, AnomalyParams{});
    const std::uint64_t seed = seed_field(request, source.hash);
    const auto downsample = downsample_field(request);
    const bool with_normals = request.value("normals", false);

    const AnomalyResult result = pnas3d::synthesize(source.cloud, params, seed);

    json response = payload_json(result, downsample, seed, with_normals);
    response["summary"] = summary_json(result);
    response["warnings"] = warnings_json(result);
    json echo = source.reference;
    echo["params"] = params_to_json(params);
    echo["seed"] = seed;
    echo["profile"] = request.contains("profile") ? request["profile"] : json(nullptr);
    echo["downsample"] = downsample ? json(*downsample) : json(nullptr);
    response["echo"] = echo;
    return response.dump();
  });
}

ApiResponse ExplorerApi::grid(std::string_view body) const {
  return guarded([&] {
    constexpr std::size_t kMaxSide = 8;
    const json request = parse_body(body);

    auto list_field = [&](const char* key, json fallback) {
      json v = request.contains(key) ? request[key] : fallback;
      if (!v.is_array() || v.empty()) {
        throw Error(ErrorCode::InvalidParameter, "request",
                    std::string(key) + ": expected a nonempty list", key);
      }
      if (v.size() > kMaxSide) {
        throw Error(ErrorCode::InvalidParameter, "request",
                    std::string(key) + ": at most " + std::to_string(kMaxSide) + " entries",
                    key);
      }
      return v;
    };
    const json scales = list_field("scales", {1.0, 2.0, 3.0, 4.0});
    const json octaves = list_field("octaves", {1, 2, 3, 4});

    const Source source = load_source(request, fixtures_dir_);
    const AnomalyParams fixed = params_field(request, grid_search_defaults());
    const std::uint64_t seed = seed_field(request, source.hash);
    const auto downsample = downsample_field(request);

    json cells = json::array();
    for (std::size_t row = 0; row < scales.size(); ++row) {
      for (std::size_t col = 0; col < octaves.size(); ++col) {
        AnomalyParams params = fixed;
        apply_param_overrides(params, {{"scale", scales[row]}, {"octaves", octaves[col]}});
        json cell{{"row", row}, {"col", col}, {"scale", params.noise.scale},
                  {"octaves", params.noise.octaves}};
        json replay = source.reference;
        replay["params"] = params_to_json(params);
        replay["seed"] = seed;
        if (downsample) replay["downsample"] = *downsample;
        cell["request"] = replay;
        try {
          const AnomalyResult result = pnas3d::synthesize(source.cloud, params, seed);
          cell["status"] = "ok";
          cell["summary"] = summary_json(result);
        } catch (const Error& e) {
          cell["status"] = "error";
          cell["error"] = {{"code", std::string(to_string(e.code()))},
                           {"stage", e.stage()}, {"field", e.field()}, {"message", e.what()}};
        }
        cells.push_back(std::move(cell));
      }
    }
    json fixed_json = params_to_json(fixed);
    fixed_json.erase("scale");
    fixed_json.erase("octaves");
    return json{{"rows", scales}, {"cols", octaves}, {"seed", seed},
                {"fixed_params", fixed_json}, {"cells", cells}}
        .dump();
  });
}

// --- server ---------------------------------------------------------------------

struct ExplorerServer::Impl {
  ExplorerApi api;
  httplib::Server server;
  std::thread thread;
};

namespace {

void reply(httplib::Response& res, const ApiResponse& r) {
  res.status = r.status;
  char ms[32];
  std::snprintf(ms, sizeof ms, "%.3f", r.compute_ms);
  res.set_header("X-Compute-Time-Ms", ms);
  res.set_content(r.body, "application/json");
}

std::string log_excerpt(const std::string& body) {
  constexpr std::size_t kMax = 240;
  if (body.size() <= kMax) return body;
  return body.substr(0, kMax) + "...";
}

}  // namespace

ExplorerServer::ExplorerServer(ExplorerApi api) : impl_(std::make_unique<Impl>()) {
  impl_->api = std::move(api);
  auto& s = impl_->server;
  // Plain SO_REUSEADDR: the httplib default adds SO_REUSEPORT, which would let
  // a second server share a port instead of reporting it as taken.
  s.set_socket_options([](socket_t sock) {
    int yes = 1;
    ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
  });
  const ExplorerApi* a = &impl_->api;
  s.Get("/api/clouds", [a](const httplib::Request&, httplib::Response& res) {
    reply(res, a->clouds());
  });
  s.Get("/api/profiles", [a](const httplib::Request&, httplib::Response& res) {
    reply(res, a->profiles());
  });
  s.Post("/api/synthesize", [a](const httplib::Request& req, httplib::Response& res) {
    reply(res, a->synthesize(req.body));
  });
  s.Post("/api/grid", [a](const httplib::Request& req, httplib::Response& res) {
    reply(res, a->grid(req.body));
  });
  s.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string what = "unknown failure";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    res.status = 500;
    res.set_content(error_body("Internal", "", "", what), "application/json");
  });
  s.set_logger([](const httplib::Request& req, const httplib::Response& res) {
    spdlog::info("{} {} -> {} in {} ms {}", req.method, req.path, res.status,
                 res.get_header_value("X-Compute-Time-Ms"), log_excerpt(req.body));
  });
}

ExplorerServer::~ExplorerServer() { stop(); }

int ExplorerServer::bind(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
  } else if (!impl_->server.bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) {
    throw Error(ErrorCode::IoError, "serve",
                "AddressInUse: cannot bind " + host + ":" + std::to_string(port));
  }
  return bound;
}

void ExplorerServer::run() { impl_->server.listen_after_bind(); }

void ExplorerServer::start() {
  impl_->thread = std::thread([this] { run(); });
  impl_->server.wait_until_ready();
}

void ExplorerServer::stop() {
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

void configure_logging(std::string_view fallback) {
  const char* env = std::getenv("PNAS3D_LOG");
  const std::string wanted = env && *env ? env : std::string(fallback);
  const auto level = spdlog::level::from_str(wanted);
  // from_str maps unknown names to off; only accept that for "off" itself.
  if (level == spdlog::level::off && wanted != "off") {
    spdlog::set_level(spdlog::level::from_str(std::string(fallback)));
    spdlog::warn("PNAS3D_LOG='{}' is not a log level; using {}", wanted, fallback);
    return;
  }
  spdlog::set_level(level);
}

}  // namespace pnas3d
