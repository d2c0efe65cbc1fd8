#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

#include "io/ply_writer.hpp"
#include "pnas3d/error.hpp"
#include "pnas3d/io.hpp"

namespace pnas3d {

namespace {

[[noreturn]] void parse_fail(const std::string& what) {
  throw Error(ErrorCode::ParseError, "read_cloud", what);
}

template <typename T>
T load_le(const char* src) {
  T value;
  std::memcpy(&value, src, sizeof(T));
  if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
    auto* bytes = reinterpret_cast<unsigned char*>(&value);
    std::reverse(bytes, bytes + sizeof(T));
  }
  return value;
}

template <typename T>
void store_le(std::string& out, T value) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
    std::reverse(bytes, bytes + sizeof(T));
  }
  out.append(bytes, sizeof(T));
}

bool parse_number(std::string_view token, double& out) {
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), out);
  return ec == std::errc() && ptr == token.data() + token.size();
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

// Line-by-line cursor that tracks 1-based line numbers.
class LineReader {
 public:
  explicit LineReader(std::string_view text) : text_(text) {}

  bool next(std::string_view& line) {
    if (pos_ >= text_.size()) return false;
    const std::size_t end = text_.find('\n', pos_);
    const std::size_t stop = end == std::string_view::npos ? text_.size() : end;
    line = text_.substr(pos_, stop - pos_);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos_ = end == std::string_view::npos ? text_.size() : end + 1;
    ++line_no_;
    return true;
  }

  std::size_t line_no() const { return line_no_; }
  std::size_t offset() const { return pos_; }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_no_ = 0;
};

// --- XYZ --------------------------------------------------------------------

PointCloud decode_xyz(std::string_view text) {
  LineReader reader(text);
  std::vector<Vec3> points;
  std::string_view line;
  while (reader.next(line)) {
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    const auto tokens = split_ws(line);
    if (tokens.empty()) continue;
    if (tokens.size() != 3) {
      parse_fail("line " + std::to_string(reader.line_no()) + ": expected 3 values, got " +
                 std::to_string(tokens.size()));
    }
    Vec3 p;
    for (int a = 0; a < 3; ++a) {
      if (!parse_number(tokens[static_cast<std::size_t>(a)], p[a])) {
        parse_fail("line " + std::to_string(reader.line_no()) + ": bad number '" +
                   std::string(tokens[static_cast<std::size_t>(a)]) + "'");
      }
    }
    points.push_back(p);
  }
  if (points.empty()) parse_fail("no points in XYZ data");
  return PointCloud(std::move(points));
}

// --- OPC --------------------------------------------------------------------

constexpr std::string_view kOpcMagic = "OPC1";
constexpr std::size_t kOpcHeader = 12;

PointCloud decode_opc(std::string_view bytes) {
  if (bytes.size() < kOpcHeader) {
    parse_fail("byte 0: OPC header needs 12 bytes, file has " + std::to_string(bytes.size()));
  }
  if (bytes.substr(0, 4) != kOpcMagic) parse_fail("byte 0: missing OPC1 magic");
  const auto height = load_le<std::uint32_t>(bytes.data() + 4);
  const auto width = load_le<std::uint32_t>(bytes.data() + 8);
  if (height == 0 || width == 0) parse_fail("byte 4: zero raster dimension");
  const std::uint64_t count = std::uint64_t{height} * width;
  const std::uint64_t expected = kOpcHeader + count * 12;
  if (bytes.size() != expected) {
    parse_fail("byte " + std::to_string(std::min<std::uint64_t>(bytes.size(), expected)) +
               ": expected " + std::to_string(expected) + " bytes for a " +
               std::to_string(height) + "x" + std::to_string(width) + " raster, got " +
               std::to_string(bytes.size()));
  }
  std::vector<Vec3> points(count);
  const char* src = bytes.data() + kOpcHeader;
  for (std::size_t i = 0; i < count; ++i, src += 12) {
    points[i] = Vec3(load_le<float>(src), load_le<float>(src + 4), load_le<float>(src + 8));
  }
  return PointCloud::from_raster(std::move(points), RasterShape{height, width});
}

std::string encode_opc(const PointCloud& cloud) {
  const RasterShape shape = cloud.shape().value_or(RasterShape{1, cloud.size()});
  std::string out;
  out.reserve(kOpcHeader + cloud.size() * 12);
  out.append(kOpcMagic);
  store_le<std::uint32_t>(out, static_cast<std::uint32_t>(shape.height));
  store_le<std::uint32_t>(out, static_cast<std::uint32_t>(shape.width));
  for (const Vec3& p : cloud.points()) {
    store_le<float>(out, static_cast<float>(p.x()));
    store_le<float>(out, static_cast<float>(p.y()));
    store_le<float>(out, static_cast<float>(p.z()));
  }
  return out;
}

// --- PLY --------------------------------------------------------------------

enum class PlyType { Int8, UInt8, Int16, UInt16, Int32, UInt32, Float32, Float64 };

std::optional<PlyType> ply_type(std::string_view name) {
  if (name == "char" || name == "int8") return PlyType::Int8;
  if (name == "uchar" || name == "uint8") return PlyType::UInt8;
  if (name == "short" || name == "int16") return PlyType::Int16;
  if (name == "ushort" || name == "uint16") return PlyType::UInt16;
  if (name == "int" || name == "int32") return PlyType::Int32;
  if (name == "uint" || name == "uint32") return PlyType::UInt32;
  if (name == "float" || name == "float32") return PlyType::Float32;
  if (name == "double" || name == "float64") return PlyType::Float64;
  return std::nullopt;
}

std::size_t type_size(PlyType t) {
  switch (t) {
    case PlyType::Int8:
    case PlyType::UInt8: return 1;
    case PlyType::Int16:
    case PlyType::UInt16: return 2;
    case PlyType::Int32:
    case PlyType::UInt32:
    case PlyType::Float32: return 4;
    case PlyType::Float64: return 8;
  }
  return 0;
}

double load_scalar(PlyType t, const char* src) {
  switch (t) {
    case PlyType::Int8: return load_le<std::int8_t>(src);
    case PlyType::UInt8: return load_le<std::uint8_t>(src);
    case PlyType::Int16: return load_le<std::int16_t>(src);
    case PlyType::UInt16: return load_le<std::uint16_t>(src);
    case PlyType::Int32: return load_le<std::int32_t>(src);
    case PlyType::UInt32: return load_le<std::uint32_t>(src);
    case PlyType::Float32: return load_le<float>(src);
    case PlyType::Float64: return load_le<double>(src);
  }
  return 0.0;
}

struct PlyProperty {
  std::string name;
  PlyType type = PlyType::Float32;
  bool is_list = false;
  PlyType count_type = PlyType::UInt8;
};

struct PlyElement {
  std::string name;
  std::uint64_t count = 0;
  std::vector<PlyProperty> properties;
};

struct PlyHeader {
  bool binary = false;
  std::vector<PlyElement> elements;
  std::optional<RasterShape> raster;
  std::size_t body_offset = 0;
  std::size_t header_lines = 0;
};

PlyHeader parse_ply_header(std::string_view bytes) {
  LineReader reader(bytes);
  PlyHeader header;
  std::string_view line;
  if (!reader.next(line) || line != "ply") parse_fail("line 1: missing 'ply' magic");
  bool saw_format = false;
  while (true) {
    if (!reader.next(line)) parse_fail("line " + std::to_string(reader.line_no()) + ": header has no end_header");
    const auto tokens = split_ws(line);
    const std::string where = "line " + std::to_string(reader.line_no()) + ": ";
    if (tokens.empty()) continue;
    const std::string_view key = tokens[0];
    if (key == "end_header") break;
    if (key == "format") {
      if (tokens.size() < 2) parse_fail(where + "incomplete format line");
      if (tokens[1] == "ascii") {
        header.binary = false;
      } else if (tokens[1] == "binary_little_endian") {
        header.binary = true;
      } else {
        parse_fail(where + "unsupported PLY format '" + std::string(tokens[1]) + "'");
      }
      saw_format = true;
    } else if (key == "comment") {
      if (tokens.size() == 4 && tokens[1] == "raster") {
        double h = 0, w = 0;
        if (parse_number(tokens[2], h) && parse_number(tokens[3], w) && h >= 1 && w >= 1) {
          header.raster = RasterShape{static_cast<std::size_t>(h), static_cast<std::size_t>(w)};
        }
      }
    } else if (key == "obj_info") {
      continue;
    } else if (key == "element") {
      double count = 0;
      if (tokens.size() != 3 || !parse_number(tokens[2], count) || count < 0) {
        parse_fail(where + "malformed element line");
      }
      header.elements.push_back({std::string(tokens[1]), static_cast<std::uint64_t>(count), {}});
    } else if (key == "property") {
      if (header.elements.empty()) parse_fail(where + "property before any element");
      PlyProperty prop;
      if (tokens.size() == 5 && tokens[1] == "list") {
        const auto ct = ply_type(tokens[2]);
        const auto vt = ply_type(tokens[3]);
        if (!ct || !vt) parse_fail(where + "unknown list property type");
        prop = {std::string(tokens[4]), *vt, true, *ct};
      } else if (tokens.size() == 3) {
        const auto t = ply_type(tokens[1]);
        if (!t) parse_fail(where + "unknown property type '" + std::string(tokens[1]) + "'");
        prop = {std::string(tokens[2]), *t, false, PlyType::UInt8};
      } else {
        parse_fail(where + "malformed property line");
      }
      header.elements.back().properties.push_back(prop);
    } else {
      parse_fail(where + "unexpected header keyword '" + std::string(key) + "'");
    }
  }
  if (!saw_format) parse_fail("PLY header has no format line");
  header.body_offset = reader.offset();
  header.header_lines = reader.line_no();
  return header;
}

struct VertexColumns {
  int x = -1, y = -1, z = -1, valid = -1;
};

VertexColumns locate_vertex_columns(const PlyElement& vertex) {
  VertexColumns cols;
  for (std::size_t i = 0; i < vertex.properties.size(); ++i) {
    const auto& p = vertex.properties[i];
    int* slot = nullptr;
    if (p.name == "x") slot = &cols.x;
    else if (p.name == "y") slot = &cols.y;
    else if (p.name == "z") slot = &cols.z;
    else if (p.name == "valid") slot = &cols.valid;
    if (!slot) continue;
    if (p.is_list) parse_fail("vertex property '" + p.name + "' cannot be a list");
    if (slot != &cols.valid && p.type != PlyType::Float32 && p.type != PlyType::Float64) {
      parse_fail("vertex property '" + p.name + "' must be float or double");
    }
    *slot = static_cast<int>(i);
  }
  if (cols.x < 0 || cols.y < 0 || cols.z < 0) parse_fail("vertex element lacks x, y or z");
  return cols;
}

PointCloud assemble(std::vector<Vec3> points, std::vector<std::uint8_t> validity,
                    bool has_validity, const std::optional<RasterShape>& raster) {
  if (points.empty()) parse_fail("PLY holds no vertices");
  if (raster && raster->height * raster->width == points.size()) {
    if (!has_validity) return PointCloud::from_raster(std::move(points), *raster);
    return PointCloud(std::move(points), std::move(validity), *raster);
  }
  return PointCloud(std::move(points), std::move(validity));
}

PointCloud decode_ply(std::string_view bytes, std::vector<std::string>* warnings) {
  const PlyHeader header = parse_ply_header(bytes);
  std::vector<Vec3> points;
  std::vector<std::uint8_t> validity;
  bool has_vertex = false;
  bool has_validity = false;

  auto skipped = [&](const PlyElement& e) {
    if (warnings) {
      warnings->push_back("UnsupportedProperty: skipped PLY element '" + e.name + "' (" +
                          std::to_string(e.count) + " entries)");
    }
  };

  if (header.binary) {
    std::size_t pos = header.body_offset;
    auto need = [&](std::size_t n) {
      if (pos + n > bytes.size()) {
        parse_fail("byte " + std::to_string(pos) + ": truncated binary PLY body");
      }
    };
    for (const auto& element : header.elements) {
      const bool is_vertex = element.name == "vertex" && !has_vertex;
      VertexColumns cols;
      if (is_vertex) {
        cols = locate_vertex_columns(element);
        has_vertex = true;
        has_validity = cols.valid >= 0;
        points.resize(element.count);
        validity.assign(element.count, 1);
      } else {
        skipped(element);
      }
      for (std::uint64_t row = 0; row < element.count; ++row) {
        for (std::size_t c = 0; c < element.properties.size(); ++c) {
          const auto& prop = element.properties[c];
          if (prop.is_list) {
            need(type_size(prop.count_type));
            const double n = load_scalar(prop.count_type, bytes.data() + pos);
            pos += type_size(prop.count_type);
            const std::size_t len = static_cast<std::size_t>(n) * type_size(prop.type);
            need(len);
            pos += len;
            continue;
          }
          const std::size_t size = type_size(prop.type);
          need(size);
          if (is_vertex) {
            const double v = load_scalar(prop.type, bytes.data() + pos);
            const int ci = static_cast<int>(c);
            if (ci == cols.x) points[row].x() = v;
            else if (ci == cols.y) points[row].y() = v;
            else if (ci == cols.z) points[row].z() = v;
            else if (ci == cols.valid) validity[row] = v != 0.0 ? 1 : 0;
          }
          pos += size;
        }
      }
    }
  } else {
    LineReader reader(bytes.substr(header.body_offset));
    std::string_view line;
    for (const auto& element : header.elements) {
      const bool is_vertex = element.name == "vertex" && !has_vertex;
      VertexColumns cols;
      if (is_vertex) {
        cols = locate_vertex_columns(element);
        has_vertex = true;
        has_validity = cols.valid >= 0;
        points.resize(element.count);
        validity.assign(element.count, 1);
      } else {
        skipped(element);
      }
      for (std::uint64_t row = 0; row < element.count; ++row) {
        if (!reader.next(line)) {
          parse_fail("line " + std::to_string(header.header_lines + reader.line_no() + 1) +
                     ": unexpected end of ASCII PLY body");
        }
        if (!is_vertex) continue;
        const auto tokens = split_ws(line);
        const std::size_t line_no = header.header_lines + reader.line_no();
        if (tokens.size() < element.properties.size()) {
          parse_fail("line " + std::to_string(line_no) + ": expected " +
                     std::to_string(element.properties.size()) + " values");
        }
        auto value = [&](int col) {
          double v = 0;
          if (!parse_number(tokens[static_cast<std::size_t>(col)], v)) {
            parse_fail("line " + std::to_string(line_no) + ": bad number '" +
                       std::string(tokens[static_cast<std::size_t>(col)]) + "'");
          }
          return v;
        };
        if (std::any_of(element.properties.begin(), element.properties.end(),
                        [](const PlyProperty& p) { return p.is_list; })) {
          parse_fail("line " + std::to_string(line_no) + ": list properties on vertices are not supported");
        }
        points[row] = Vec3(value(cols.x), value(cols.y), value(cols.z));
        if (cols.valid >= 0) validity[row] = value(cols.valid) != 0.0 ? 1 : 0;
      }
    }
  }
  if (!has_vertex) parse_fail("PLY has no vertex element");
  return assemble(std::move(points), std::move(validity), has_validity, header.raster);
}

std::string encode_ply(const PointCloud& cloud) {
  const auto points = cloud.points();
  std::vector<std::string> comments;
  if (cloud.shape()) {
    comments.push_back("raster " + std::to_string(cloud.shape()->height) + " " +
                       std::to_string(cloud.shape()->width));
  }
  using detail::PlyColumn;
  using detail::PlyScalar;
  std::vector<PlyColumn> columns = {
      {"x", PlyScalar::Double, [&](std::size_t i) { return points[i].x(); }},
      {"y", PlyScalar::Double, [&](std::size_t i) { return points[i].y(); }},
      {"z", PlyScalar::Double, [&](std::size_t i) { return points[i].z(); }},
  };
  if (cloud.organized() || cloud.valid_count() != cloud.size()) {
    columns.push_back({"valid", PlyScalar::UChar,
                       [&](std::size_t i) { return cloud.is_valid(i) ? 1.0 : 0.0; }});
  }
  return detail::encode_vertex_ply(cloud.size(), comments, columns);
}

}  // namespace

namespace detail {

std::string encode_vertex_ply(std::size_t count, const std::vector<std::string>& comments,
                              const std::vector<PlyColumn>& columns) {
  std::string out = "ply\nformat binary_little_endian 1.0\ncomment pnas3d ";
  out += kToolVersion;
  out += '\n';
  for (const auto& c : comments) out += "comment " + c + "\n";
  out += "element vertex " + std::to_string(count) + "\n";
  for (const auto& col : columns) {
    const char* type = col.type == PlyScalar::UChar   ? "uchar"
                       : col.type == PlyScalar::Float ? "float"
                                                      : "double";
    out += std::string("property ") + type + " " + col.name + "\n";
  }
  out += "end_header\n";
  for (std::size_t i = 0; i < count; ++i) {
    for (const auto& col : columns) {
      const double v = col.value(i);
      switch (col.type) {
        case PlyScalar::UChar: store_le<std::uint8_t>(out, static_cast<std::uint8_t>(v)); break;
        case PlyScalar::Float: store_le<float>(out, static_cast<float>(v)); break;
        case PlyScalar::Double: store_le<double>(out, v); break;
      }
    }
  }
  return out;
}

}  // namespace detail

std::string_view to_string(CloudFormat format) noexcept {
  switch (format) {
    case CloudFormat::Ply: return "ply";
    case CloudFormat::Xyz: return "xyz";
    case CloudFormat::Opc: return "opc";
  }
  return "opc";
}

std::string_view extension(CloudFormat format) noexcept { return to_string(format); }

CloudFormat parse_cloud_format(std::string_view name) {
  if (name == "ply") return CloudFormat::Ply;
  if (name == "xyz") return CloudFormat::Xyz;
  if (name == "opc") return CloudFormat::Opc;
  throw Error(ErrorCode::ParseError, "cloud_format",
              "unknown cloud format '" + std::string(name) + "' (expected ply, xyz or opc)");
}

CloudFormat format_from_path(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  if (!ext.empty()) ext.erase(0, 1);
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  try {
    return parse_cloud_format(ext);
  } catch (const Error&) {
    throw Error(ErrorCode::ParseError, "cloud_format",
                "cannot infer cloud format from '" + path.string() + "'");
  }
}

PointCloud decode_cloud(std::string_view bytes, CloudFormat format,
                        std::vector<std::string>* warnings) {
  switch (format) {
    case CloudFormat::Ply: return decode_ply(bytes, warnings);
    case CloudFormat::Xyz: return decode_xyz(bytes);
    case CloudFormat::Opc: return decode_opc(bytes);
  }
  parse_fail("unknown format");
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::IoError, "read_file", "cannot open '" + path.string() + "'");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) {
    throw Error(ErrorCode::IoError, "read_file", "failed reading '" + path.string() + "'");
  }
  return std::move(buf).str();
}

PointCloud read_cloud(const std::filesystem::path& path, std::optional<CloudFormat> format,
                      std::vector<std::string>* warnings) {
  const CloudFormat fmt = format ? *format : format_from_path(path);
  const std::string bytes = read_file(path);
  try {
    return decode_cloud(bytes, fmt, warnings);
  } catch (const Error& e) {
    throw Error(e.code(), e.stage(), path.string() + ": " + e.detail(), e.field());
  }
}

std::string encode_cloud(const PointCloud& cloud, CloudFormat format) {
  switch (format) {
    case CloudFormat::Ply: return encode_ply(cloud);
    case CloudFormat::Opc: return encode_opc(cloud);
    case CloudFormat::Xyz: {
      std::string out;
      for (const Vec3& p : cloud.points()) {
        out += format_double(p.x());
        out += ' ';
        out += format_double(p.y());
        out += ' ';
        out += format_double(p.z());
        out += '\n';
      }
      return out;
    }
  }
  return {};
}

void write_file(const std::filesystem::path& path, std::string_view bytes, bool overwrite) {
  if (!overwrite && std::filesystem::exists(path)) {
    throw Error(ErrorCode::IoError, "write_file",
                "'" + path.string() + "' exists; pass the overwrite flag to replace it");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::IoError, "write_file", "cannot open '" + path.string() + "' for writing");
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw Error(ErrorCode::IoError, "write_file", "failed writing '" + path.string() + "'");
  }
}

void write_cloud(const PointCloud& cloud, const std::filesystem::path& path, CloudFormat format,
                 bool overwrite) {
  write_file(path, encode_cloud(cloud, format), overwrite);
}

std::string format_double(double value) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

}  // namespace pnas3d
