#pragma once

// File formats:
//   * binary PGM (P5), 8- or 16-bit (16-bit samples big-endian), read as depth
//     with a configurable unit; the invalid_value sample marks missing depth.
//   * raw little-endian float32 grid plus a JSON sidecar
//     {"width", "height", "unit_mm", "invalid_value"}.
//   * attention maps as JSON {"height", "width", "maps": [[row-major...], ...]}.
//   * query projection weights: little-endian float32 blob plus a JSON sidecar
//     {"layers": [{"rows", "cols"}, {"rows", "cols"}]}. The blob holds, per
//     layer, rows*cols row-major weights followed by rows biases.

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "gemax/attention.hpp"
#include "gemax/core.hpp"

namespace gemax::io {

namespace fs = std::filesystem;

inline std::vector<unsigned char> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorCode::Io, "read failed for " + path.string());
  return bytes;
}

inline void write_bytes(const fs::path& path, const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot create " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

inline nlohmann::json read_json(const fs::path& path) {
  const auto bytes = read_bytes(path);
  try {
    return nlohmann::json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Malformed, path.string() + ": " + e.what());
  }
}

struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  unsigned max_value = 0;
  std::vector<std::uint16_t> samples;
};

inline GrayImage parse_pgm(const std::vector<unsigned char>& bytes) {
  std::size_t pos = 0;
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto number = [&](const char* what) {
    skip_space();
    if (pos >= bytes.size() || !std::isdigit(bytes[pos]))
      throw Error(ErrorCode::Malformed, std::string("PGM header: expected ") + what);
    unsigned long v = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      v = v * 10 + (bytes[pos++] - '0');
      if (v > 1u << 20) throw Error(ErrorCode::Malformed, std::string("PGM header: ") + what + " too large");
    }
    return v;
  };

  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5')
    throw Error(ErrorCode::Malformed, "not a binary PGM (missing P5 magic)");
  pos = 2;
  GrayImage img;
  img.width = number("width");
  img.height = number("height");
  const unsigned long maxval = number("maxval");
  if (img.width == 0 || img.height == 0) throw Error(ErrorCode::Malformed, "PGM header: zero dimension");
  if (maxval == 0 || maxval > 65535) throw Error(ErrorCode::Malformed, "PGM header: maxval outside 1..65535");
  img.max_value = static_cast<unsigned>(maxval);
  if (pos >= bytes.size() || !std::isspace(bytes[pos]))
    throw Error(ErrorCode::Malformed, "PGM header: missing separator before raster");
  ++pos;

  const std::size_t bytes_per_sample = maxval > 255 ? 2 : 1;
  const std::size_t count = img.width * img.height;
  if (bytes.size() - pos < count * bytes_per_sample)
    throw Error(ErrorCode::Malformed, "PGM raster truncated");
  img.samples.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    img.samples[i] = bytes_per_sample == 2
                         ? static_cast<std::uint16_t>((bytes[pos + 2 * i] << 8) | bytes[pos + 2 * i + 1])
                         : bytes[pos + i];
  }
  return img;
}

inline std::vector<unsigned char> encode_pgm(const GrayImage& img) {
  const std::string header = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n" +
                             std::to_string(img.max_value) + "\n";
  std::vector<unsigned char> out(header.begin(), header.end());
  const bool wide = img.max_value > 255;
  out.reserve(out.size() + img.samples.size() * (wide ? 2 : 1));
  for (std::uint16_t s : img.samples) {
    if (wide) out.push_back(static_cast<unsigned char>(s >> 8));
    out.push_back(static_cast<unsigned char>(s & 0xff));
  }
  return out;
}

struct PgmDepthOptions {
  double unit_mm = 0.1;
  unsigned invalid_value = 0;
};

inline DepthGrid depth_from_pgm(const GrayImage& img, const PgmDepthOptions& opt) {
  std::vector<double> depth(img.samples.size());
  std::vector<std::uint8_t> valid(img.samples.size());
  for (std::size_t i = 0; i < depth.size(); ++i) {
    valid[i] = img.samples[i] != opt.invalid_value ? 1 : 0;
    depth[i] = valid[i] ? img.samples[i] * opt.unit_mm : 0.0;
  }
  return DepthGrid(img.width, img.height, std::move(depth), std::move(valid));
}

/// Raw float32 grid described by a sidecar. Non-finite, negative and
/// invalid_value samples are marked invalid.
inline DepthGrid read_raw_depth(const fs::path& raw_path, const fs::path& sidecar_path) {
  const auto meta = read_json(sidecar_path);
  std::size_t width = 0, height = 0;
  double unit_mm = 1.0;
  std::optional<double> invalid;
  try {
    width = meta.at("width").get<std::size_t>();
    height = meta.at("height").get<std::size_t>();
    if (meta.contains("unit_mm")) unit_mm = meta.at("unit_mm").get<double>();
    if (meta.contains("invalid_value") && !meta.at("invalid_value").is_null())
      invalid = meta.at("invalid_value").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Malformed, sidecar_path.string() + ": " + e.what());
  }
  if (width == 0 || height == 0) throw Error(ErrorCode::Malformed, "sidecar: zero dimension");
  if (!(unit_mm > 0.0)) throw Error(ErrorCode::Malformed, "sidecar: unit_mm must be > 0");
  const auto bytes = read_bytes(raw_path);
  if (bytes.size() != width * height * 4)
    throw Error(ErrorCode::Malformed, "raw grid holds " + std::to_string(bytes.size()) + " bytes, expected " +
                                          std::to_string(width * height * 4));
  std::vector<double> depth(width * height);
  std::vector<std::uint8_t> valid(width * height);
  for (std::size_t i = 0; i < depth.size(); ++i) {
    const std::uint32_t bits = static_cast<std::uint32_t>(bytes[4 * i]) |
                               static_cast<std::uint32_t>(bytes[4 * i + 1]) << 8 |
                               static_cast<std::uint32_t>(bytes[4 * i + 2]) << 16 |
                               static_cast<std::uint32_t>(bytes[4 * i + 3]) << 24;
    const double v = std::bit_cast<float>(bits);
    const bool ok = std::isfinite(v) && v >= 0.0 && !(invalid && v == *invalid);
    valid[i] = ok ? 1 : 0;
    depth[i] = ok ? v * unit_mm : 0.0;
  }
  return DepthGrid(width, height, std::move(depth), std::move(valid));
}

inline void write_raw_depth(const fs::path& raw_path, const fs::path& sidecar_path, std::size_t width,
                            std::size_t height, const std::vector<float>& values, double unit_mm,
                            std::optional<double> invalid_value) {
  std::vector<unsigned char> bytes;
  bytes.reserve(values.size() * 4);
  for (float v : values) {
    const auto bits = std::bit_cast<std::uint32_t>(v);
    for (int b = 0; b < 4; ++b) bytes.push_back(static_cast<unsigned char>(bits >> (8 * b)));
  }
  write_bytes(raw_path, bytes);
  nlohmann::json meta = {{"width", width}, {"height", height}, {"unit_mm", unit_mm}};
  meta["invalid_value"] = invalid_value ? nlohmann::json(*invalid_value) : nlohmann::json(nullptr);
  const auto text = meta.dump(2) + "\n";
  write_bytes(sidecar_path, {text.begin(), text.end()});
}

struct DepthReadOptions {
  PgmDepthOptions pgm;
};

/// Dispatch on extension: .pgm is read directly, anything else is a raw
/// float32 grid whose sidecar is the same path with a .json extension.
inline DepthGrid read_depth(const fs::path& path, const DepthReadOptions& opt = {}) {
  if (!fs::exists(path)) throw Error(ErrorCode::Io, "no such file: " + path.string());
  auto ext = path.extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (ext == ".pgm") return depth_from_pgm(parse_pgm(read_bytes(path)), opt.pgm);
  auto sidecar = path;
  sidecar.replace_extension(".json");
  if (!fs::exists(sidecar)) throw Error(ErrorCode::Io, "raw depth needs sidecar " + sidecar.string());
  return read_raw_depth(path, sidecar);
}

/// 8-bit PGM when K <= 256, 16-bit otherwise. Pixel value = output level.
inline GrayImage to_gray(const LdrImage& image) {
  GrayImage g;
  g.width = image.width;
  g.height = image.height;
  g.max_value = image.levels_count <= 256 ? 255 : 65535;
  g.samples.reserve(image.levels.size());
  for (int v : image.levels) g.samples.push_back(static_cast<std::uint16_t>(std::clamp(v, 0, 65535)));
  return g;
}

inline void write_ldr_pgm(const fs::path& path, const LdrImage& image) { write_bytes(path, encode_pgm(to_gray(image))); }

inline void write_mask_pgm(const fs::path& path, const DepthGrid& grid) {
  GrayImage g{grid.width(), grid.height(), 255, {}};
  for (auto v : grid.valid_mask()) g.samples.push_back(v ? 255 : 0);
  write_bytes(path, encode_pgm(g));
}

inline nlohmann::json maps_to_json(const std::vector<AttentionMap>& maps) {
  nlohmann::json j;
  j["height"] = maps.empty() ? 0 : maps.front().height;
  j["width"] = maps.empty() ? 0 : maps.front().width;
  j["maps"] = nlohmann::json::array();
  for (const auto& m : maps) j["maps"].push_back(m.values);
  return j;
}

inline std::vector<AttentionMap> maps_from_json(const nlohmann::json& j) {
  try {
    const auto h = j.at("height").get<std::size_t>();
    const auto w = j.at("width").get<std::size_t>();
    std::vector<AttentionMap> maps;
    for (const auto& m : j.at("maps")) {
      auto values = m.get<std::vector<double>>();
      if (values.size() != h * w)
        throw Error(ErrorCode::Malformed, "attention map has " + std::to_string(values.size()) +
                                              " values, expected " + std::to_string(h * w));
      maps.emplace_back(h, w, std::move(values));
    }
    return maps;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Malformed, std::string("attention maps: ") + e.what());
  }
}

inline void write_json(const fs::path& path, const nlohmann::json& j) {
  const auto text = j.dump() + "\n";
  write_bytes(path, {text.begin(), text.end()});
}

inline QueryProjection read_projection(const fs::path& blob_path, const fs::path& sidecar_path) {
  const auto meta = read_json(sidecar_path);
  std::vector<std::pair<std::size_t, std::size_t>> shapes;
  try {
    for (const auto& layer : meta.at("layers"))
      shapes.emplace_back(layer.at("rows").get<std::size_t>(), layer.at("cols").get<std::size_t>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Malformed, sidecar_path.string() + ": " + e.what());
  }
  if (shapes.size() != 2) throw Error(ErrorCode::Malformed, "projection needs exactly two layers");
  if (shapes[0].first != shapes[1].second)
    throw Error(ErrorCode::Malformed, "encoder output size must equal decoder input size");

  const auto bytes = read_bytes(blob_path);
  std::size_t expected = 0;
  for (auto [r, c] : shapes) expected += (r * c + r) * 4;
  if (bytes.size() != expected)
    throw Error(ErrorCode::Malformed, "weights blob holds " + std::to_string(bytes.size()) + " bytes, expected " +
                                          std::to_string(expected));
  std::size_t offset = 0;
  auto next = [&] {
    const std::uint32_t bits = static_cast<std::uint32_t>(bytes[offset]) |
                               static_cast<std::uint32_t>(bytes[offset + 1]) << 8 |
                               static_cast<std::uint32_t>(bytes[offset + 2]) << 16 |
                               static_cast<std::uint32_t>(bytes[offset + 3]) << 24;
    offset += 4;
    const double v = std::bit_cast<float>(bits);
    if (!std::isfinite(v)) throw Error(ErrorCode::Malformed, "non-finite projection weight");
    return v;
  };
  auto layer = [&](std::size_t rows, std::size_t cols) {
    AffineLayer l{rows, cols, std::vector<double>(rows * cols), std::vector<double>(rows)};
    for (auto& w : l.weights) w = next();
    for (auto& b : l.bias) b = next();
    return l;
  };
  QueryProjection p;
  p.encoder = layer(shapes[0].first, shapes[0].second);
  p.decoder = layer(shapes[1].first, shapes[1].second);
  return p;
}

}  // namespace gemax::io
