#include "adanet/data/raster.hpp"

#include <algorithm>
#include <cmath>
#include <cctype>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "adanet/errors.hpp"

namespace adanet::data {

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t pos) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[pos + i]) << (8 * i);
  return v;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed for " + path.string());
}

}  // namespace

RasterScene RasterScene::blank(std::uint32_t width, std::uint32_t height, std::uint32_t channels, PixelType dtype) {
  RasterScene s;
  s.width = width;
  s.height = height;
  s.channels = channels;
  s.dtype = dtype;
  s.data.assign(static_cast<std::size_t>(width) * height * channels, 0);
  return s;
}

void RasterScene::validate() const {
  if (width == 0 || height == 0 || channels == 0) throw DimensionError("raster: extents must be positive");
  if (data.size() != static_cast<std::size_t>(width) * height * channels) {
    throw DimensionError("raster: data length does not match width * height * channels");
  }
  if (!mask.empty() && mask.size() != static_cast<std::size_t>(width) * height) {
    throw DimensionError("raster: mask length does not match width * height");
  }
  if (dtype == PixelType::kU8 && std::any_of(data.begin(), data.end(), [](std::uint16_t v) { return v > 255; })) {
    throw DomainError("raster: u8 scene holds a value above 255");
  }
  if (std::any_of(mask.begin(), mask.end(), [](std::uint8_t v) { return v > 1; })) {
    throw DomainError("raster: mask values must be 0 or 1");
  }
}

std::vector<std::uint8_t> encode_msrb(const RasterScene& scene) {
  scene.validate();
  std::vector<std::uint8_t> out = {'M', 'S', 'R', 'B', 1};
  put_u32(out, scene.width);
  put_u32(out, scene.height);
  put_u32(out, scene.channels);
  out.push_back(static_cast<std::uint8_t>(scene.dtype));
  out.push_back(scene.has_mask() ? 1 : 0);
  if (scene.dtype == PixelType::kU8) {
    for (auto v : scene.data) out.push_back(static_cast<std::uint8_t>(v));
  } else {
    for (auto v : scene.data) {
      out.push_back(static_cast<std::uint8_t>(v));
      out.push_back(static_cast<std::uint8_t>(v >> 8));
    }
  }
  out.insert(out.end(), scene.mask.begin(), scene.mask.end());
  return out;
}

RasterScene decode_msrb(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "MSRB", 4) != 0) throw FormatError("not an MSRB raster (bad magic)");
  if (bytes.size() < kMsrbHeaderSize) throw LengthError("MSRB header truncated");
  if (bytes[4] != 1) throw VersionError("unsupported MSRB version " + std::to_string(bytes[4]));
  RasterScene s;
  s.width = get_u32(bytes, 5);
  s.height = get_u32(bytes, 9);
  s.channels = get_u32(bytes, 13);
  const std::uint8_t dtype = bytes[17];
  if (dtype != 1 && dtype != 2) throw VersionError("unknown MSRB dtype code " + std::to_string(dtype));
  s.dtype = static_cast<PixelType>(dtype);
  const bool has_mask = bytes[18] != 0;
  if (s.width == 0 || s.height == 0 || s.channels == 0) throw FormatError("MSRB extents must be positive");
  const std::size_t n = static_cast<std::size_t>(s.width) * s.height * s.channels;
  const std::size_t sample = dtype == 1 ? 1 : 2;
  const std::size_t mask_len = has_mask ? static_cast<std::size_t>(s.width) * s.height : 0;
  const std::size_t need = kMsrbHeaderSize + n * sample + mask_len;
  if (bytes.size() < need) {
    throw LengthError("MSRB payload holds " + std::to_string(bytes.size()) + " bytes, " + std::to_string(need) +
                      " expected");
  }
  if (bytes.size() > need) throw FormatError("trailing bytes after MSRB payload");
  s.data.resize(n);
  const std::uint8_t* p = bytes.data() + kMsrbHeaderSize;
  for (std::size_t i = 0; i < n; ++i) {
    s.data[i] = sample == 1 ? p[i] : static_cast<std::uint16_t>(p[2 * i] | (p[2 * i + 1] << 8));
  }
  s.mask.assign(p + n * sample, p + n * sample + mask_len);
  s.validate();
  return s;
}

void write_msrb(const std::filesystem::path& path, const RasterScene& scene) { write_file(path, encode_msrb(scene)); }

RasterScene read_msrb(const std::filesystem::path& path) { return decode_msrb(read_file(path)); }

double full_scale(PixelType t) { return t == PixelType::kU8 ? 255.0 : 65535.0; }

Tensor<float> normalize(const RasterScene& scene) {
  const std::size_t h = scene.height, w = scene.width, c = scene.channels;
  const double half = full_scale(scene.dtype) / 2.0;
  std::vector<float> v(c * h * w);
  for (std::size_t r = 0; r < h; ++r)
    for (std::size_t q = 0; q < w; ++q)
      for (std::size_t b = 0; b < c; ++b) v[(b * h + r) * w + q] = static_cast<float>(scene.at(r, q, b) / half - 1.0);
  return Tensor<float>::from({c, h, w}, std::move(v));
}

std::uint16_t quantize(double normalized, PixelType t) {
  const double fs = full_scale(t);
  const double v = std::round((normalized + 1.0) * fs / 2.0);
  return static_cast<std::uint16_t>(std::clamp(v, 0.0, fs));
}

RasterScene read_ppm(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  std::size_t pos = 0;
  auto token = [&]() {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
    std::string t;
    while (pos < bytes.size() && !std::isspace(bytes[pos])) t += static_cast<char>(bytes[pos++]);
    return t;
  };
  if (token() != "P6") throw FormatError(path.string() + " is not a binary PPM (P6)");
  const unsigned long w = std::stoul(token()), h = std::stoul(token()), maxval = std::stoul(token());
  if (maxval != 255) throw VersionError("only 8-bit PPM files are supported");
  ++pos;  // the single whitespace byte after maxval
  if (bytes.size() < pos + w * h * 3) throw LengthError("PPM payload truncated");
  auto s = RasterScene::blank(static_cast<std::uint32_t>(w), static_cast<std::uint32_t>(h), 4, PixelType::kU8);
  for (std::size_t i = 0; i < w * h; ++i)
    for (std::size_t b = 0; b < 3; ++b) s.data[i * 4 + b] = bytes[pos + i * 3 + b];
  return s;
}

void write_ppm(const std::filesystem::path& path, const RasterScene& scene, std::size_t r, std::size_t g,
               std::size_t b) {
  if (std::max({r, g, b}) >= scene.channels) throw DimensionError("write_ppm: band index out of range");
  const std::string header =
      "P6\n" + std::to_string(scene.width) + " " + std::to_string(scene.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  const int shift = scene.dtype == PixelType::kU8 ? 0 : 8;
  for (std::size_t i = 0; i < static_cast<std::size_t>(scene.width) * scene.height; ++i) {
    for (std::size_t band : {r, g, b}) out.push_back(static_cast<std::uint8_t>(scene.data[i * scene.channels + band] >> shift));
  }
  write_file(path, out);
}

void write_false_color(const std::filesystem::path& path, const RasterScene& scene) {
  if (scene.channels < 4) throw DimensionError("false-color export needs a NIR band");
  write_ppm(path, scene, 3, 0, 1);
}

}  // namespace adanet::data
