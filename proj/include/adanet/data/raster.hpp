#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "adanet/tensor.hpp"

namespace adanet::data {

enum class PixelType : std::uint8_t { kU8 = 1, kU16 = 2 };

// Band-interleaved-by-pixel scene. Values are held as u16 for both pixel
// types; u8 scenes only use [0, 255].
struct RasterScene {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::uint32_t channels = 4;
  PixelType dtype = PixelType::kU8;
  std::vector<std::uint16_t> data;  // (row * width + col) * channels + band
  std::vector<std::uint8_t> mask;   // empty, or width * height values in {0, 1}

  static RasterScene blank(std::uint32_t width, std::uint32_t height, std::uint32_t channels, PixelType dtype);

  [[nodiscard]] bool has_mask() const { return !mask.empty(); }
  [[nodiscard]] std::uint16_t at(std::size_t row, std::size_t col, std::size_t band) const {
    return data[(row * width + col) * channels + band];
  }
  std::uint16_t& at(std::size_t row, std::size_t col, std::size_t band) {
    return data[(row * width + col) * channels + band];
  }
  // Throws DimensionError / DomainError if the invariants do not hold.
  void validate() const;

  friend bool operator==(const RasterScene&, const RasterScene&) = default;
};

// MSRB container: "MSRB" | u8 version (1) | u32 width | u32 height |
// u32 channels | u8 dtype (1 = u8, 2 = u16) | u8 has_mask | pixels | mask.
// Integers and u16 samples are little-endian.
constexpr std::size_t kMsrbHeaderSize = 19;

std::vector<std::uint8_t> encode_msrb(const RasterScene& scene);
// FormatError on bad magic, VersionError on unknown version or dtype,
// LengthError on a short payload.
RasterScene decode_msrb(std::span<const std::uint8_t> bytes);
void write_msrb(const std::filesystem::path& path, const RasterScene& scene);
RasterScene read_msrb(const std::filesystem::path& path);

// Full-scale value of a pixel type (255 or 65535).
double full_scale(PixelType t);

// v -> v / (full_scale / 2) - 1, giving [C x H x W] in [-1, 1].
Tensor<float> normalize(const RasterScene& scene);
// Inverse of normalize with rounding and clamping to the pixel range.
std::uint16_t quantize(double normalized, PixelType t);

// PPM (P6, 8-bit). Import fills R, G, B and a zero NIR band.
RasterScene read_ppm(const std::filesystem::path& path);
// Writes bands (r, g, b) of the scene as an 8-bit PPM; u16 scenes are scaled.
void write_ppm(const std::filesystem::path& path, const RasterScene& scene, std::size_t r = 0, std::size_t g = 1,
               std::size_t b = 2);
// False-color preview: (NIR, R, G) shown as (R, G, B).
void write_false_color(const std::filesystem::path& path, const RasterScene& scene);

}  // namespace adanet::data
