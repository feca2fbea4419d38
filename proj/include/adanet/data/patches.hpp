#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "adanet/data/raster.hpp"
#include "adanet/tensor.hpp"

namespace adanet::data {

struct Patch {
  Tensor<float> image;              // C x P x P
  std::size_t row = 0, col = 0;     // origin in scene coordinates
  std::vector<std::uint8_t> label;  // P x P, empty if the scene has no mask
};

// Patches at (r * stride, c * stride) for every placement lying fully inside
// the scene. With normalize = false the raw integer values are kept.
std::vector<Patch> extract_patches(const RasterScene& scene, std::size_t patch, std::size_t stride,
                                   bool normalize = true);

// Tiling used by tile_aggregate: tiles of side `patch` every patch - overlap
// pixels, with the grid extended past the scene edge where needed.
struct TileGrid {
  std::size_t patch = 0, overlap = 0, stride = 0;
  std::size_t rows = 0, cols = 0;             // tile counts
  std::size_t padded_h = 0, padded_w = 0;     // extent covered by the grid

  static TileGrid plan(std::size_t height, std::size_t width, std::size_t patch, std::size_t overlap);
};

// Linear ramp (i + 0.5) / overlap rising over the first `overlap` pixels of a
// tile and falling over the last, 1 in between. Before normalization.
double ramp_weight(std::size_t i, std::size_t patch, std::size_t overlap);

// Per-pixel sum over tiles of the normalized blend weight (1 everywhere in
// a correct grid). Row-major height x width.
std::vector<double> blend_weight_sums(std::size_t height, std::size_t width, std::size_t patch, std::size_t overlap);

// Mirror index into [0, n) for any integer i, without edge repetition.
std::size_t reflect_index(std::ptrdiff_t i, std::size_t n);

using PatchFn = std::function<Tensor<float>(const Tensor<float>&)>;

// Runs `f` on every tile of the reflect-padded, normalized scene, blends the
// outputs with the normalized ramp weights and quantizes back to the scene's
// pixel type. The mask, if any, is copied through.
RasterScene tile_aggregate(const RasterScene& scene, const PatchFn& f, std::size_t patch, std::size_t overlap);

}  // namespace adanet::data
