#include "adanet/data/patches.hpp"

#include <algorithm>
#include <string>

#include "adanet/errors.hpp"

namespace adanet::data {

std::vector<Patch> extract_patches(const RasterScene& scene, std::size_t patch, std::size_t stride, bool normalize) {
  scene.validate();
  if (stride == 0) throw ParameterError("extract_patches: stride must be positive");
  if (patch == 0 || patch > scene.width || patch > scene.height) {
    throw DimensionError("extract_patches: patch " + std::to_string(patch) + " larger than scene " +
                         std::to_string(scene.width) + "x" + std::to_string(scene.height));
  }
  const std::size_t c = scene.channels;
  const double half = full_scale(scene.dtype) / 2.0;
  std::vector<Patch> out;
  for (std::size_t r0 = 0; r0 + patch <= scene.height; r0 += stride) {
    for (std::size_t c0 = 0; c0 + patch <= scene.width; c0 += stride) {
      std::vector<float> v(c * patch * patch);
      for (std::size_t i = 0; i < patch; ++i)
        for (std::size_t j = 0; j < patch; ++j)
          for (std::size_t b = 0; b < c; ++b) {
            const double raw = scene.at(r0 + i, c0 + j, b);
            v[(b * patch + i) * patch + j] = static_cast<float>(normalize ? raw / half - 1.0 : raw);
          }
      Patch p;
      p.image = Tensor<float>::from({c, patch, patch}, std::move(v));
      p.row = r0;
      p.col = c0;
      if (scene.has_mask()) {
        p.label.resize(patch * patch);
        for (std::size_t i = 0; i < patch; ++i)
          for (std::size_t j = 0; j < patch; ++j) p.label[i * patch + j] = scene.mask[(r0 + i) * scene.width + c0 + j];
      }
      out.push_back(std::move(p));
    }
  }
  return out;
}

TileGrid TileGrid::plan(std::size_t height, std::size_t width, std::size_t patch, std::size_t overlap) {
  if (patch == 0) throw ParameterError("tiling: patch must be positive");
  if (overlap >= patch) throw ParameterError("tiling: overlap must be smaller than the patch");
  TileGrid g;
  g.patch = patch;
  g.overlap = overlap;
  g.stride = patch - overlap;
  auto count = [&](std::size_t n) {
    if (n <= patch) return std::size_t{1};
    return (n - overlap + g.stride - 1) / g.stride;
  };
  g.rows = count(height);
  g.cols = count(width);
  g.padded_h = (g.rows - 1) * g.stride + patch;
  g.padded_w = (g.cols - 1) * g.stride + patch;
  return g;
}

double ramp_weight(std::size_t i, std::size_t patch, std::size_t overlap) {
  if (overlap == 0) return 1.0;
  const double o = static_cast<double>(overlap);
  const double rise = (static_cast<double>(i) + 0.5) / o;
  const double fall = (static_cast<double>(patch - i) - 0.5) / o;
  return std::min({1.0, rise, fall});
}

std::size_t reflect_index(std::ptrdiff_t i, std::size_t n) {
  if (n == 1) return 0;
  const auto period = static_cast<std::ptrdiff_t>(2 * (n - 1));
  std::ptrdiff_t m = i % period;
  if (m < 0) m += period;
  return static_cast<std::size_t>(m < static_cast<std::ptrdiff_t>(n) ? m : period - m);
}

namespace {

// Unnormalized weight sum per padded pixel.
std::vector<double> raw_weight_sums(const TileGrid& g) {
  std::vector<double> sums(g.padded_h * g.padded_w, 0.0);
  for (std::size_t tr = 0; tr < g.rows; ++tr)
    for (std::size_t tc = 0; tc < g.cols; ++tc)
      for (std::size_t i = 0; i < g.patch; ++i) {
        const double wi = ramp_weight(i, g.patch, g.overlap);
        double* row = sums.data() + (tr * g.stride + i) * g.padded_w + tc * g.stride;
        for (std::size_t j = 0; j < g.patch; ++j) row[j] += wi * ramp_weight(j, g.patch, g.overlap);
      }
  return sums;
}

}  // namespace

std::vector<double> blend_weight_sums(std::size_t height, std::size_t width, std::size_t patch, std::size_t overlap) {
  const TileGrid g = TileGrid::plan(height, width, patch, overlap);
  const auto raw = raw_weight_sums(g);
  std::vector<double> out(height * width, 0.0);
  for (std::size_t tr = 0; tr < g.rows; ++tr)
    for (std::size_t tc = 0; tc < g.cols; ++tc)
      for (std::size_t i = 0; i < g.patch; ++i)
        for (std::size_t j = 0; j < g.patch; ++j) {
          const std::size_t r = tr * g.stride + i, c = tc * g.stride + j;
          if (r >= height || c >= width) continue;
          const double w = ramp_weight(i, g.patch, g.overlap) * ramp_weight(j, g.patch, g.overlap);
          out[r * width + c] += w / raw[r * g.padded_w + c];
        }
  return out;
}

RasterScene tile_aggregate(const RasterScene& scene, const PatchFn& f, std::size_t patch, std::size_t overlap) {
  scene.validate();
  const std::size_t h = scene.height, w = scene.width, c = scene.channels;
  const TileGrid g = TileGrid::plan(h, w, patch, overlap);
  const double half = full_scale(scene.dtype) / 2.0;
  const auto raw = raw_weight_sums(g);

  std::vector<std::size_t> row_src(g.padded_h), col_src(g.padded_w);
  for (std::size_t i = 0; i < g.padded_h; ++i) row_src[i] = reflect_index(static_cast<std::ptrdiff_t>(i), h);
  for (std::size_t j = 0; j < g.padded_w; ++j) col_src[j] = reflect_index(static_cast<std::ptrdiff_t>(j), w);

  std::vector<double> acc(c * h * w, 0.0);
  std::vector<float> tile(c * patch * patch);
  for (std::size_t tr = 0; tr < g.rows; ++tr) {
    for (std::size_t tc = 0; tc < g.cols; ++tc) {
      const std::size_t r0 = tr * g.stride, c0 = tc * g.stride;
      for (std::size_t b = 0; b < c; ++b)
        for (std::size_t i = 0; i < patch; ++i)
          for (std::size_t j = 0; j < patch; ++j)
            tile[(b * patch + i) * patch + j] =
                static_cast<float>(scene.at(row_src[r0 + i], col_src[c0 + j], b) / half - 1.0);
      const Tensor<float> out = f(Tensor<float>::from({c, patch, patch}, tile));
      if (out.shape() != Shape{c, patch, patch}) {
        throw DimensionError("tile_aggregate: patch function changed the tile shape to " + shape_str(out.shape()));
      }
      for (std::size_t i = 0; i < patch; ++i) {
        const std::size_t r = r0 + i;
        if (r >= h) break;
        for (std::size_t j = 0; j < patch; ++j) {
          const std::size_t q = c0 + j;
          if (q >= w) break;
          const double wt = ramp_weight(i, patch, overlap) * ramp_weight(j, patch, overlap) / raw[r * g.padded_w + q];
          for (std::size_t b = 0; b < c; ++b) acc[(b * h + r) * w + q] += wt * out[(b * patch + i) * patch + j];
        }
      }
    }
  }

  RasterScene result = scene;
  for (std::size_t r = 0; r < h; ++r)
    for (std::size_t q = 0; q < w; ++q)
      for (std::size_t b = 0; b < c; ++b) result.at(r, q, b) = quantize(acc[(b * h + r) * w + q], scene.dtype);
  return result;
}

}  // namespace adanet::data
