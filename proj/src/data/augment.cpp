#include "adanet/data/augment.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "adanet/errors.hpp"

namespace adanet::data {

AugmentConfig AugmentConfig::none() {
  AugmentConfig c;
  c.flip_h = c.flip_v = 0.0;
  c.rot90 = false;
  c.brightness = c.contrast = c.noise = c.gamma = {1.0, 1.0};
  return c;
}

void AugmentConfig::validate() const {
  for (double p : {flip_h, flip_v}) {
    if (!(p >= 0.0 && p <= 1.0)) throw ParameterError("augment: flip probabilities must lie in [0, 1]");
  }
  for (const auto& [lo, hi] : {brightness, contrast, noise, gamma}) {
    if (!(lo > 0.0 && lo <= 1.0 && hi >= 1.0)) throw ParameterError("augment: ranges must be positive and contain 1");
  }
}

namespace {

// Generic square remap: out(i, j) = in(src(i, j)).
template <typename Map>
Patch remap(const Patch& p, Map src) {
  const std::size_t c = p.image.dim(0), n = p.image.dim(1);
  if (p.image.dim(2) != n) throw DimensionError("geometric augmentation needs square patches");
  std::vector<float> v(c * n * n);
  const auto in = p.image.data();
  std::vector<std::uint8_t> label(p.label.size());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const auto [si, sj] = src(i, j, n);
      for (std::size_t b = 0; b < c; ++b) v[(b * n + i) * n + j] = in[(b * n + si) * n + sj];
      if (!label.empty()) label[i * n + j] = p.label[si * n + sj];
    }
  Patch out = p;
  out.image = Tensor<float>::from(p.image.shape(), std::move(v));
  out.label = std::move(label);
  return out;
}

}  // namespace

Patch flip_horizontal(const Patch& p) {
  return remap(p, [](std::size_t i, std::size_t j, std::size_t n) { return std::pair{i, n - 1 - j}; });
}

Patch flip_vertical(const Patch& p) {
  return remap(p, [](std::size_t i, std::size_t j, std::size_t n) { return std::pair{n - 1 - i, j}; });
}

Patch rotate90(const Patch& p, int quarter_turns) {
  const int k = ((quarter_turns % 4) + 4) % 4;
  Patch out = p;
  for (int t = 0; t < k; ++t) {
    out = remap(out, [](std::size_t i, std::size_t j, std::size_t n) { return std::pair{j, n - 1 - i}; });
  }
  return out;
}

Patch augment(const Patch& patch, const AugmentConfig& cfg, Rng& rng) {
  cfg.validate();
  Patch out = patch;
  if (cfg.enable_geometric) {
    if (cfg.flip_h > 0.0 && rng.bernoulli(cfg.flip_h)) out = flip_horizontal(out);
    if (cfg.flip_v > 0.0 && rng.bernoulli(cfg.flip_v)) out = flip_vertical(out);
    if (cfg.rot90) out = rotate90(out, static_cast<int>(rng.below(4)));
  }
  if (!cfg.enable_photometric) return out;

  auto draw = [&rng](const std::pair<double, double>& r) { return r.first == r.second ? r.first : rng.uniform(r.first, r.second); };
  const double brightness = draw(cfg.brightness);
  const double contrast = draw(cfg.contrast);
  const double gamma = draw(cfg.gamma);
  const bool noisy = cfg.noise.first != cfg.noise.second;
  if (brightness == 1.0 && contrast == 1.0 && gamma == 1.0 && !noisy) return out;

  const std::size_t c = out.image.dim(0), hw = out.image.numel() / c;
  std::vector<double> x(out.image.numel());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = (out.image[i] + 1.0) * 0.5;
  if (brightness != 1.0) {
    for (auto& v : x) v *= brightness;
  }
  if (contrast != 1.0) {
    for (std::size_t b = 0; b < c; ++b) {
      double mean = 0.0;
      for (std::size_t i = 0; i < hw; ++i) mean += x[b * hw + i];
      mean /= static_cast<double>(hw);
      for (std::size_t i = 0; i < hw; ++i) x[b * hw + i] = (x[b * hw + i] - mean) * contrast + mean;
    }
  }
  if (noisy) {
    for (auto& v : x) v *= rng.uniform(cfg.noise.first, cfg.noise.second);
  }
  if (gamma != 1.0) {
    for (auto& v : x) v = std::pow(std::clamp(v, 0.0, 1.0), gamma);
  }
  std::vector<float> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = static_cast<float>(std::clamp(x[i] * 2.0 - 1.0, -1.0, 1.0));
  out.image = Tensor<float>::from(out.image.shape(), std::move(y));
  return out;
}

}  // namespace adanet::data
