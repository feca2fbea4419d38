#include "adanet/data/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "adanet/errors.hpp"

namespace adanet::data {

std::string_view split_name(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "?";
}

void SynthConfig::validate() const {
  if (size < 8) throw ConfigError("synth: scene size must be at least 8");
  if (scenes_per_domain == 0) throw ConfigError("synth: scenes_per_domain must be positive");
  if (dead_min > dead_max || dead_radius_min > dead_radius_max || crown_radius_min > crown_radius_max) {
    throw ConfigError("synth: min/max ranges are reversed");
  }
  if (!(contrast > 0.0 && contrast <= 1.0)) throw ConfigError("synth: contrast must lie in (0, 1]");
  if (blur_sigma < 0.0 || noise_sigma < 0.0) throw ConfigError("synth: blur and noise must be non-negative");
  if (std::abs(split[0] + split[1] + split[2] - 1.0) > 1e-9) throw ConfigError("synth: split ratios must sum to 1");
}

namespace {

using Planes = std::vector<std::vector<double>>;  // [band][row * n + col]

RasterScene to_scene(const Planes& p, std::size_t n, std::vector<std::uint8_t> mask) {
  auto s = RasterScene::blank(static_cast<std::uint32_t>(n), static_cast<std::uint32_t>(n), 4, PixelType::kU8);
  for (std::size_t i = 0; i < n * n; ++i)
    for (std::size_t b = 0; b < 4; ++b) {
      s.data[i * 4 + b] = static_cast<std::uint16_t>(std::clamp(std::round(p[b][i] * 255.0), 0.0, 255.0));
    }
  s.mask = std::move(mask);
  return s;
}

Planes to_planes(const RasterScene& s) {
  Planes p(s.channels, std::vector<double>(static_cast<std::size_t>(s.width) * s.height));
  for (std::size_t i = 0; i < p[0].size(); ++i)
    for (std::size_t b = 0; b < s.channels; ++b) p[b][i] = s.data[i * s.channels + b] / 255.0;
  return p;
}

void blur_plane(std::vector<double>& x, std::size_t n, double sigma) {
  if (sigma <= 0.0) return;
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  for (int i = -radius; i <= radius; ++i) k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
  const double total = std::accumulate(k.begin(), k.end(), 0.0);
  for (auto& v : k) v /= total;
  std::vector<double> tmp(x.size());
  auto idx = [n](std::ptrdiff_t i) { return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(i, 0, n - 1)); };
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) {
      double acc = 0.0;
      for (int d = -radius; d <= radius; ++d) acc += k[d + radius] * x[r * n + idx(static_cast<std::ptrdiff_t>(c) + d)];
      tmp[r * n + c] = acc;
    }
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) {
      double acc = 0.0;
      for (int d = -radius; d <= radius; ++d) acc += k[d + radius] * tmp[idx(static_cast<std::ptrdiff_t>(r) + d) * n + c];
      x[r * n + c] = acc;
    }
}

}  // namespace

RasterScene synthesize_clean_scene(const SynthConfig& cfg, Rng& rng) {
  const std::size_t n = cfg.size;
  std::vector<double> light(n * n, cfg.gap_shade);
  const auto crowns = static_cast<std::size_t>(cfg.crown_density * static_cast<double>(n * n));
  for (std::size_t k = 0; k < crowns; ++k) {
    const double cy = rng.uniform(0.0, static_cast<double>(n)), cx = rng.uniform(0.0, static_cast<double>(n));
    const double r = rng.uniform(cfg.crown_radius_min, cfg.crown_radius_max);
    const double bright = rng.uniform(0.75, 1.25);
    const auto r0 = static_cast<std::ptrdiff_t>(std::floor(cy - r)), r1 = static_cast<std::ptrdiff_t>(std::ceil(cy + r));
    const auto c0 = static_cast<std::ptrdiff_t>(std::floor(cx - r)), c1 = static_cast<std::ptrdiff_t>(std::ceil(cx + r));
    for (auto i = std::max<std::ptrdiff_t>(r0, 0); i <= std::min<std::ptrdiff_t>(r1, n - 1); ++i)
      for (auto j = std::max<std::ptrdiff_t>(c0, 0); j <= std::min<std::ptrdiff_t>(c1, n - 1); ++j) {
        const double d2 = ((i + 0.5 - cy) * (i + 0.5 - cy) + (j + 0.5 - cx) * (j + 0.5 - cx)) / (r * r);
        if (d2 <= 1.0) light[i * n + j] = std::max(light[i * n + j], bright * (1.0 - 0.35 * d2));
      }
  }
  Planes p(4, std::vector<double>(n * n));
  for (std::size_t i = 0; i < n * n; ++i)
    for (std::size_t b = 0; b < 4; ++b) p[b][i] = cfg.canopy[b] * light[i];

  std::vector<std::uint8_t> mask(n * n, 0);
  const std::size_t dead = cfg.dead_min + static_cast<std::size_t>(rng.below(cfg.dead_max - cfg.dead_min + 1));
  for (std::size_t k = 0; k < dead; ++k) {
    const double r = rng.uniform(cfg.dead_radius_min, cfg.dead_radius_max);
    const double cy = rng.uniform(r, static_cast<double>(n) - r), cx = rng.uniform(r, static_cast<double>(n) - r);
    const double bright = rng.uniform(0.9, 1.1);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const double d2 = ((i + 0.5 - cy) * (i + 0.5 - cy) + (j + 0.5 - cx) * (j + 0.5 - cx)) / (r * r);
        if (d2 > 1.0) continue;
        mask[i * n + j] = 1;
        for (std::size_t b = 0; b < 4; ++b) p[b][i * n + j] = cfg.dead[b] * bright * (1.0 - 0.2 * d2);
      }
  }
  for (auto& plane : p)
    for (auto& v : plane) v += rng.normal(0.0, cfg.texture_noise);
  return to_scene(p, n, std::move(mask));
}

RasterScene degrade_scene(const RasterScene& clean, const SynthConfig& cfg, Rng& rng) {
  const std::size_t n = clean.width;
  if (clean.height != n) throw DimensionError("degrade_scene: square scenes only");
  Planes p = to_planes(clean);
  for (auto& plane : p) {
    blur_plane(plane, n, cfg.blur_sigma);
    const double mean = std::accumulate(plane.begin(), plane.end(), 0.0) / static_cast<double>(plane.size());
    for (auto& v : plane) v = mean + cfg.contrast * (v - mean);
  }
  for (auto& plane : p)
    for (auto& v : plane) v = std::min(v + rng.normal(0.0, cfg.noise_sigma), cfg.saturation);
  return to_scene(p, n, clean.mask);
}

SynthDomains synthesize_domains(const SynthConfig& cfg, const Rng& rng) {
  cfg.validate();
  SynthDomains out;
  const std::size_t n = cfg.scenes_per_domain;
  auto assign_splits = [&](std::vector<SynthScene>& scenes, std::uint64_t stream) {
    std::vector<std::size_t> order(scenes.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng split_rng = rng.substream(RngPurpose::kSynthesis, stream);
    shuffle(order.begin(), order.end(), split_rng);
    const auto n_train = static_cast<std::size_t>(std::llround(cfg.split[0] * static_cast<double>(n)));
    const auto n_val = static_cast<std::size_t>(std::llround(cfg.split[1] * static_cast<double>(n)));
    for (std::size_t k = 0; k < order.size(); ++k) {
      scenes[order[k]].split = k < n_train ? Split::kTrain : (k < n_train + n_val ? Split::kVal : Split::kTest);
    }
  };
  char buf[32];
  for (std::size_t i = 0; i < n; ++i) {
    Rng clean_rng = rng.substream(RngPurpose::kSynthesis, 4 * i + 10);
    std::snprintf(buf, sizeof buf, "clean_%04zu", i);
    out.clean.push_back({buf, Split::kTrain, synthesize_clean_scene(cfg, clean_rng)});

    Rng degraded_rng = rng.substream(RngPurpose::kSynthesis, 4 * i + 11);
    std::snprintf(buf, sizeof buf, "degraded_%04zu", i);
    const RasterScene base = synthesize_clean_scene(cfg, degraded_rng);
    out.degraded.push_back({buf, Split::kTrain, degrade_scene(base, cfg, degraded_rng)});
  }
  assign_splits(out.clean, 0);
  assign_splits(out.degraded, 1);
  return out;
}

void write_domains(const std::filesystem::path& root, const SynthDomains& domains) {
  for (const auto& [name, scenes] : {std::pair{"clean", &domains.clean}, std::pair{"degraded", &domains.degraded}}) {
    for (const auto& s : *scenes) {
      const auto dir = root / name / std::string(split_name(s.split));
      std::filesystem::create_directories(dir);
      write_msrb(dir / (s.id + ".msrb"), s.scene);
    }
  }
}

std::vector<std::filesystem::path> list_scenes(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> out;
  if (std::filesystem::is_directory(dir)) {
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
      if (e.is_regular_file() && e.path().extension() == ".msrb") out.push_back(e.path());
    }
  }
  if (out.empty()) throw ConfigError("no .msrb scenes in " + dir.string());
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::uint8_t> detect_bright_blobs(const RasterScene& scene, double threshold) {
  if (scene.channels < 3) throw DimensionError("blob detector needs R, G, B bands");
  const double fs = full_scale(scene.dtype);
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(scene.width) * scene.height);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    const double m = (scene.data[i * scene.channels] + scene.data[i * scene.channels + 1] +
                      scene.data[i * scene.channels + 2]) / (3.0 * fs);
    mask[i] = m > threshold ? 1 : 0;
  }
  return mask;
}

ChannelStats channel_stats(const std::vector<RasterScene>& scenes) {
  if (scenes.empty()) throw ContractError("channel_stats: no scenes");
  const std::size_t c = scenes.front().channels;
  std::vector<double> sum(c, 0.0), sq(c, 0.0);
  double count = 0;
  for (const auto& s : scenes) {
    if (s.channels != c) throw DimensionError("channel_stats: channel counts differ");
    const double half = full_scale(s.dtype) / 2.0;
    const std::size_t px = static_cast<std::size_t>(s.width) * s.height;
    for (std::size_t i = 0; i < px; ++i)
      for (std::size_t b = 0; b < c; ++b) {
        const double v = s.data[i * c + b] / half - 1.0;
        sum[b] += v;
        sq[b] += v * v;
      }
    count += static_cast<double>(px);
  }
  ChannelStats st;
  for (std::size_t b = 0; b < c; ++b) {
    const double m = sum[b] / count;
    st.mean.push_back(m);
    st.stddev.push_back(std::sqrt(std::max(0.0, sq[b] / count - m * m)));
  }
  return st;
}

double stats_gap(const ChannelStats& a, const ChannelStats& b) {
  if (a.mean.size() != b.mean.size()) throw DimensionError("stats_gap: channel counts differ");
  double g = 0.0;
  for (std::size_t i = 0; i < a.mean.size(); ++i) {
    g += std::abs(a.mean[i] - b.mean[i]) + std::abs(a.stddev[i] - b.stddev[i]);
  }
  return g;
}

double mean_gradient(const RasterScene& s) {
  double acc = 0.0;
  std::size_t count = 0;
  for (std::size_t r = 0; r < s.height; ++r)
    for (std::size_t q = 0; q < s.width; ++q)
      for (std::size_t b = 0; b < s.channels; ++b) {
        if (q + 1 < s.width) {
          acc += std::abs(static_cast<double>(s.at(r, q + 1, b)) - s.at(r, q, b));
          ++count;
        }
        if (r + 1 < s.height) {
          acc += std::abs(static_cast<double>(s.at(r + 1, q, b)) - s.at(r, q, b));
          ++count;
        }
      }
  return acc / static_cast<double>(count) / full_scale(s.dtype);
}

}  // namespace adanet::data
