#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "adanet/data/raster.hpp"
#include "adanet/rng.hpp"

namespace adanet::data {

enum class Split { kTrain, kVal, kTest };
std::string_view split_name(Split s);

// Colours and strengths are reflectances in [0, 1]; scenes are stored as u8
// R, G, B, NIR.
struct SynthConfig {
  std::size_t size = 128;
  std::size_t scenes_per_domain = 200;
  // Living canopy: overlapping bright crowns over shadowed gaps.
  std::array<double, 4> canopy{0.16, 0.30, 0.13, 0.60};
  double crown_density = 1.0 / 40.0;  // crowns per pixel
  double crown_radius_min = 2.5, crown_radius_max = 5.0;
  double gap_shade = 0.55;
  // Dead trees: gray-brown disks with lower NIR, recorded in the mask.
  std::array<double, 4> dead{0.60, 0.55, 0.48, 0.38};
  std::size_t dead_min = 3, dead_max = 8;
  double dead_radius_min = 3.0, dead_radius_max = 6.0;
  double texture_noise = 0.01;
  // Degradation chain, applied in this order.
  double blur_sigma = 1.0;
  double contrast = 0.5;  // deviations from the per-channel scene mean are scaled by this
  double noise_sigma = 0.02;
  double saturation = 0.36;  // highlights clipped to this level
  std::array<double, 3> split{0.7, 0.1, 0.2};

  void validate() const;
};

struct SynthScene {
  std::string id;
  Split split = Split::kTrain;
  RasterScene scene;  // with dead-tree mask
};

struct SynthDomains {
  std::vector<SynthScene> clean;
  std::vector<SynthScene> degraded;
};

// One clean scene (with mask) from its own random stream.
RasterScene synthesize_clean_scene(const SynthConfig& cfg, Rng& rng);
// Blur, contrast compression, noise and clipping of a scene; the mask is kept.
RasterScene degrade_scene(const RasterScene& clean, const SynthConfig& cfg, Rng& rng);

// Clean and degraded domains drawn from independent scenes, each split at
// scene level by cfg.split.
SynthDomains synthesize_domains(const SynthConfig& cfg, const Rng& rng);

// Writes <root>/<clean|degraded>/<split>/<id>.msrb.
void write_domains(const std::filesystem::path& root, const SynthDomains& domains);
// Sorted list of *.msrb files in a directory. ConfigError if none.
std::vector<std::filesystem::path> list_scenes(const std::filesystem::path& dir);

// Pixels whose mean R, G, B (as a fraction of full scale) exceeds `threshold`.
std::vector<std::uint8_t> detect_bright_blobs(const RasterScene& scene, double threshold = 0.4);

struct ChannelStats {
  std::vector<double> mean;  // normalized [-1, 1] units
  std::vector<double> stddev;
};
ChannelStats channel_stats(const std::vector<RasterScene>& scenes);
// sum over channels of |mean_a - mean_b| + |std_a - std_b|.
double stats_gap(const ChannelStats& a, const ChannelStats& b);

// Mean absolute horizontal + vertical difference per channel, averaged.
double mean_gradient(const RasterScene& scene);

}  // namespace adanet::data
