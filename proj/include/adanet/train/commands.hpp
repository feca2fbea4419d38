#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "adanet/data/raster.hpp"
#include "adanet/data/synth.hpp"
#include "adanet/metrics.hpp"
#include "adanet/nn/checkpoint.hpp"
#include "adanet/nn/generator.hpp"
#include "adanet/train/gradcheck_suite.hpp"

namespace adanet::train {

// Writes both synthetic domains under `root` (see data::write_domains).
data::SynthDomains synth_command(const std::filesystem::path& root, const data::SynthConfig& cfg,
                                 std::uint64_t seed);

// The forward generator stored in a training checkpoint, together with its
// training patch size. A checkpoint whose meta sets generator.identity=1
// yields the identity test double.
struct LoadedGenerator {
  nn::Generator<float> generator;
  std::size_t patch = 256;
};
LoadedGenerator load_generator(const nn::Checkpoint& ckpt);

// Checkpoint holding only a generator (no optimizer state). With identity
// set, the loaded generator returns its input.
nn::Checkpoint generator_checkpoint(const nn::Generator<float>& g, std::size_t patch, bool identity = false);

// tile_aggregate with G as the patch function, applied `iterations` times to
// the reconstructed scene. ConfigError on a channel-count mismatch.
data::RasterScene translate_scene(const nn::Generator<float>& g, const data::RasterScene& scene, std::size_t patch,
                                  std::size_t overlap, std::size_t iterations = 1);

struct TranslateOptions {
  std::size_t overlap = 64;
  std::size_t iterations = 1;
  std::size_t patch = 0;  // 0 = the checkpoint's training patch size
  bool false_color = false;
};

// Translates every input scene into out_dir/<stem>.msrb (plus
// <stem>_false_color.ppm when requested). Returns the written scene paths.
std::vector<std::filesystem::path> translate_command(const std::filesystem::path& checkpoint,
                                                     const std::vector<std::filesystem::path>& inputs,
                                                     const std::filesystem::path& out_dir,
                                                     const TranslateOptions& options);

// Binary mask of a scene: its label mask if `use_label` and present,
// otherwise band 0 as a fraction of full scale compared against threshold.
std::vector<std::uint8_t> scene_mask(const data::RasterScene& scene, double threshold, bool use_label);

struct EvalResult {
  metrics::ConfusionCounts counts;
  metrics::MetricReport report;
};

// One global confusion matrix over all scene pairs. Predictions are always
// thresholded from band 0; truths use their label mask when they carry one.
// DimensionError naming the scene on a shape mismatch.
EvalResult evaluate_command(const std::vector<std::filesystem::path>& predicted,
                            const std::vector<std::filesystem::path>& truth, double threshold = 0.5);

// Prints one line per check and a summary; returns the process exit status.
int gradcheck_command(CheckScope scope, std::size_t seeds, double tolerance, bool inject_fault, std::ostream& out);

// Files given directly, or every *.msrb in a directory, in sorted order.
std::vector<std::filesystem::path> expand_scene_args(const std::vector<std::filesystem::path>& args);

}  // namespace adanet::train
