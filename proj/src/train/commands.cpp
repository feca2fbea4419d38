#include "adanet/train/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "adanet/data/patches.hpp"
#include "adanet/errors.hpp"
#include "adanet/train/config.hpp"
#include "adanet/train/trainer.hpp"

namespace adanet::train {

data::SynthDomains synth_command(const std::filesystem::path& root, const data::SynthConfig& cfg,
                                 std::uint64_t seed) {
  auto domains = data::synthesize_domains(cfg, Rng(seed));
  data::write_domains(root, domains);
  return domains;
}

LoadedGenerator load_generator(const nn::Checkpoint& ckpt) {
  std::map<std::string, std::string> settings;
  for (const auto& [k, v] : ckpt.meta) {
    if (k.rfind("config.", 0) == 0) settings[k.substr(7)] = v;
  }
  if (settings.empty()) throw FormatError("checkpoint carries no configuration");
  const auto cfg = make_config(settings);
  auto gcfg = generator_config(cfg);
  if (auto it = ckpt.meta.find("generator.identity"); it != ckpt.meta.end() && it->second == "1") {
    gcfg.identity_output = true;
  }
  Rng init(cfg.seed);
  LoadedGenerator out{nn::Generator<float>(gcfg, init), cfg.patch};
  for (const auto& [name, t] : out.generator.parameters().entries()) {
    const auto* e = ckpt.find_parameter("G." + name);
    if (!e) throw FormatError("checkpoint has no generator parameter 'G." + name + "'");
    Tensor<float> dst = t;
    nn::assign_entry(*e, dst);
  }
  return out;
}

nn::Checkpoint generator_checkpoint(const nn::Generator<float>& g, std::size_t patch, bool identity) {
  const auto& gc = g.config();
  TrainConfig cfg;
  cfg.channels = gc.in_channels;
  cfg.g_base = gc.base_channels;
  cfg.n_resblocks = gc.n_resblocks;
  cfg.attention = gc.attention_after_resblocks;
  cfg.decoder_attention = gc.decoder_attention;
  cfg.patch = patch;
  nn::Checkpoint ckpt;
  for (const auto& [name, t] : g.parameters().entries()) ckpt.parameters.push_back(nn::to_entry("G." + name, t));
  std::istringstream text(cfg.to_text());
  for (std::string line; std::getline(text, line);) {
    const auto eq = line.find('=');
    ckpt.meta["config." + line.substr(0, eq)] = line.substr(eq + 1);
  }
  if (identity) ckpt.meta["generator.identity"] = "1";
  return ckpt;
}

data::RasterScene translate_scene(const nn::Generator<float>& g, const data::RasterScene& scene, std::size_t patch,
                                  std::size_t overlap, std::size_t iterations) {
  if (iterations < 1) throw ConfigError("iterations must be at least 1");
  if (scene.channels != g.config().in_channels) {
    throw ConfigError("scene has " + std::to_string(scene.channels) + " channels, the generator expects " +
                      std::to_string(g.config().in_channels));
  }
  const data::PatchFn f = [&g](const Tensor<float>& x) {
    NoGradGuard ng;
    return g.translate(x);
  };
  data::RasterScene out = scene;
  for (std::size_t i = 0; i < iterations; ++i) out = data::tile_aggregate(out, f, patch, overlap);
  return out;
}

std::vector<std::filesystem::path> translate_command(const std::filesystem::path& checkpoint,
                                                     const std::vector<std::filesystem::path>& inputs,
                                                     const std::filesystem::path& out_dir,
                                                     const TranslateOptions& options) {
  const auto loaded = load_generator(nn::load_checkpoint(checkpoint));
  const std::size_t patch = options.patch ? options.patch : loaded.patch;
  std::filesystem::create_directories(out_dir);
  std::vector<std::filesystem::path> written;
  for (const auto& in : inputs) {
    const auto scene = data::read_msrb(in);
    const auto out = translate_scene(loaded.generator, scene, patch, options.overlap, options.iterations);
    const auto path = out_dir / (in.stem().string() + ".msrb");
    data::write_msrb(path, out);
    if (options.false_color) data::write_false_color(out_dir / (in.stem().string() + "_false_color.ppm"), out);
    written.push_back(path);
  }
  return written;
}

std::vector<std::uint8_t> scene_mask(const data::RasterScene& scene, double threshold, bool use_label) {
  if (use_label && scene.has_mask()) return scene.mask;
  const double fs = data::full_scale(scene.dtype);
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(scene.width) * scene.height);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    mask[i] = scene.data[i * scene.channels] / fs > threshold ? 1 : 0;
  }
  return mask;
}

EvalResult evaluate_command(const std::vector<std::filesystem::path>& predicted,
                            const std::vector<std::filesystem::path>& truth, double threshold) {
  if (predicted.size() != truth.size()) {
    throw DimensionError("got " + std::to_string(predicted.size()) + " predicted scenes but " +
                         std::to_string(truth.size()) + " truth scenes");
  }
  if (predicted.empty()) throw ConfigError("no scenes to evaluate");
  EvalResult r;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const auto p = data::read_msrb(predicted[i]);
    const auto t = data::read_msrb(truth[i]);
    if (p.width != t.width || p.height != t.height) {
      throw DimensionError("scene " + predicted[i].filename().string() + " is " + std::to_string(p.width) + "x" +
                           std::to_string(p.height) + " but its truth is " + std::to_string(t.width) + "x" +
                           std::to_string(t.height));
    }
    r.counts = metrics::confusion_accumulate(r.counts, scene_mask(p, threshold, false), scene_mask(t, threshold, true));
  }
  r.report = metrics::metrics_compute(r.counts);
  return r;
}

int gradcheck_command(CheckScope scope, std::size_t seeds, double tolerance, bool inject_fault, std::ostream& out) {
  const auto summary = run_gradcheck_suite(scope, seeds, tolerance, inject_fault);
  std::size_t failed = 0;
  for (const auto& r : summary.reports) {
    char line[160];
    std::snprintf(line, sizeof line, "%-4s %-32s max_rel_error=%.3e checked=%zu", r.pass ? "ok" : "FAIL",
                  r.name.c_str(), r.max_rel_error, r.checked);
    out << line << "\n";
    if (!r.pass) ++failed;
  }
  out << summary.reports.size() << " checks, " << failed << " failed\n";
  return summary.pass ? 0 : 1;
}

std::vector<std::filesystem::path> expand_scene_args(const std::vector<std::filesystem::path>& args) {
  std::vector<std::filesystem::path> out;
  for (const auto& a : args) {
    if (std::filesystem::is_directory(a)) {
      for (auto& p : data::list_scenes(a)) out.push_back(p);
    } else {
      out.push_back(a);
    }
  }
  return out;
}

}  // namespace adanet::train
