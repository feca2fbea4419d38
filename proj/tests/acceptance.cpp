// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
//
//   acceptance --workdir DIR [--only 1,3,8] [--desk-checkpoint final.adan]
//
// --desk-checkpoint evaluates an existing desk-scale checkpoint instead of
// training one; the line then says so.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "adanet/data/patches.hpp"
#include "adanet/data/synth.hpp"
#include "adanet/fft.hpp"
#include "adanet/loss/contrastive.hpp"
#include "adanet/loss/objective.hpp"
#include "adanet/metrics.hpp"
#include "adanet/nn/checkpoint.hpp"
#include "adanet/nn/discriminator.hpp"
#include "adanet/nn/generator.hpp"
#include "adanet/ops.hpp"
#include "adanet/train/commands.hpp"
#include "adanet/train/config.hpp"
#include "adanet/train/gradcheck_suite.hpp"
#include "adanet/train/trainer.hpp"

using namespace adanet;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  // Records one sub-check; the first failing one leads the detail text.
  void check(bool ok, const std::string& what) {
    if (!ok && pass) {
      pass = false;
      detail = "FAILED " + what + (detail.empty() ? "" : "; " + detail);
    } else {
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// --- 1. gradient suite ------------------------------------------------------------

Outcome gradient_suite() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const auto summary = train::run_gradcheck_suite(train::CheckScope::kAll, 20, 1e-4);
  const double elapsed = seconds_since(t0);
  double worst = 0;
  std::string worst_name, failed;
  for (const auto& r : summary.reports) {
    if (r.max_rel_error > worst) worst = r.max_rel_error, worst_name = r.name;
    if (!r.pass) failed += " " + r.name;
  }
  const char* required[] = {"conv2d",         "dense",          "softmax",     "instance_norm",
                            "activation",     "upsample",       "fft2d",       "conv_projection",
                            "residual_self_attention", "info_nce", "adversarial", "cycle_consistency"};
  std::string missing;
  for (const char* name : required) {
    const bool found = std::any_of(summary.reports.begin(), summary.reports.end(),
                                   [&](const GradCheckReport& r) { return r.name.find(name) != std::string::npos; });
    if (!found) missing += std::string(" ") + name;
  }
  o.check(missing.empty(), "coverage" + (missing.empty() ? std::string(" complete") : " missing" + missing));
  o.check(summary.pass, std::to_string(summary.reports.size()) + " checks x 20 seeds, worst " +
                            fmt("%.2e", worst) + " (" + worst_name + ")" + (failed.empty() ? "" : ", failing" + failed));
  o.check(elapsed < 120.0, "runtime " + fmt("%.1f", elapsed) + " s < 120 s");
  return o;
}

// --- 2. FFT oracle ----------------------------------------------------------------

Outcome fft_oracle() {
  Outcome o;
  const std::size_t c = 4, n = 32;
  Rng rng(2);
  std::vector<double> x(c * n * n);
  for (auto& v : x) v = rng.uniform(-1, 1);
  auto spectrum = ops::fft2d(Tensor<double>::from({c, n, n}, x));

  double max_err = 0;
  const double w = -2.0 * std::numbers::pi / static_cast<double>(n);
  for (std::size_t b = 0; b < c; ++b)
    for (std::size_t u = 0; u < n; ++u)
      for (std::size_t v = 0; v < n; ++v) {
        std::complex<double> acc = 0;
        for (std::size_t r = 0; r < n; ++r)
          for (std::size_t q = 0; q < n; ++q) {
            const double angle = w * static_cast<double>((u * r + v * q) % n);
            acc += x[(b * n + r) * n + q] * std::complex<double>(std::cos(angle), std::sin(angle));
          }
        const std::size_t k = (b * n + u) * n + v;
        max_err = std::max(max_err, std::abs(acc - std::complex<double>(spectrum.re[k], spectrum.im[k])));
      }
  o.check(max_err < 1e-9, "naive DFT max |diff| " + fmt("%.2e", max_err) + " < 1e-9");

  double round_trip = 0;
  for (std::size_t b = 0; b < c; ++b) {
    std::vector<std::complex<double>> buf(n * n);
    for (std::size_t i = 0; i < n * n; ++i) buf[i] = x[b * n * n + i];
    fft::transform2d<double>(buf, n, false);
    fft::inverse2d<double>(buf, n);
    for (std::size_t i = 0; i < n * n; ++i) round_trip = std::max(round_trip, std::abs(buf[i] - x[b * n * n + i]));
  }
  o.check(round_trip < 1e-10, "inverse round trip " + fmt("%.2e", round_trip) + " < 1e-10");
  return o;
}

// --- 3. InfoNCE closed forms --------------------------------------------------------

Outcome info_nce_closed_forms() {
  Outcome o;
  for (std::size_t k : {1u, 63u, 255u}) {
    const std::size_t d = 8;
    std::vector<double> q(d, 0.0), negs(d * k, 0.0);
    q[2] = 1;
    for (std::size_t c = 0; c < k; ++c) negs[2 * k + c] = 1;
    auto fq = Tensor<double>::from({d}, q);
    const double got = loss::info_nce<double>(fq, fq, Tensor<double>::from({d, k}, negs), 0.07).item();
    const double err = std::abs(got - std::log(static_cast<double>(k + 1)));
    o.check(err < 1e-9, "uniform K=" + std::to_string(k) + " |err| " + fmt("%.1e", err));
  }
  const std::size_t d = 256, k = 255;
  const double tau = 0.07;
  std::vector<double> q(d, 0.0), negs(d * k, 0.0);
  q[0] = 1;
  for (std::size_t c = 0; c < k; ++c) negs[(c + 1) * k + c] = 1;
  auto fq = Tensor<double>::from({d}, q);
  const double got = loss::info_nce<double>(fq, fq, Tensor<double>::from({d, k}, negs), tau).item();
  // Direct evaluation of -log(e^{1/tau} / (e^{1/tau} + 255 e^0)).
  const double oracle = std::log(std::exp(1.0 / tau) + 255.0) - 1.0 / tau;
  o.check(std::abs(got - oracle) < 1e-7, "aligned K=255 loss " + fmt("%.6e", got) + " vs direct evaluation " +
                                             fmt("%.6e", oracle) + " (|diff| " + fmt("%.1e", std::abs(got - oracle)) +
                                             " < 1e-7)");
  return o;
}

// --- 4. metrics oracle ------------------------------------------------------------

Outcome metrics_oracle() {
  Outcome o;
  Rng rng(4);
  int mismatches = 0;
  double iou_err = 0, f1_err = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::uint8_t> p(64 * 64), t(64 * 64);
    const double dp = rng.uniform(0.05, 0.95), dt = rng.uniform(0.05, 0.95);
    for (auto& v : p) v = rng.bernoulli(dp);
    for (auto& v : t) v = rng.bernoulli(dt);
    std::uint64_t table[2][2] = {{0, 0}, {0, 0}};
    for (std::size_t i = 0; i < p.size(); ++i) ++table[p[i]][t[i]];
    const auto c = metrics::confusion_accumulate({}, p, t);
    if (c.tp != table[1][1] || c.fp != table[1][0] || c.fn != table[0][1] || c.tn != table[0][0]) ++mismatches;
    const auto r = metrics::metrics_compute(c);
    iou_err = std::max(iou_err, std::abs(*r.iou - *r.dice / (2 - *r.dice)));
    f1_err = std::max(f1_err, std::abs(*metrics::metrics_compute(c, 1.0).f2 - *r.dice));
  }
  o.check(mismatches == 0, "loop oracle mismatches " + std::to_string(mismatches) + "/100");
  o.check(iou_err < 1e-12, "IoU identity err " + fmt("%.1e", iou_err));
  o.check(f1_err < 1e-12, "F1 = Dice err " + fmt("%.1e", f1_err));
  const auto hand = metrics::metrics_compute({2, 96, 1, 1});
  auto near4 = [](double a, double b) { return std::abs(a - b) < 5e-5; };
  o.check(near4(*hand.dice, 0.6667) && near4(*hand.iou, 0.5) && near4(*hand.f2, 0.6667),
          "hand case Dice " + fmt("%.4f", *hand.dice) + " IoU " + fmt("%.4f", *hand.iou) + " F2 " +
              fmt("%.4f", *hand.f2));
  return o;
}

// --- 5. preset contract -----------------------------------------------------------

train::TrainConfig small_config(const std::string& preset) {
  return train::make_config({{"preset", preset},   {"patch", "32"},       {"n_spatial", "16"}, {"n_freq", "8"},
                             {"freq_patch", "8"},  {"g_base", "4"},       {"n_resblocks", "2"}, {"d_base", "4"},
                             {"head_width", "8"},  {"freq_hidden", "16"}, {"freq_out", "8"},
                             {"learning_rate", "1e-3"}, {"steps", "10"}, {"seed", "5"}});
}

Tensor<float> random_image(std::uint64_t seed, std::size_t n = 32) {
  Rng rng(seed);
  std::vector<float> v(4 * n * n);
  for (auto& x : v) x = static_cast<float>(rng.uniform(-1, 1));
  return Tensor<float>::from({4, n, n}, v);
}

std::map<std::string, std::vector<float>> flat_parameters(const train::Trainer& t) {
  std::map<std::string, std::vector<float>> out;
  for (const auto& [group, named] : t.groups())
    for (const auto& [name, tensor] : named) out[name].assign(tensor.data().begin(), tensor.data().end());
  return out;
}

Outcome preset_contract() {
  Outcome o;
  const std::map<std::string, std::set<std::string>> expected{
      {"adanet", {"G", "D", "Phi", "Theta"}},
      {"cut", {"G", "D", "Phi"}},
      {"fastcut", {"G", "D", "Phi"}},
      {"cyclegan", {"G", "D", "G_I", "D_L"}},
  };
  for (const auto& [preset, groups] : expected) {
    train::Trainer t(small_config(preset));
    auto declared = train::declared_groups(t.config());
    const auto before = flat_parameters(t);
    Rng sampling(1);
    const auto report = t.train_step(random_image(1), random_image(2), sampling);
    const auto after = flat_parameters(t);
    std::set<std::string> changed, all;
    for (const auto& [group, named] : t.groups()) {
      all.insert(group);
      for (const auto& [name, tensor] : named)
        if (after.at(name) != before.at(name)) changed.insert(group);
    }
    std::string list;
    for (const auto& g : changed) list += (list.empty() ? "" : ",") + g;
    o.check(changed == groups && std::set<std::string>(declared.begin(), declared.end()) == groups &&
                all.size() == 6,
            preset + " changed {" + list + "} of 6 groups");
    if (preset == "fastcut") {
      o.check(!report.id_spatial && !report.freq && !report.id_freq && report.spatial.has_value(),
              "fastcut marks L_IDSpatial, L_Freq, L_IDFreq inactive");
    }
  }
  Rng rng(3);
  nn::GeneratorConfig gc;
  gc.base_channels = 4;
  gc.identity_output = true;
  nn::Generator<float> gf(gc, rng), gi(gc, rng);
  const double cycle =
      loss::cycle_consistency_loss<float>(loss::Preset::kCycleGan, random_image(4), random_image(5), gf, gi).item();
  o.check(cycle == 0.0, "cyclegan cycle loss on identity doubles " + fmt("%g", cycle));
  return o;
}

// --- 6. determinism and resume -----------------------------------------------------

std::vector<std::string> run_steps(train::Trainer& t, const train::DataSchedule& s, std::size_t n) {
  std::vector<std::string> rows;
  for (std::size_t i = 0; i < n; ++i) {
    auto item = s.at(t.step());
    rows.push_back(t.train_step(item.low, item.high, item.sampling).csv_row());
  }
  return rows;
}

Outcome determinism_and_resume(const fs::path& workdir) {
  Outcome o;
  const auto root = workdir / "resume_data";
  data::SynthConfig sc;
  sc.size = 64;
  sc.scenes_per_domain = 6;
  sc.split = {1.0, 0.0, 0.0};
  train::synth_command(root, sc, 6);
  auto low = train::load_domain_patches(root / "degraded" / "train", 32);
  auto high = train::load_domain_patches(root / "clean" / "train", 32);
  const auto cfg = small_config("adanet");
  train::DataSchedule schedule(low, high, cfg.seed, true);

  train::Trainer a(cfg), b(cfg);
  const auto trace_a = run_steps(a, schedule, 10), trace_b = run_steps(b, schedule, 10);
  o.check(trace_a == trace_b, "equal seeds give identical 10-step traces");

  const auto bytes = nn::serialize(a.to_checkpoint());
  const auto tail_a = run_steps(a, schedule, 10);
  train::Trainer resumed = train::trainer_from_checkpoint(nn::deserialize(bytes));
  const auto tail_r = run_steps(resumed, schedule, 10);
  o.check(tail_a == tail_r && flat_parameters(a) == flat_parameters(resumed) &&
              nn::serialize(a.to_checkpoint()) == nn::serialize(resumed.to_checkpoint()),
          "resume reproduces steps 11-20, parameters and optimizer state bit-exactly");
  return o;
}

// --- 7. tiling --------------------------------------------------------------------

Outcome tiling() {
  Outcome o;
  Rng rng(7);
  const data::PatchFn identity = [](const Tensor<float>& x) { return x; };
  for (std::size_t overlap : {0u, 32u, 64u}) {
    bool exact = true;
    for (auto t : {data::PixelType::kU8, data::PixelType::kU16}) {
      auto s = data::RasterScene::blank(300, 217, 4, t);
      const auto top = static_cast<std::uint64_t>(data::full_scale(t)) + 1;
      for (auto& v : s.data) v = static_cast<std::uint16_t>(rng.below(top));
      exact = exact && data::tile_aggregate(s, identity, 128, overlap) == s;
    }
    double worst = 0;
    for (double w : data::blend_weight_sums(300, 217, 128, overlap)) worst = std::max(worst, std::abs(w - 1.0));
    o.check(exact, "overlap " + std::to_string(overlap) + " identity exact");
    o.check(worst < 1e-6, "weights sum to 1 within " + fmt("%.1e", worst));
  }
  return o;
}

// --- 8. desk-scale experiment --------------------------------------------------------

struct DeskEvaluation {
  double gap_before = 0, gap_after = 0;
  std::vector<std::pair<double, double>> dice;  // (degraded, translated) per seed
  double id_clean = 0, id_degraded = 0;
};

double mean_abs_diff(const data::RasterScene& a, const data::RasterScene& b) {
  const double half = data::full_scale(a.dtype) / 2.0;
  double acc = 0;
  for (std::size_t i = 0; i < a.data.size(); ++i) acc += std::abs(static_cast<double>(a.data[i]) - b.data[i]) / half;
  return acc / static_cast<double>(a.data.size());
}

double blob_dice(const std::vector<data::RasterScene>& scenes, const std::vector<data::RasterScene>& truth) {
  metrics::ConfusionCounts c;
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    c = metrics::confusion_accumulate(c, data::detect_bright_blobs(scenes[i], 0.4), truth[i].mask);
  }
  return metrics::metrics_compute(c).dice.value_or(0.0);
}

// Held-out scenes come from fresh synthesis streams, one per evaluation seed,
// never seen in training.
DeskEvaluation evaluate_desk(const nn::Generator<float>& g, std::size_t patch, std::size_t seeds,
                             std::size_t scenes_per_seed) {
  DeskEvaluation e;
  const std::size_t overlap = patch / 4;
  std::vector<data::RasterScene> all_clean, all_degraded, all_translated;
  double id_clean = 0, id_degraded = 0;
  for (std::size_t s = 0; s < seeds; ++s) {
    data::SynthConfig sc;
    sc.scenes_per_domain = scenes_per_seed;
    const auto held_out = data::synthesize_domains(sc, Rng(1000 + s));
    std::vector<data::RasterScene> degraded, translated;
    for (const auto& d : held_out.degraded) {
      degraded.push_back(d.scene);
      translated.push_back(train::translate_scene(g, d.scene, patch, overlap));
      id_degraded += mean_abs_diff(translated.back(), d.scene);
    }
    for (const auto& c : held_out.clean) {
      id_clean += mean_abs_diff(train::translate_scene(g, c.scene, patch, overlap), c.scene);
      all_clean.push_back(c.scene);
    }
    e.dice.emplace_back(blob_dice(degraded, degraded), blob_dice(translated, degraded));
    all_degraded.insert(all_degraded.end(), degraded.begin(), degraded.end());
    all_translated.insert(all_translated.end(), translated.begin(), translated.end());
  }
  const auto clean_stats = data::channel_stats(all_clean);
  e.gap_before = data::stats_gap(data::channel_stats(all_degraded), clean_stats);
  e.gap_after = data::stats_gap(data::channel_stats(all_translated), clean_stats);
  e.id_clean = id_clean / static_cast<double>(all_clean.size());
  e.id_degraded = id_degraded / static_cast<double>(all_degraded.size());
  return e;
}

train::TrainConfig desk_config(const fs::path& data_root, const fs::path& out_dir) {
  return train::make_config({{"preset", "adanet"},
                             {"patch", "64"},
                             {"steps", "2000"},
                             {"learning_rate", "2e-4"},
                             {"g_base", "16"},
                             {"d_base", "32"},
                             {"freq_hidden", "256"},
                             {"seed", "1"},
                             {"checkpoint_every", "500"},
                             {"low_dir", (data_root / "degraded" / "train").string()},
                             {"high_dir", (data_root / "clean" / "train").string()},
                             {"out_dir", out_dir.string()}});
}

Outcome desk_experiment(const fs::path& workdir, const fs::path& reuse) {
  Outcome o;
  fs::path checkpoint = reuse;
  if (reuse.empty()) {
    const auto data_root = workdir / "desk_data";
    fs::remove_all(data_root);
    data::SynthConfig sc;  // 200 scenes per domain at 128 x 128
    train::synth_command(data_root, sc, 1);
    const auto t0 = std::chrono::steady_clock::now();
    const auto result = train::run_training(desk_config(data_root, workdir / "desk_run"));
    const double minutes = seconds_since(t0) / 60.0;
    checkpoint = result.checkpoint;
    o.check(result.final_step == 2000 && minutes < 45.0,
            std::to_string(result.final_step) + " steps in " + fmt("%.1f", minutes) + " min < 45");
  } else {
    o.detail = "evaluating supplied checkpoint " + reuse.string();
  }
  const auto loaded = train::load_generator(nn::load_checkpoint(checkpoint));
  const auto e = evaluate_desk(loaded.generator, loaded.patch, 10, 10);

  o.check(e.gap_after <= 0.5 * e.gap_before, "(a) stats gap " + fmt("%.4f", e.gap_before) + " -> " +
                                                 fmt("%.4f", e.gap_after) + " (" +
                                                 fmt("%.0f", 100 * (1 - e.gap_after / e.gap_before)) +
                                                 "% shrink, need 50%)");
  int wins = 0;
  std::string pairs;
  for (const auto& [before, after] : e.dice) {
    wins += after > before;
    pairs += (pairs.empty() ? "" : " ") + fmt("%.3f", before) + "->" + fmt("%.3f", after);
  }
  o.check(wins >= 8, "(b) blob Dice higher in " + std::to_string(wins) + "/10 seeds [" + pairs + "]");
  o.check(e.id_clean <= 0.5 * e.id_degraded, "(c) mean|G(clean)-clean| " + fmt("%.4f", e.id_clean) +
                                                 " vs 0.5 x mean|G(deg)-deg| " + fmt("%.4f", 0.5 * e.id_degraded));
  return o;
}

// --- 9. architecture arithmetic --------------------------------------------------------

Outcome architecture() {
  Outcome o;
  Rng rng(9);
  nn::Generator<float> g(nn::GeneratorConfig{}, rng);
  nn::Discriminator<float> d(nn::DiscriminatorConfig{}, rng);
  NoGradGuard no_grad;
  auto x = random_image(10, 256);
  auto y = g.translate(x);
  const auto [lo, hi] = std::minmax_element(y.data().begin(), y.data().end());
  o.check(y.shape() == Shape{4, 256, 256} && *lo >= -1.0f && *hi <= 1.0f,
          "G: " + shape_str(y.shape()) + " in [" + fmt("%.3f", *lo) + ", " + fmt("%.3f", *hi) + "]");
  auto logits = d.forward(x);
  o.check(logits.shape() == Shape{1, 30, 30}, "D: " + shape_str(logits.shape()) + " logits");
  const auto taps = g.encode(x);
  o.check(taps.size() == 5, "encoder features: " + std::to_string(taps.size()) + " taps");
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  fs::path workdir = "acceptance_work";
  std::vector<int> only;
  fs::path desk_checkpoint;
  app.add_option("--workdir", workdir, "Scratch directory");
  app.add_option("--only", only, "Run only these criteria")->delimiter(',');
  app.add_option("--desk-checkpoint", desk_checkpoint, "Evaluate this checkpoint for criterion 8 instead of training");
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(workdir);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"gradient suite", gradient_suite},
      {"FFT oracle", fft_oracle},
      {"InfoNCE closed forms", info_nce_closed_forms},
      {"metrics oracle", metrics_oracle},
      {"preset contract", preset_contract},
      {"determinism and resume", [&] { return determinism_and_resume(workdir); }},
      {"tiling", tiling},
      {"desk-scale synthetic experiment", [&] { return desk_experiment(workdir, desk_checkpoint); }},
      {"architecture arithmetic", architecture},
  };

  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    all = all && o.pass;
    std::printf("criterion %d %s: %s (%s) [%.1f s]\n", id, criteria[i].first.c_str(), o.pass ? "PASS" : "FAIL",
                o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
