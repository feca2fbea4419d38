#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "adanet/errors.hpp"
#include "adanet/metrics.hpp"
#include "adanet/train/commands.hpp"
#include "adanet/train/config.hpp"
#include "adanet/train/trainer.hpp"

namespace fs = std::filesystem;
using namespace adanet;

int main(int argc, char** argv) {
  CLI::App app{"adanet: unpaired multispectral quality translation"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "Generate the two synthetic domains");
  fs::path synth_out = "data";
  std::uint64_t synth_seed = 0;
  data::SynthConfig synth_cfg;
  synth->add_option("--out", synth_out, "Output root")->capture_default_str();
  synth->add_option("--seed", synth_seed, "Random seed")->capture_default_str();
  synth->add_option("--scenes", synth_cfg.scenes_per_domain, "Scenes per domain")->capture_default_str();
  synth->add_option("--size", synth_cfg.size, "Scene side in pixels")->capture_default_str();

  // train
  auto* train = app.add_subcommand("train", "Train a preset");
  fs::path config_file, resume;
  std::vector<std::string> overrides;
  train->add_option("--config", config_file, "key=value configuration file");
  train->add_option("--set", overrides, "Override, e.g. --set preset=cut --set steps=100");
  train->add_option("--resume", resume, "Checkpoint to resume from");

  // translate
  auto* translate = app.add_subcommand("translate", "Translate scenes with a trained generator");
  fs::path checkpoint, translate_out = "translated";
  std::vector<fs::path> inputs;
  train::TranslateOptions topt;
  translate->add_option("--checkpoint", checkpoint, "Training checkpoint")->required();
  translate->add_option("--out", translate_out, "Output directory")->capture_default_str();
  translate->add_option("--overlap", topt.overlap, "Tile overlap in pixels")->capture_default_str();
  translate->add_option("--iterations", topt.iterations, "Generator applications")->capture_default_str();
  translate->add_option("--patch", topt.patch, "Tile size (default: training patch)");
  translate->add_flag("--false-color", topt.false_color, "Also write (NIR, R, G) previews");
  translate->add_option("inputs", inputs, "Scenes or directories")->required();

  // eval
  auto* eval = app.add_subcommand("eval", "Segmentation metrics over mask scenes");
  std::vector<fs::path> predicted, truth;
  double threshold = 0.5;
  fs::path eval_csv;
  eval->add_option("--pred", predicted, "Predicted mask scenes or directories")->required();
  eval->add_option("--truth", truth, "Truth scenes or directories")->required();
  eval->add_option("--threshold", threshold, "Prediction threshold")->capture_default_str();
  eval->add_option("--csv", eval_csv, "Also write the metrics CSV here");

  // gradcheck
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient suite");
  std::string scope = "all";
  std::size_t seeds = 20;
  double tolerance = 1e-4;
  bool inject_fault = false;
  gradcheck->add_option("--scope", scope, "ops, attention, losses or all")->capture_default_str();
  gradcheck->add_option("--seeds", seeds, "Seeds per check")->capture_default_str();
  gradcheck->add_option("--tolerance", tolerance, "Max relative error")->capture_default_str();
  gradcheck->add_flag("--inject-fault", inject_fault, "Use a sign-flipped conv2d backward");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) {
      const auto d = train::synth_command(synth_out, synth_cfg, synth_seed);
      std::cout << "wrote " << d.clean.size() << " clean and " << d.degraded.size() << " degraded scenes to "
                << synth_out << "\n";
    } else if (*train) {
      const auto cfg = train::load_config(config_file, overrides);
      const auto r = train::run_training(cfg, resume);
      std::cout << "ran " << r.steps_run << " steps (now at step " << r.final_step << ")\n"
                << "losses: " << r.csv.string() << "\ncheckpoint: " << r.checkpoint.string() << "\n";
    } else if (*translate) {
      const auto written = train::translate_command(checkpoint, train::expand_scene_args(inputs), translate_out, topt);
      std::cout << "translated " << written.size() << " scenes into " << translate_out << "\n";
    } else if (*eval) {
      const auto r = train::evaluate_command(train::expand_scene_args(predicted), train::expand_scene_args(truth),
                                             threshold);
      std::cout << metrics::report_table(r.report);
      if (!eval_csv.empty()) {
        std::ofstream out(eval_csv);
        out << metrics::report_csv_header() << "\n" << metrics::report_csv_row(r.report) << "\n";
      }
    } else if (*gradcheck) {
      return train::gradcheck_command(train::parse_scope(scope), seeds, tolerance, inject_fault, std::cout);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
