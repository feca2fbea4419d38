#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "adanet/adam.hpp"
#include "adanet/data/patches.hpp"
#include "adanet/loss/contrastive.hpp"
#include "adanet/loss/heads.hpp"
#include "adanet/loss/objective.hpp"
#include "adanet/nn/checkpoint.hpp"
#include "adanet/nn/discriminator.hpp"
#include "adanet/nn/generator.hpp"
#include "adanet/rng.hpp"
#include "adanet/train/config.hpp"

namespace adanet::train {

using Real = float;

nn::GeneratorConfig generator_config(const TrainConfig& cfg);
nn::DiscriminatorConfig discriminator_config(const TrainConfig& cfg);

// The groups a preset trains, out of "G", "D", "Phi", "Theta", "G_I"
// (high -> low generator) and "D_L" (low-domain critic).
std::vector<std::string> declared_groups(const TrainConfig& cfg);

enum class StepPhase { kAfterDiscriminator };

// Networks, heads and optimizers for one preset. The generator-side
// optimizer covers G together with Phi and Theta when those exist.
class Trainer {
 public:
  explicit Trainer(TrainConfig cfg);

  // One discriminator update on (high, detached G(low)) followed by one
  // generator update on the preset objective. `sampling` supplies the spatial
  // locations and frequency patches. NumericalError on a non-finite term.
  loss::LossReport train_step(const Tensor<Real>& low, const Tensor<Real>& high, Rng& sampling);

  // Called between the discriminator and generator updates of a step.
  void set_observer(std::function<void(StepPhase)> observer) { observer_ = std::move(observer); }

  [[nodiscard]] const TrainConfig& config() const { return cfg_; }
  [[nodiscard]] std::uint64_t step() const { return step_; }
  void set_step(std::uint64_t s) { step_ = s; }

  [[nodiscard]] const nn::Generator<Real>& generator() const { return g_; }
  [[nodiscard]] const nn::Generator<Real>& inverse_generator() const { return g_inv_; }
  [[nodiscard]] const nn::Discriminator<Real>& discriminator() const { return d_; }
  // Null when the preset does not train the head.
  [[nodiscard]] const loss::ProjectionHeads<Real>* phi() const { return has_phi_ ? &phi_ : nullptr; }
  [[nodiscard]] const loss::FreqHead<Real>* theta() const { return has_theta_ ? &theta_ : nullptr; }

  // Group name -> named parameter tensors, for all six groups whether or not
  // the preset trains them.
  [[nodiscard]] std::map<std::string, std::vector<std::pair<std::string, Tensor<Real>>>> groups() const;

  // Parameters, both optimizers' moments and step counters. `meta` entries
  // are added to the checkpoint's key=value block.
  [[nodiscard]] nn::Checkpoint to_checkpoint(const std::map<std::string, std::string>& meta = {}) const;
  // Restores everything to_checkpoint wrote. FormatError on missing entries.
  void restore(const nn::Checkpoint& ckpt);

 private:
  struct Optimizer {
    std::vector<std::string> names;
    Adam<Real> adam;
  };
  static Optimizer make_optimizer(const std::vector<std::pair<std::string, Tensor<Real>>>& named, double lr);
  loss::LossReport step_contrastive(const Tensor<Real>& low, const Tensor<Real>& high, Rng& sampling);
  loss::LossReport step_cyclegan(const Tensor<Real>& low, const Tensor<Real>& high);
  void check_finite(const char* term, double value) const;
  std::vector<Shape> tap_shapes(const Tensor<Real>& x);

  TrainConfig cfg_;
  nn::Generator<Real> g_, g_inv_;
  nn::Discriminator<Real> d_, d_low_;
  loss::ProjectionHeads<Real> phi_;
  loss::FreqHead<Real> theta_;
  bool has_phi_ = false, has_theta_ = false, cyclegan_ = false;
  Optimizer opt_g_, opt_d_;
  std::uint64_t step_ = 0;
  std::map<Shape, std::vector<Shape>> tap_shape_cache_;
  std::function<void(StepPhase)> observer_;
};

// Normalized training patches of one domain directory.
std::vector<data::Patch> load_domain_patches(const std::filesystem::path& dir, std::size_t patch);

struct LoopResult {
  std::uint64_t steps_run = 0;
  std::uint64_t final_step = 0;
  std::vector<loss::LossReport> reports;
  std::filesystem::path checkpoint;
  std::filesystem::path csv;
};

// Deterministic data schedule: step s draws everything from substreams keyed
// by s, so a resumed run replays the same pairings, samples and augmentation.
class DataSchedule {
 public:
  DataSchedule(std::vector<data::Patch> low, std::vector<data::Patch> high, std::uint64_t seed, bool augment);
  [[nodiscard]] std::size_t steps_per_epoch() const { return low_.size(); }
  // Low and high patch for global step s (0-based) plus the step's sampling stream.
  struct Item {
    Tensor<Real> low, high;
    Rng sampling;
  };
  [[nodiscard]] Item at(std::uint64_t step) const;
  // Low-domain visiting order of an epoch (a seeded permutation).
  [[nodiscard]] std::vector<std::size_t> epoch_order(std::uint64_t epoch) const;

 private:
  std::vector<data::Patch> low_, high_;
  Rng root_;
  bool augment_;
  mutable std::uint64_t cached_epoch_ = ~std::uint64_t{0};
  mutable std::vector<std::size_t> cached_order_;
};

// Runs steps from trainer.step() up to the epoch/step/time budget, writing
// <out_dir>/losses.csv (appending when resuming) and checkpoints.
LoopResult train_loop(Trainer& trainer, const DataSchedule& schedule);

// Builds a trainer from cfg, optionally resuming from a checkpoint, and runs
// the loop. Data directories are checked before the first step.
LoopResult run_training(const TrainConfig& cfg, const std::filesystem::path& resume = {});

// Rebuilds the trainer recorded in a checkpoint (config echo + weights).
Trainer trainer_from_checkpoint(const nn::Checkpoint& ckpt);

}  // namespace adanet::train
