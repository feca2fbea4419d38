#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "adanet/data/augment.hpp"
#include "adanet/loss/objective.hpp"

namespace adanet::train {

// Environment variable consulted for relative data directories.
inline constexpr const char* kDataRootEnv = "ADANET_DATA_ROOT";

struct TrainConfig {
  loss::Preset preset = loss::Preset::kAdanet;
  loss::LossWeights weights = loss::preset_weights(loss::Preset::kAdanet);

  double learning_rate = 2e-6;
  std::size_t epochs = 60;
  std::size_t batch_size = 1;
  std::uint64_t steps = 0;          // hard step budget, 0 = epochs only
  double time_budget_seconds = 0;   // wall-clock budget, 0 = none
  std::uint64_t seed = 0;
  std::size_t checkpoint_every = 0; // steps between checkpoints, 0 = final only

  std::filesystem::path low_dir;    // degraded domain scenes
  std::filesystem::path high_dir;   // target domain scenes
  std::filesystem::path out_dir = "run";

  std::size_t patch = 256;
  std::size_t n_spatial = 256;      // N_s
  std::size_t n_freq = 64;          // N_f
  std::size_t freq_patch = 32;

  std::size_t channels = 4;
  std::size_t g_base = 64;
  std::size_t n_resblocks = 4;
  bool attention = true;
  bool decoder_attention = false;
  std::size_t d_base = 64;
  std::size_t head_width = 256;
  std::size_t freq_hidden = 1024;
  std::size_t freq_out = 256;

  bool augment = true;

  // Throws ConfigError / ParameterError on inconsistent settings.
  void validate() const;

  // Flat "key=value" lines, one per setting, readable by parse_config.
  [[nodiscard]] std::string to_text() const;
};

// Applies key=value settings on top of the defaults. `preset` is applied
// first (it resets the loss weights), explicit weight keys afterwards.
// Unknown keys raise ConfigError.
TrainConfig make_config(const std::map<std::string, std::string>& settings);

// Parses "key=value" lines; '#' starts a comment. ConfigError on malformed lines.
std::map<std::string, std::string> parse_key_values(const std::string& text);

// File settings, then overrides ("key=value" strings) on top.
TrainConfig load_config(const std::filesystem::path& file, const std::vector<std::string>& overrides);
TrainConfig config_from_overrides(const std::vector<std::string>& overrides);

// Relative paths are resolved against $ADANET_DATA_ROOT when it is set.
std::filesystem::path resolve_data_path(const std::filesystem::path& p);

}  // namespace adanet::train
