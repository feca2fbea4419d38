#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "adanet/nn/generator.hpp"
#include "adanet/tensor.hpp"

namespace adanet::loss {

enum class Preset { kAdanet, kCut, kFastCut, kCycleGan };
enum class GanFlavor { kLeastSquares, kNonSaturatingBce };
enum class Role { kGenerator, kDiscriminator };

std::string_view preset_name(Preset p);
Preset parse_preset(std::string_view s);  // ConfigError on unknown names
std::string_view flavor_name(GanFlavor f);
GanFlavor parse_flavor(std::string_view s);  // ParameterError on unknown names

struct LossWeights {
  double spatial = 0.5;     // lambda
  double id_spatial = 0.5;  // beta
  double freq = 0.5;        // gamma
  double id_freq = 0.5;     // vartheta
  double cycle = 0.0;
  double tau = 0.07;
  GanFlavor flavor = GanFlavor::kLeastSquares;

  // Throws ParameterError for negative weights or tau <= 0.
  void validate() const;
};

LossWeights preset_weights(Preset p);

// Least squares: D = mean((real - 1)^2) + mean(fake^2), G = mean((fake - 1)^2).
// Non-saturating BCE on logits: D = mean(softplus(-real)) + mean(softplus(fake)),
// G = mean(softplus(-fake)). `real` is unused (may be undefined) for the generator role.
template <typename T>
Tensor<T> adversarial_loss(const Tensor<T>& real_logits, const Tensor<T>& fake_logits, Role role, GanFlavor flavor);

// mean|I_l - G_I(G_F(I_l))| + mean|I_h - G_F(G_I(I_h))|. ConfigError unless preset is cyclegan.
template <typename T>
Tensor<T> cycle_consistency_loss(Preset preset, const Tensor<T>& low, const Tensor<T>& high,
                                 const nn::Generator<T>& g_forward, const nn::Generator<T>& g_inverse);

// Elementwise mean |a - b|.
template <typename T>
Tensor<T> mean_l1(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
struct LossTerms {
  Tensor<T> adversarial_g;
  Tensor<T> spatial;
  Tensor<T> id_spatial;
  Tensor<T> freq;
  Tensor<T> id_freq;
  Tensor<T> cycle;
};

// One CSV row. Absent values are terms the preset does not compute.
struct LossReport {
  std::uint64_t step = 0;
  std::optional<double> adversarial_g;
  std::optional<double> adversarial_d;
  std::optional<double> spatial;
  std::optional<double> id_spatial;
  std::optional<double> freq;
  std::optional<double> id_freq;
  std::optional<double> cycle;
  double total = 0.0;

  static std::string csv_header();
  [[nodiscard]] std::string csv_row() const;
};

template <typename T>
struct Objective {
  Tensor<T> total;
  LossReport report;
};

// total = L_A(G) + lambda L_Spatial + beta L_IDSpatial + gamma L_Freq + vartheta L_IDFreq
//         + cycle weight * L_cycle.
// A term is active iff its weight is positive; an active term that is
// undefined raises ConfigError. Inactive terms are neither added nor reported.
template <typename T>
Objective<T> total_objective(const LossTerms<T>& terms, const LossWeights& w);

}  // namespace adanet::loss
