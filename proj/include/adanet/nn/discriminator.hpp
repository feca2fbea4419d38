#pragma once

#include <cstddef>
#include <vector>

#include "adanet/nn/parameters.hpp"
#include "adanet/tensor.hpp"

namespace adanet::nn {

// PatchGAN critic: 4x4 convolutions, three stride-2 stages then one stride-1
// stage (widths b, 2b, 4b, 8b) and a stride-1 one-channel logit conv, all
// with bias. There is no normalization layer, so each logit depends on its
// 70x70 input window and nothing else.
struct DiscriminatorConfig {
  std::size_t in_channels = 4;
  std::size_t base_channels = 64;
  double slope = 0.2;

  void validate() const;
};

// Logit grid extent for a square input of side n.
std::size_t discriminator_output_size(std::size_t n);
// Side of the input window that influences one logit.
constexpr std::size_t kDiscriminatorReceptiveField = 70;

template <typename T>
class Discriminator {
 public:
  Discriminator() = default;
  Discriminator(DiscriminatorConfig config, Rng& rng);

  // x [C x H x W] -> raw logits [1 x h x w].
  Tensor<T> forward(const Tensor<T>& x) const;

  [[nodiscard]] const DiscriminatorConfig& config() const { return config_; }
  [[nodiscard]] const ParameterSet<T>& parameters() const { return params_; }

 private:
  struct Stage {
    Tensor<T> w, b;
    std::size_t stride;
  };

  DiscriminatorConfig config_;
  ParameterSet<T> params_;
  std::vector<Stage> stages_;
};

}  // namespace adanet::nn
