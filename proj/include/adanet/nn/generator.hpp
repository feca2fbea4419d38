#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "adanet/nn/attention.hpp"
#include "adanet/ops.hpp"
#include "adanet/nn/parameters.hpp"
#include "adanet/tensor.hpp"

namespace adanet::nn {

// Encoder stages are numbered for tap selection:
//   0 = raw input, 1 = 7x7 stem, 2 = first stride-2 conv, 3 = second stride-2
//   conv, 4 + r = output of residual block r (0-based).
struct GeneratorConfig {
  std::size_t in_channels = 4;
  std::size_t base_channels = 64;
  std::size_t n_downsample = 2;
  std::size_t n_resblocks = 4;
  bool attention_after_resblocks = true;
  bool decoder_attention = false;  // second block after the first upsampling stage
  std::vector<std::size_t> feature_taps{0, 1, 2, 3, 5};
  // Test double: translate() returns its input unchanged; the encoder (and
  // therefore encode()) is still a real network.
  bool identity_output = false;
  // Hidden nonlinearity. Gradient tests swap in tanh to get a kink-free network.
  ops::ActivationKind activation = ops::ActivationKind::kRelu;

  // Throws ConfigError on an unsupported combination.
  void validate() const;
};

// Parameter count as a function of the config, counted layer by layer.
std::size_t generator_parameter_count(const GeneratorConfig& config);

template <typename T>
class Generator {
 public:
  Generator() = default;
  Generator(GeneratorConfig config, Rng& rng);

  // y = G(x), same shape as x, values in [-1, 1].
  Tensor<T> translate(const Tensor<T>& x) const;
  // translate() that also records the configured feature taps of x.
  Tensor<T> forward(const Tensor<T>& x, std::vector<Tensor<T>>* taps) const;
  // Taps only; stops after the deepest configured tap.
  std::vector<Tensor<T>> encode(const Tensor<T>& x) const;

  // Channel width of each tap, in tap order.
  [[nodiscard]] std::vector<std::size_t> tap_channels() const;

  [[nodiscard]] const GeneratorConfig& config() const { return config_; }
  [[nodiscard]] const ParameterSet<T>& parameters() const { return params_; }

 private:
  struct ConvIn {
    Tensor<T> w, gamma, beta;
  };
  struct ResBlock {
    ConvIn a, b;
  };

  ConvIn make_conv_in(const std::string& name, std::size_t out, std::size_t in, std::size_t f, Rng& rng);
  Tensor<T> run_encoder(const Tensor<T>& x, std::vector<Tensor<T>>* taps, std::size_t last_stage) const;
  void check_input(const Tensor<T>& x) const;

  GeneratorConfig config_;
  ParameterSet<T> params_;
  ConvIn stem_;
  std::vector<ConvIn> down_;
  std::vector<ResBlock> res_;
  SelfAttention<T> attention_;
  std::vector<ConvIn> up_;
  SelfAttention<T> decoder_attention_;
  Tensor<T> out_w_, out_b_;
};

}  // namespace adanet::nn
