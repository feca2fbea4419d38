#include "adanet/nn/discriminator.hpp"

#include <string>

#include "adanet/errors.hpp"
#include "adanet/ops.hpp"

namespace adanet::nn {

void DiscriminatorConfig::validate() const {
  if (in_channels == 0 || base_channels == 0) throw ConfigError("discriminator: channel counts must be positive");
  if (!(slope > 0.0 && slope < 1.0)) throw ConfigError("discriminator: leaky slope must lie in (0, 1)");
}

std::size_t discriminator_output_size(std::size_t n) {
  // Three stride-2 stages (k4 p1): n -> n/2, then two stride-1 stages: -1 each.
  for (int i = 0; i < 3; ++i) {
    if (n < 3) throw DimensionError("discriminator: input too small");
    n = (n + 2 - 4) / 2 + 1;
  }
  if (n < 3) throw DimensionError("discriminator: input too small");
  return n - 2;
}

template <typename T>
Discriminator<T>::Discriminator(DiscriminatorConfig config, Rng& rng) : config_(config) {
  config_.validate();
  const std::size_t b = config_.base_channels;
  const std::size_t widths[] = {config_.in_channels, b, 2 * b, 4 * b, 8 * b, 1};
  const std::size_t strides[] = {2, 2, 2, 1, 1};
  for (std::size_t i = 0; i < 5; ++i) {
    const std::string name = "d" + std::to_string(i);
    Stage s;
    s.stride = strides[i];
    s.w = params_.add_normal(name + ".w", {widths[i + 1], widths[i], 4, 4}, rng);
    s.b = params_.add_constant(name + ".b", {widths[i + 1]}, T(0));
    stages_.push_back(s);
  }
}

template <typename T>
Tensor<T> Discriminator<T>::forward(const Tensor<T>& x) const {
  if (x.rank() != 3 || x.dim(0) != config_.in_channels) {
    throw DimensionError("discriminator: expected " + std::to_string(config_.in_channels) + " x H x W input, got " +
                         shape_str(x.shape()));
  }
  Tensor<T> h = x;
  for (std::size_t i = 0; i < stages_.size(); ++i) {
    const Stage& s = stages_[i];
    h = ops::conv2d(h, s.w, s.b, s.stride, 1);
    if (i == stages_.size() - 1) break;
    h = ops::leaky_relu(h, config_.slope);
  }
  return h;
}

template class Discriminator<float>;
template class Discriminator<double>;

}  // namespace adanet::nn
