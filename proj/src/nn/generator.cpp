#include "adanet/nn/generator.hpp"

#include <algorithm>

#include "adanet/errors.hpp"
#include "adanet/ops.hpp"

namespace adanet::nn {

namespace {

constexpr std::size_t kNumTaps = 5;

}  // namespace

void GeneratorConfig::validate() const {
  if (in_channels == 0) throw ConfigError("generator: in_channels must be positive");
  if (n_downsample != 2) throw ConfigError("generator: n_downsample must be 2");
  if (activation == ops::ActivationKind::kLeakyRelu) throw ConfigError("generator: leaky_relu is not offered");
  if (n_resblocks < 1) throw ConfigError("generator: at least one residual block required");
  if (base_channels < 2 || (4 * base_channels) % 8 != 0) {
    throw ConfigError("generator: base_channels must be even");
  }
  if (feature_taps.size() != kNumTaps) throw ConfigError("generator: exactly 5 feature taps required");
  for (std::size_t i = 0; i < feature_taps.size(); ++i) {
    if (feature_taps[i] >= 4 + n_resblocks) throw ConfigError("generator: feature tap index out of range");
    if (i && feature_taps[i] <= feature_taps[i - 1]) throw ConfigError("generator: feature taps must increase");
  }
}

std::size_t generator_parameter_count(const GeneratorConfig& c) {
  c.validate();
  const std::size_t b = c.base_channels, in = c.in_channels;
  auto conv_in = [](std::size_t out, std::size_t inp, std::size_t f) { return out * inp * f * f + 2 * out; };
  std::size_t n = conv_in(b, in, 7);
  n += conv_in(2 * b, b, 3) + conv_in(4 * b, 2 * b, 3);
  n += c.n_resblocks * 2 * conv_in(4 * b, 4 * b, 3);
  if (c.attention_after_resblocks) n += SelfAttention<float>::parameter_count(4 * b);
  n += conv_in(2 * b, 4 * b, 3) + conv_in(b, 2 * b, 3);
  if (c.decoder_attention) n += SelfAttention<float>::parameter_count(2 * b);
  n += in * b * 49 + in;
  return n;
}

template <typename T>
typename Generator<T>::ConvIn Generator<T>::make_conv_in(const std::string& name, std::size_t out, std::size_t in,
                                                         std::size_t f, Rng& rng) {
  ConvIn c;
  c.w = params_.add_normal(name + ".w", {out, in, f, f}, rng);
  c.gamma = params_.add_constant(name + ".gamma", {out}, T(1));
  c.beta = params_.add_constant(name + ".beta", {out}, T(0));
  return c;
}

template <typename T>
Generator<T>::Generator(GeneratorConfig config, Rng& rng) : config_(std::move(config)) {
  config_.validate();
  const std::size_t b = config_.base_channels, in = config_.in_channels;
  stem_ = make_conv_in("stem", b, in, 7, rng);
  down_.push_back(make_conv_in("down0", 2 * b, b, 3, rng));
  down_.push_back(make_conv_in("down1", 4 * b, 2 * b, 3, rng));
  for (std::size_t r = 0; r < config_.n_resblocks; ++r) {
    const std::string p = "res" + std::to_string(r);
    ResBlock blk;
    blk.a = make_conv_in(p + ".a", 4 * b, 4 * b, 3, rng);
    blk.b = make_conv_in(p + ".b", 4 * b, 4 * b, 3, rng);
    res_.push_back(blk);
  }
  if (config_.attention_after_resblocks) {
    attention_ = SelfAttention<T>(4 * b, rng);
    params_.merge("attn.", attention_.parameters());
  }
  up_.push_back(make_conv_in("up0", 2 * b, 4 * b, 3, rng));
  if (config_.decoder_attention) {
    decoder_attention_ = SelfAttention<T>(2 * b, rng);
    params_.merge("attn_dec.", decoder_attention_.parameters());
  }
  up_.push_back(make_conv_in("up1", b, 2 * b, 3, rng));
  out_w_ = params_.add_normal("out.w", {in, b, 7, 7}, rng);
  out_b_ = params_.add_constant("out.b", {in}, T(0));
}

template <typename T>
void Generator<T>::check_input(const Tensor<T>& x) const {
  if (x.rank() != 3 || x.dim(0) != config_.in_channels) {
    throw DimensionError("generator: expected " + std::to_string(config_.in_channels) + " x H x W input, got " +
                         shape_str(x.shape()));
  }
  if (x.dim(1) % 4 != 0 || x.dim(2) % 4 != 0) {
    throw DimensionError("generator: spatial extents must be multiples of 4, got " + shape_str(x.shape()));
  }
}

template <typename T>
Tensor<T> Generator<T>::run_encoder(const Tensor<T>& x, std::vector<Tensor<T>>* taps, std::size_t last_stage) const {
  const auto& tap_idx = config_.feature_taps;
  auto record = [&](std::size_t stage, const Tensor<T>& t) {
    if (taps && std::find(tap_idx.begin(), tap_idx.end(), stage) != tap_idx.end()) taps->push_back(t);
  };
  const ops::Activation act{config_.activation};
  auto conv_in_relu = [act](const ConvIn& c, const Tensor<T>& t, std::size_t stride, std::size_t zero_pad) {
    return ops::activation(ops::instance_norm(ops::conv2d(t, c.w, Tensor<T>{}, stride, zero_pad), c.gamma, c.beta),
                           act);
  };

  record(0, x);
  Tensor<T> h = conv_in_relu(stem_, ops::reflect_pad(x, 3), 1, 0);
  record(1, h);
  if (last_stage < 2) return h;
  h = conv_in_relu(down_[0], h, 2, 1);
  record(2, h);
  if (last_stage < 3) return h;
  h = conv_in_relu(down_[1], h, 2, 1);
  record(3, h);
  for (std::size_t r = 0; r < res_.size() && 4 + r <= last_stage; ++r) {
    const ResBlock& blk = res_[r];
    Tensor<T> y = conv_in_relu(blk.a, ops::reflect_pad(h, 1), 1, 0);
    y = ops::instance_norm(ops::conv2d(ops::reflect_pad(y, 1), blk.b.w, Tensor<T>{}, 1, 0), blk.b.gamma, blk.b.beta);
    h = ops::add(h, y);
    record(4 + r, h);
  }
  return h;
}

template <typename T>
Tensor<T> Generator<T>::forward(const Tensor<T>& x, std::vector<Tensor<T>>* taps) const {
  check_input(x);
  if (taps) taps->clear();
  const std::size_t all_stages = 3 + res_.size();
  Tensor<T> h = run_encoder(x, taps, all_stages);
  if (config_.identity_output) return ops::reshape(x, x.shape());

  if (config_.attention_after_resblocks) h = attention_.forward(h);
  for (std::size_t u = 0; u < up_.size(); ++u) {
    const ConvIn& c = up_[u];
    h = ops::upsample_nearest(h, 2);
    h = ops::activation(
        ops::instance_norm(ops::conv2d(ops::reflect_pad(h, 1), c.w, Tensor<T>{}, 1, 0), c.gamma, c.beta),
        ops::Activation{config_.activation});
    if (u == 0 && config_.decoder_attention) h = decoder_attention_.forward(h);
  }
  return ops::tanh(ops::conv2d(ops::reflect_pad(h, 3), out_w_, out_b_, 1, 0));
}

template <typename T>
Tensor<T> Generator<T>::translate(const Tensor<T>& x) const {
  return forward(x, nullptr);
}

template <typename T>
std::vector<Tensor<T>> Generator<T>::encode(const Tensor<T>& x) const {
  check_input(x);
  std::vector<Tensor<T>> taps;
  run_encoder(x, &taps, config_.feature_taps.back());
  return taps;
}

template <typename T>
std::vector<std::size_t> Generator<T>::tap_channels() const {
  const std::size_t b = config_.base_channels;
  std::vector<std::size_t> out;
  for (std::size_t stage : config_.feature_taps) {
    if (stage == 0) out.push_back(config_.in_channels);
    else if (stage == 1) out.push_back(b);
    else if (stage == 2) out.push_back(2 * b);
    else out.push_back(4 * b);
  }
  return out;
}

template class Generator<float>;
template class Generator<double>;

}  // namespace adanet::nn
