#include "adanet/nn/attention.hpp"

#include <cmath>

#include "adanet/errors.hpp"
#include "adanet/ops.hpp"

namespace adanet::nn {

template <typename T>
Projection<T> conv_projection(const Tensor<T>& s, const Tensor<T>& wq, const Tensor<T>& bq, const Tensor<T>& wk,
                              const Tensor<T>& bk, const Tensor<T>& wv, const Tensor<T>& bv) {
  if (s.rank() != 3) throw DimensionError("conv_projection: S must be d_m x H x W, got " + shape_str(s.shape()));
  if (wq.shape() != wk.shape()) throw DimensionError("conv_projection: Q and K weights must share a shape");
  for (const auto* w : {&wq, &wk, &wv}) {
    if (w->rank() != 4 || w->dim(2) != 1 || w->dim(3) != 1) {
      throw DimensionError("conv_projection: projection kernels are 1x1");
    }
  }
  return {ops::conv2d(s, wq, bq, 1, 0), ops::conv2d(s, wk, bk, 1, 0), ops::conv2d(s, wv, bv, 1, 0)};
}

template <typename T>
Tensor<T> scaled_dot_attention(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v) {
  if (q.rank() != 2 || k.shape() != q.shape() || v.rank() != 2 || v.dim(1) != q.dim(1)) {
    throw DimensionError("scaled_dot_attention: expected Q, K [d x n] and V [d_v x n]");
  }
  const T inv_sqrt = T(1) / std::sqrt(static_cast<T>(q.dim(0)));
  auto logits = ops::mul_scalar(ops::matmul(q, k, true, false), inv_sqrt);
  auto weights = ops::softmax(logits, 1);
  return ops::matmul(v, weights, false, true);
}

template <typename T>
SelfAttention<T>::SelfAttention(std::size_t d_model, Rng& rng) : d_model_(d_model) {
  if (d_model < 8 || d_model % 8 != 0) {
    throw ParameterError("attention width must be a positive multiple of 8, got " + std::to_string(d_model));
  }
  const std::size_t d = d_model / 8;
  wq = params_.add_normal("wq", {d, d_model, 1, 1}, rng);
  bq = params_.add_constant("bq", {d}, T(0));
  wk = params_.add_normal("wk", {d, d_model, 1, 1}, rng);
  bk = params_.add_constant("bk", {d}, T(0));
  wv = params_.add_normal("wv", {d, d_model, 1, 1}, rng);
  bv = params_.add_constant("bv", {d}, T(0));
  wo = params_.add_normal("wo", {d_model, d, 1, 1}, rng);
  bo = params_.add_constant("bo", {d_model}, T(0));
  alpha = params_.add_constant("alpha", {1}, T(0));
}

template <typename T>
Tensor<T> SelfAttention<T>::forward(const Tensor<T>& s) const {
  if (s.rank() != 3 || s.dim(0) != d_model_) {
    throw DimensionError("attention: expected " + std::to_string(d_model_) + " channels, got " +
                         shape_str(s.shape()));
  }
  const std::size_t h = s.dim(1), w = s.dim(2), d = d_qk();
  auto p = conv_projection(s, wq, bq, wk, bk, wv, bv);
  auto q = ops::reshape(p.q, {d, h * w});
  auto k = ops::reshape(p.k, {d, h * w});
  auto v = ops::reshape(p.v, {d, h * w});
  auto attended = ops::reshape(scaled_dot_attention(q, k, v), {d, h, w});
  auto projected = ops::conv2d(attended, wo, bo, 1, 0);
  return ops::add(s, ops::scale(projected, alpha));
}

template <typename T>
std::size_t SelfAttention<T>::parameter_count(std::size_t d_model) {
  const std::size_t d = d_model / 8;
  return 3 * (d * d_model + d) + (d_model * d + d_model) + 1;
}

template class SelfAttention<float>;
template class SelfAttention<double>;
template Projection<float> conv_projection(const Tensor<float>&, const Tensor<float>&, const Tensor<float>&,
                                           const Tensor<float>&, const Tensor<float>&, const Tensor<float>&,
                                           const Tensor<float>&);
template Projection<double> conv_projection(const Tensor<double>&, const Tensor<double>&, const Tensor<double>&,
                                            const Tensor<double>&, const Tensor<double>&, const Tensor<double>&,
                                            const Tensor<double>&);
template Tensor<float> scaled_dot_attention(const Tensor<float>&, const Tensor<float>&, const Tensor<float>&);
template Tensor<double> scaled_dot_attention(const Tensor<double>&, const Tensor<double>&, const Tensor<double>&);

}  // namespace adanet::nn
