#pragma once

#include <cstddef>
#include <string>

#include "adanet/nn/parameters.hpp"
#include "adanet/tensor.hpp"

namespace adanet::nn {

template <typename T>
struct Projection {
  Tensor<T> q;
  Tensor<T> k;
  Tensor<T> v;
};

// Q, K, V as 1x1 convolutions of S [d_m x H x W]. Weights are
// [d_q x d_m x 1 x 1] (Q, K) and [d_v x d_m x 1 x 1] (V); spatial extents are kept.
template <typename T>
Projection<T> conv_projection(const Tensor<T>& s, const Tensor<T>& wq, const Tensor<T>& bq, const Tensor<T>& wk,
                              const Tensor<T>& bk, const Tensor<T>& wv, const Tensor<T>& bv);

// softmax(Q^T K / sqrt(d_q)) applied to V, for Q, K [d_q x n] and V [d_v x n]
// with positions along columns. Row i of the softmax holds query i's weights
// over key positions. Returns [d_v x n].
template <typename T>
Tensor<T> scaled_dot_attention(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v);

// S + alpha * W_o(attention(S)). alpha starts at 0, so a fresh block is the identity.
template <typename T>
class SelfAttention {
 public:
  SelfAttention() = default;
  SelfAttention(std::size_t d_model, Rng& rng);

  Tensor<T> forward(const Tensor<T>& s) const;

  [[nodiscard]] const ParameterSet<T>& parameters() const { return params_; }
  [[nodiscard]] std::size_t d_model() const { return d_model_; }
  [[nodiscard]] std::size_t d_qk() const { return d_model_ / 8; }

  // d_q = d_v = d_m / 8: three projections with bias, output projection with
  // bias, and alpha.
  static std::size_t parameter_count(std::size_t d_model);

  Tensor<T> wq, bq, wk, bk, wv, bv, wo, bo, alpha;

 private:
  std::size_t d_model_ = 0;
  ParameterSet<T> params_;
};

}  // namespace adanet::nn
