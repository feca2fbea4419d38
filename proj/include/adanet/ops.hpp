#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "adanet/tensor.hpp"

// Differentiable primitives. Every op is a free function returning a new
// tensor; when grad mode is on and an input requires grad, the result carries
// the backward closure. Image-like tensors are channels x height x width with
// no batch axis.
namespace adanet::ops {

template <typename T>
struct ComplexTensor {
  Tensor<T> re;
  Tensor<T> im;
};

// --- elementwise -----------------------------------------------------------

template <typename T> Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> add_scalar(const Tensor<T>& a, T s);
template <typename T> Tensor<T> mul_scalar(const Tensor<T>& a, T s);
// alpha * x where alpha is a one-element tensor (e.g. a learned scale).
template <typename T> Tensor<T> scale(const Tensor<T>& x, const Tensor<T>& alpha);
template <typename T> Tensor<T> square(const Tensor<T>& a);
template <typename T> Tensor<T> abs(const Tensor<T>& a);
template <typename T> Tensor<T> exp(const Tensor<T>& a);
template <typename T> Tensor<T> log(const Tensor<T>& a);
template <typename T> Tensor<T> softplus(const Tensor<T>& a);

enum class ActivationKind { kRelu, kLeakyRelu, kTanh, kSigmoid };

struct Activation {
  ActivationKind kind = ActivationKind::kRelu;
  double slope = 0.2;  // leaky_relu only, must lie in (0, 1)
};

// relu'(0) is 0.
template <typename T> Tensor<T> activation(const Tensor<T>& x, Activation act);
template <typename T> Tensor<T> relu(const Tensor<T>& x) { return activation(x, {ActivationKind::kRelu}); }
template <typename T> Tensor<T> leaky_relu(const Tensor<T>& x, double slope) {
  return activation(x, {ActivationKind::kLeakyRelu, slope});
}
template <typename T> Tensor<T> tanh(const Tensor<T>& x) { return activation(x, {ActivationKind::kTanh}); }
template <typename T> Tensor<T> sigmoid(const Tensor<T>& x) { return activation(x, {ActivationKind::kSigmoid}); }

// --- reductions & shape ------------------------------------------------------

template <typename T> Tensor<T> sum(const Tensor<T>& a);
template <typename T> Tensor<T> mean(const Tensor<T>& a);
template <typename T> Tensor<T> reshape(const Tensor<T>& a, Shape shape);
template <typename T> Tensor<T> transpose2d(const Tensor<T>& a);
template <typename T> Tensor<T> concat(const std::vector<Tensor<T>>& parts, std::size_t axis);
// a[index] along axis 0.
template <typename T> Tensor<T> select(const Tensor<T>& a, std::size_t index);

// --- linear algebra ----------------------------------------------------------

// op(a) * op(b) for rank-2 operands.
template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b, bool transpose_a = false, bool transpose_b = false);

// y = W x + b for x of shape [n] or rows x[r, n]; W is [m x n], b is [m] or undefined.
template <typename T>
Tensor<T> dense(const Tensor<T>& x, const Tensor<T>& weights, const Tensor<T>& bias);

// --- image ops -----------------------------------------------------------------

// Cross-correlation with zero padding. weights [C_out x C_in x f x f], bias [C_out]
// or undefined. Output extent floor((H + 2 pad - f) / stride) + 1.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>& bias, std::size_t stride,
                 std::size_t padding);

// Mirror padding without edge repetition; pad must be < H and < W.
template <typename T> Tensor<T> reflect_pad(const Tensor<T>& input, std::size_t pad);

// Per-channel normalization over H x W with biased variance, then gamma/beta.
// Zero-variance channels map to beta.
template <typename T>
Tensor<T> instance_norm(const Tensor<T>& input, const Tensor<T>& gamma, const Tensor<T>& beta, T eps = T(1e-5));

template <typename T> Tensor<T> upsample_nearest(const Tensor<T>& input, std::size_t factor);

// Max-subtracted softmax along `axis`.
template <typename T> Tensor<T> softmax(const Tensor<T>& logits, std::size_t axis);

// mean_i [ logsumexp(logits[i, :]) - logits[i, targets[i]] ] for logits [n x m].
template <typename T>
Tensor<T> cross_entropy_rows(const Tensor<T>& logits, const std::vector<std::size_t>& targets);

// Rows divided by (L2 norm + eps).
template <typename T> Tensor<T> l2_normalize_rows(const Tensor<T>& x, T eps = T(1e-7));

// tap [C x h x w], flat spatial indices -> [n x C] feature rows.
template <typename T>
Tensor<T> gather_positions(const Tensor<T>& tap, const std::vector<std::size_t>& flat_indices);

// image [C x H x W] -> [n x C x size x size] crops at (row, col) origins.
template <typename T>
Tensor<T> crop_patches(const Tensor<T>& image, const std::vector<std::pair<std::size_t, std::size_t>>& origins,
                       std::size_t size);

// Unnormalized forward DFT over the last two axes (N x N, N a power of two).
template <typename T> ComplexTensor<T> fft2d(const Tensor<T>& input);

namespace testing {
// Identity in the forward pass, negated gradient in the backward pass. Used
// to build deliberately broken ops for gradient-checker fault injection.
template <typename T> Tensor<T> negate_grad(const Tensor<T>& x);
}  // namespace testing

}  // namespace adanet::ops
