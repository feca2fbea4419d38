#include "adanet/ops.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <string>

#include "adanet/errors.hpp"
#include "adanet/fft.hpp"
#include "adanet/kernels/gemm.hpp"

namespace adanet::ops {

namespace {

using kernels::gemm;
using kernels::Trans;

template <typename T>
using ImplPtr = std::shared_ptr<TensorImpl<T>>;

// Gradient buffer of `t` if it participates in backward, else nullptr.
template <typename T>
T* grad_ptr(const ImplPtr<T>& t) {
  if (!t || !t->requires_grad) return nullptr;
  t->ensure_grad();
  return t->grad.data();
}

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
  }
}

template <typename T>
void require_rank(const Tensor<T>& a, std::size_t rank, const char* op) {
  if (a.rank() != rank) {
    throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                         shape_str(a.shape()));
  }
}

// Unary elementwise op with derivative expressed through input x and output y.
template <typename T, typename Fwd, typename Deriv>
Tensor<T> unary(const Tensor<T>& a, Fwd fwd, Deriv deriv, const char* name) {
  const auto x = a.data();
  std::vector<T> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = fwd(x[i]);
  auto ai = a.impl();
  // The output values are needed by some derivatives (tanh, sigmoid, exp);
  // keep a copy rather than a handle to the output to avoid an ownership cycle.
  auto y_saved = std::make_shared<std::vector<T>>(y);
  return make_result<T>(a.shape(), std::move(y), {a},
                        [ai, y_saved, deriv](std::span<const T> g) {
                          T* dx = grad_ptr(ai);
                          if (!dx) return;
                          const auto& xs = ai->data;
                          const auto& ys = *y_saved;
                          for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i] * deriv(xs[i], ys[i]);
                        },
                        name);
}

}  // namespace

// --- elementwise -------------------------------------------------------------

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "add");
  std::vector<T> y(a.numel());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a[i] + b[i];
  auto ai = a.impl(), bi = b.impl();
  return make_result<T>(a.shape(), std::move(y), {a, b},
                        [ai, bi](std::span<const T> g) {
                          accumulate_grad(ai, g);
                          accumulate_grad(bi, g);
                        },
                        "add");
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "sub");
  std::vector<T> y(a.numel());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a[i] - b[i];
  auto ai = a.impl(), bi = b.impl();
  return make_result<T>(a.shape(), std::move(y), {a, b},
                        [ai, bi](std::span<const T> g) {
                          accumulate_grad(ai, g);
                          if (T* db = grad_ptr(bi)) {
                            for (std::size_t i = 0; i < g.size(); ++i) db[i] -= g[i];
                          }
                        },
                        "sub");
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "mul");
  std::vector<T> y(a.numel());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a[i] * b[i];
  auto ai = a.impl(), bi = b.impl();
  return make_result<T>(a.shape(), std::move(y), {a, b},
                        [ai, bi](std::span<const T> g) {
                          if (T* da = grad_ptr(ai)) {
                            for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] * bi->data[i];
                          }
                          if (T* db = grad_ptr(bi)) {
                            for (std::size_t i = 0; i < g.size(); ++i) db[i] += g[i] * ai->data[i];
                          }
                        },
                        "mul");
}

template <typename T>
Tensor<T> add_scalar(const Tensor<T>& a, T s) {
  return unary(a, [s](T x) { return x + s; }, [](T, T) { return T(1); }, "add_scalar");
}

template <typename T>
Tensor<T> mul_scalar(const Tensor<T>& a, T s) {
  return unary(a, [s](T x) { return x * s; }, [s](T, T) { return s; }, "mul_scalar");
}

template <typename T>
Tensor<T> scale(const Tensor<T>& x, const Tensor<T>& alpha) {
  if (alpha.numel() != 1) throw DimensionError("scale: alpha must have one element, got " + shape_str(alpha.shape()));
  const T a = alpha[0];
  std::vector<T> y(x.numel());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a * x[i];
  auto xi = x.impl(), ai = alpha.impl();
  return make_result<T>(x.shape(), std::move(y), {x, alpha},
                        [xi, ai](std::span<const T> g) {
                          const T a = ai->data[0];
                          if (T* dx = grad_ptr(xi)) {
                            for (std::size_t i = 0; i < g.size(); ++i) dx[i] += a * g[i];
                          }
                          if (T* da = grad_ptr(ai)) {
                            T acc = 0;
                            for (std::size_t i = 0; i < g.size(); ++i) acc += g[i] * xi->data[i];
                            da[0] += acc;
                          }
                        },
                        "scale");
}

template <typename T>
Tensor<T> square(const Tensor<T>& a) {
  return unary(a, [](T x) { return x * x; }, [](T x, T) { return T(2) * x; }, "square");
}

template <typename T>
Tensor<T> abs(const Tensor<T>& a) {
  return unary(
      a, [](T x) { return std::abs(x); }, [](T x, T) { return x > T(0) ? T(1) : (x < T(0) ? T(-1) : T(0)); },
      "abs");
}

template <typename T>
Tensor<T> exp(const Tensor<T>& a) {
  return unary(a, [](T x) { return std::exp(x); }, [](T, T y) { return y; }, "exp");
}

template <typename T>
Tensor<T> log(const Tensor<T>& a) {
  return unary(a, [](T x) { return std::log(x); }, [](T x, T) { return T(1) / x; }, "log");
}

template <typename T>
Tensor<T> softplus(const Tensor<T>& a) {
  return unary(
      a, [](T x) { return std::max(x, T(0)) + std::log1p(std::exp(-std::abs(x))); },
      [](T x, T) { return T(1) / (T(1) + std::exp(-x)); }, "softplus");
}

template <typename T>
Tensor<T> activation(const Tensor<T>& x, Activation act) {
  switch (act.kind) {
    case ActivationKind::kRelu:
      // Written so that NaN passes through.
      return unary(x, [](T v) { return v < T(0) ? T(0) : v; }, [](T v, T) { return v > T(0) ? T(1) : T(0); },
                   "relu");
    case ActivationKind::kLeakyRelu: {
      if (!(act.slope > 0.0 && act.slope < 1.0)) throw ParameterError("leaky_relu slope must lie in (0, 1)");
      const T s = static_cast<T>(act.slope);
      return unary(x, [s](T v) { return v > T(0) ? v : s * v; }, [s](T v, T) { return v > T(0) ? T(1) : s; },
                   "leaky_relu");
    }
    case ActivationKind::kTanh:
      return unary(x, [](T v) { return std::tanh(v); }, [](T, T y) { return T(1) - y * y; }, "tanh");
    case ActivationKind::kSigmoid:
      return unary(
          x, [](T v) { return v >= T(0) ? T(1) / (T(1) + std::exp(-v)) : std::exp(v) / (T(1) + std::exp(v)); },
          [](T, T y) { return y * (T(1) - y); }, "sigmoid");
  }
  throw ParameterError("unknown activation kind");
}

// --- reductions & shape ------------------------------------------------------

template <typename T>
Tensor<T> sum(const Tensor<T>& a) {
  T acc = 0;
  for (T v : a.data()) acc += v;
  auto ai = a.impl();
  return make_result<T>(Shape{}, {acc}, {a},
                        [ai](std::span<const T> g) {
                          if (T* da = grad_ptr(ai)) {
                            for (std::size_t i = 0; i < ai->data.size(); ++i) da[i] += g[0];
                          }
                        },
                        "sum");
}

template <typename T>
Tensor<T> mean(const Tensor<T>& a) {
  T acc = 0;
  for (T v : a.data()) acc += v;
  const T inv = T(1) / static_cast<T>(a.numel());
  auto ai = a.impl();
  return make_result<T>(Shape{}, {acc * inv}, {a},
                        [ai, inv](std::span<const T> g) {
                          if (T* da = grad_ptr(ai)) {
                            const T v = g[0] * inv;
                            for (std::size_t i = 0; i < ai->data.size(); ++i) da[i] += v;
                          }
                        },
                        "mean");
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& a, Shape shape) {
  if (shape_numel(shape) != a.numel()) {
    throw DimensionError("reshape: " + shape_str(a.shape()) + " -> " + shape_str(shape));
  }
  std::vector<T> y(a.data().begin(), a.data().end());
  auto ai = a.impl();
  return make_result<T>(std::move(shape), std::move(y), {a},
                        [ai](std::span<const T> g) { accumulate_grad(ai, g); }, "reshape");
}

template <typename T>
Tensor<T> transpose2d(const Tensor<T>& a) {
  require_rank(a, 2, "transpose2d");
  const std::size_t r = a.dim(0), c = a.dim(1);
  std::vector<T> y(a.numel());
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) y[j * r + i] = a[i * c + j];
  auto ai = a.impl();
  return make_result<T>(Shape{c, r}, std::move(y), {a},
                        [ai, r, c](std::span<const T> g) {
                          if (T* da = grad_ptr(ai)) {
                            for (std::size_t i = 0; i < r; ++i)
                              for (std::size_t j = 0; j < c; ++j) da[i * c + j] += g[j * r + i];
                          }
                        },
                        "transpose2d");
}

template <typename T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts, std::size_t axis) {
  if (parts.empty()) throw DimensionError("concat: no inputs");
  const Shape& ref = parts.front().shape();
  if (axis >= ref.size()) throw DimensionError("concat: axis out of range");
  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= ref[d];
  for (std::size_t d = axis + 1; d < ref.size(); ++d) inner *= ref[d];
  std::size_t total_axis = 0;
  std::vector<std::size_t> extents;
  for (const auto& p : parts) {
    if (p.rank() != ref.size()) throw DimensionError("concat: rank mismatch");
    for (std::size_t d = 0; d < ref.size(); ++d) {
      if (d != axis && p.dim(d) != ref[d]) throw DimensionError("concat: extent mismatch off the concat axis");
    }
    extents.push_back(p.dim(axis));
    total_axis += p.dim(axis);
  }
  Shape out_shape = ref;
  out_shape[axis] = total_axis;
  std::vector<T> y(outer * total_axis * inner);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const std::size_t block = extents[k] * inner;
    const auto src = parts[k].data();
    for (std::size_t o = 0; o < outer; ++o) {
      std::copy_n(src.begin() + o * block, block, y.begin() + o * total_axis * inner + offset);
    }
    offset += block;
  }
  std::vector<ImplPtr<T>> impls;
  for (const auto& p : parts) impls.push_back(p.impl());
  return make_result<T>(std::move(out_shape), std::move(y), parts,
                        [impls, extents, outer, inner, total_axis](std::span<const T> g) {
                          std::size_t offset = 0;
                          for (std::size_t k = 0; k < impls.size(); ++k) {
                            const std::size_t block = extents[k] * inner;
                            if (T* dp = grad_ptr(impls[k])) {
                              for (std::size_t o = 0; o < outer; ++o) {
                                const T* src = g.data() + o * total_axis * inner + offset;
                                for (std::size_t i = 0; i < block; ++i) dp[o * block + i] += src[i];
                              }
                            }
                            offset += block;
                          }
                        },
                        "concat");
}

template <typename T>
Tensor<T> select(const Tensor<T>& a, std::size_t index) {
  if (a.rank() == 0 || index >= a.dim(0)) throw DimensionError("select: index out of range");
  Shape out_shape(a.shape().begin() + 1, a.shape().end());
  const std::size_t block = shape_numel(out_shape);
  std::vector<T> y(a.data().begin() + index * block, a.data().begin() + (index + 1) * block);
  auto ai = a.impl();
  return make_result<T>(std::move(out_shape), std::move(y), {a},
                        [ai, index, block](std::span<const T> g) {
                          if (T* da = grad_ptr(ai)) {
                            for (std::size_t i = 0; i < block; ++i) da[index * block + i] += g[i];
                          }
                        },
                        "select");
}

// --- linear algebra ----------------------------------------------------------

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b, bool transpose_a, bool transpose_b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const std::size_t m = transpose_a ? a.dim(1) : a.dim(0);
  const std::size_t k = transpose_a ? a.dim(0) : a.dim(1);
  const std::size_t kb = transpose_b ? b.dim(1) : b.dim(0);
  const std::size_t n = transpose_b ? b.dim(0) : b.dim(1);
  if (k != kb) {
    throw DimensionError("matmul: inner extents differ, " + shape_str(a.shape()) + " and " + shape_str(b.shape()));
  }
  const std::size_t lda = a.dim(1), ldb = b.dim(1);
  const Trans ta = transpose_a ? Trans::kYes : Trans::kNo;
  const Trans tb = transpose_b ? Trans::kYes : Trans::kNo;
  std::vector<T> y(m * n);
  gemm<T>(ta, tb, m, n, k, T(1), a.data().data(), lda, b.data().data(), ldb, T(0), y.data(), n);
  auto ai = a.impl(), bi = b.impl();
  return make_result<T>(
      Shape{m, n}, std::move(y), {a, b},
      [ai, bi, m, n, k, lda, ldb, transpose_a, transpose_b](std::span<const T> g) {
        const T* A = ai->data.data();
        const T* B = bi->data.data();
        if (T* da = grad_ptr(ai)) {
          // dA has A's stored layout.
          if (!transpose_a) {
            // dA[m x k] = dC * op(B)^T
            gemm<T>(Trans::kNo, transpose_b ? Trans::kNo : Trans::kYes, m, k, n, T(1), g.data(), n, B, ldb, T(1), da,
                    lda);
          } else {
            // dA[k x m] = op(B) * dC^T
            gemm<T>(transpose_b ? Trans::kYes : Trans::kNo, Trans::kYes, k, m, n, T(1), B, ldb, g.data(), n, T(1), da,
                    lda);
          }
        }
        if (T* db = grad_ptr(bi)) {
          if (!transpose_b) {
            // dB[k x n] = op(A)^T * dC
            gemm<T>(transpose_a ? Trans::kNo : Trans::kYes, Trans::kNo, k, n, m, T(1), A, lda, g.data(), n, T(1), db,
                    ldb);
          } else {
            // dB[n x k] = dC^T * op(A)
            gemm<T>(Trans::kYes, transpose_a ? Trans::kYes : Trans::kNo, n, k, m, T(1), g.data(), n, A, lda, T(1), db,
                    ldb);
          }
        }
      },
      "matmul");
}

template <typename T>
Tensor<T> dense(const Tensor<T>& x, const Tensor<T>& weights, const Tensor<T>& bias) {
  require_rank(weights, 2, "dense");
  if (x.rank() != 1 && x.rank() != 2) throw DimensionError("dense: input must be [n] or [rows x n]");
  const std::size_t in = weights.dim(1), out = weights.dim(0);
  const std::size_t rows = x.rank() == 1 ? 1 : x.dim(0);
  const std::size_t xn = x.rank() == 1 ? x.dim(0) : x.dim(1);
  if (xn != in) {
    throw DimensionError("dense: input extent " + std::to_string(xn) + " does not match weights " +
                         shape_str(weights.shape()));
  }
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != out)) {
    throw DimensionError("dense: bias must be [" + std::to_string(out) + "]");
  }
  std::vector<T> y(rows * out);
  gemm<T>(Trans::kNo, Trans::kYes, rows, out, in, T(1), x.data().data(), in, weights.data().data(), in, T(0),
          y.data(), out);
  if (bias.defined()) {
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t j = 0; j < out; ++j) y[r * out + j] += bias[j];
  }
  Shape shape = x.rank() == 1 ? Shape{out} : Shape{rows, out};
  auto xi = x.impl(), wi = weights.impl();
  auto bi = bias.defined() ? bias.impl() : ImplPtr<T>{};
  std::vector<Tensor<T>> inputs{x, weights};
  if (bias.defined()) inputs.push_back(bias);
  return make_result<T>(std::move(shape), std::move(y), std::move(inputs),
                        [xi, wi, bi, rows, in, out](std::span<const T> g) {
                          if (T* dx = grad_ptr(xi)) {
                            gemm<T>(Trans::kNo, Trans::kNo, rows, in, out, T(1), g.data(), out, wi->data.data(), in,
                                    T(1), dx, in);
                          }
                          if (T* dw = grad_ptr(wi)) {
                            gemm<T>(Trans::kYes, Trans::kNo, out, in, rows, T(1), g.data(), out, xi->data.data(), in,
                                    T(1), dw, in);
                          }
                          if (T* db = grad_ptr(bi)) {
                            for (std::size_t r = 0; r < rows; ++r)
                              for (std::size_t j = 0; j < out; ++j) db[j] += g[r * out + j];
                          }
                        },
                        "dense");
}

// --- convolution -------------------------------------------------------------

namespace {

struct ConvGeom {
  std::size_t c_in, h, w, c_out, f, stride, pad, ho, wo;
  std::size_t k() const { return c_in * f * f; }
};

// Rows [r0, r1) of the output, as a (C*f*f) x ((r1-r0)*wo) column matrix.
template <typename T>
void im2col_rows(const T* x, const ConvGeom& g, std::size_t r0, std::size_t r1, T* cols) {
  const std::size_t nb = (r1 - r0) * g.wo;
  for (std::size_t c = 0; c < g.c_in; ++c) {
    const T* xc = x + c * g.h * g.w;
    for (std::size_t ki = 0; ki < g.f; ++ki) {
      for (std::size_t kj = 0; kj < g.f; ++kj) {
        T* dst = cols + ((c * g.f + ki) * g.f + kj) * nb;
        for (std::size_t r = r0; r < r1; ++r) {
          const std::ptrdiff_t ir = static_cast<std::ptrdiff_t>(r * g.stride + ki) - static_cast<std::ptrdiff_t>(g.pad);
          T* row = dst + (r - r0) * g.wo;
          if (ir < 0 || ir >= static_cast<std::ptrdiff_t>(g.h)) {
            std::fill(row, row + g.wo, T(0));
            continue;
          }
          const T* src = xc + static_cast<std::size_t>(ir) * g.w;
          for (std::size_t q = 0; q < g.wo; ++q) {
            const std::ptrdiff_t ic =
                static_cast<std::ptrdiff_t>(q * g.stride + kj) - static_cast<std::ptrdiff_t>(g.pad);
            row[q] = (ic < 0 || ic >= static_cast<std::ptrdiff_t>(g.w)) ? T(0) : src[ic];
          }
        }
      }
    }
  }
}

template <typename T>
void col2im_rows(const T* cols, const ConvGeom& g, std::size_t r0, std::size_t r1, T* dx) {
  const std::size_t nb = (r1 - r0) * g.wo;
  for (std::size_t c = 0; c < g.c_in; ++c) {
    T* dxc = dx + c * g.h * g.w;
    for (std::size_t ki = 0; ki < g.f; ++ki) {
      for (std::size_t kj = 0; kj < g.f; ++kj) {
        const T* src = cols + ((c * g.f + ki) * g.f + kj) * nb;
        for (std::size_t r = r0; r < r1; ++r) {
          const std::ptrdiff_t ir = static_cast<std::ptrdiff_t>(r * g.stride + ki) - static_cast<std::ptrdiff_t>(g.pad);
          if (ir < 0 || ir >= static_cast<std::ptrdiff_t>(g.h)) continue;
          T* dst = dxc + static_cast<std::size_t>(ir) * g.w;
          const T* row = src + (r - r0) * g.wo;
          for (std::size_t q = 0; q < g.wo; ++q) {
            const std::ptrdiff_t ic =
                static_cast<std::ptrdiff_t>(q * g.stride + kj) - static_cast<std::ptrdiff_t>(g.pad);
            if (ic >= 0 && ic < static_cast<std::ptrdiff_t>(g.w)) dst[ic] += row[q];
          }
        }
      }
    }
  }
}

// Output rows per im2col block, bounding the column buffer to ~1M elements.
std::size_t rows_per_block(const ConvGeom& g) {
  const std::size_t per_row = std::max<std::size_t>(1, g.k() * g.wo);
  return std::clamp<std::size_t>((1u << 20) / per_row, 1, g.ho);
}

}  // namespace

template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>& bias, std::size_t stride,
                 std::size_t padding) {
  require_rank(input, 3, "conv2d");
  require_rank(weights, 4, "conv2d");
  if (weights.dim(2) != weights.dim(3)) throw DimensionError("conv2d: kernels must be square");
  if (weights.dim(1) != input.dim(0)) {
    throw DimensionError("conv2d: input has " + std::to_string(input.dim(0)) + " channels, weights expect " +
                         std::to_string(weights.dim(1)));
  }
  if (stride == 0) throw ParameterError("conv2d: stride must be positive");
  ConvGeom g{input.dim(0), input.dim(1), input.dim(2), weights.dim(0), weights.dim(2), stride, padding, 0, 0};
  if (g.h + 2 * padding < g.f || g.w + 2 * padding < g.f) {
    throw DimensionError("conv2d: kernel " + std::to_string(g.f) + " larger than padded input " +
                         shape_str(input.shape()));
  }
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != g.c_out)) {
    throw DimensionError("conv2d: bias must be [" + std::to_string(g.c_out) + "]");
  }
  g.ho = (g.h + 2 * padding - g.f) / stride + 1;
  g.wo = (g.w + 2 * padding - g.f) / stride + 1;

  const std::size_t hw_out = g.ho * g.wo;
  const std::size_t K = g.k();
  std::vector<T> y(g.c_out * hw_out);
  const std::size_t block = rows_per_block(g);
  std::vector<T> cols(K * block * g.wo);
  const T* x = input.data().data();
  const T* w = weights.data().data();
  for (std::size_t r0 = 0; r0 < g.ho; r0 += block) {
    const std::size_t r1 = std::min(g.ho, r0 + block);
    const std::size_t nb = (r1 - r0) * g.wo;
    if (g.f == 1 && g.stride == 1 && g.pad == 0) {
      gemm<T>(Trans::kNo, Trans::kNo, g.c_out, nb, K, T(1), w, K, x + r0 * g.wo, g.h * g.w, T(0),
              y.data() + r0 * g.wo, hw_out);
    } else {
      im2col_rows(x, g, r0, r1, cols.data());
      gemm<T>(Trans::kNo, Trans::kNo, g.c_out, nb, K, T(1), w, K, cols.data(), nb, T(0), y.data() + r0 * g.wo,
              hw_out);
    }
  }
  if (bias.defined()) {
    for (std::size_t o = 0; o < g.c_out; ++o) {
      const T b = bias[o];
      T* yo = y.data() + o * hw_out;
      for (std::size_t i = 0; i < hw_out; ++i) yo[i] += b;
    }
  }

  auto xi = input.impl(), wi = weights.impl();
  auto bi = bias.defined() ? bias.impl() : ImplPtr<T>{};
  std::vector<Tensor<T>> inputs{input, weights};
  if (bias.defined()) inputs.push_back(bias);
  return make_result<T>(
      Shape{g.c_out, g.ho, g.wo}, std::move(y), std::move(inputs),
      [xi, wi, bi, g](std::span<const T> gout) {
        const std::size_t hw_out = g.ho * g.wo;
        const std::size_t K = g.k();
        if (T* db = grad_ptr(bi)) {
          for (std::size_t o = 0; o < g.c_out; ++o) {
            T acc = 0;
            const T* go = gout.data() + o * hw_out;
            for (std::size_t i = 0; i < hw_out; ++i) acc += go[i];
            db[o] += acc;
          }
        }
        T* dw = grad_ptr(wi);
        T* dx = grad_ptr(xi);
        if (!dw && !dx) return;
        const bool pointwise = g.f == 1 && g.stride == 1 && g.pad == 0;
        const std::size_t block = rows_per_block(g);
        std::vector<T> cols(pointwise ? 0 : K * block * g.wo);
        std::vector<T> dcols(pointwise ? 0 : K * block * g.wo);
        const T* x = xi->data.data();
        const T* w = wi->data.data();
        for (std::size_t r0 = 0; r0 < g.ho; r0 += block) {
          const std::size_t r1 = std::min(g.ho, r0 + block);
          const std::size_t nb = (r1 - r0) * g.wo;
          const T* gblk = gout.data() + r0 * g.wo;
          if (pointwise) {
            if (dw) gemm<T>(Trans::kNo, Trans::kYes, g.c_out, K, nb, T(1), gblk, hw_out, x + r0 * g.wo, g.h * g.w,
                            T(1), dw, K);
            if (dx) gemm<T>(Trans::kYes, Trans::kNo, K, nb, g.c_out, T(1), w, K, gblk, hw_out, T(1), dx + r0 * g.wo,
                            g.h * g.w);
            continue;
          }
          if (dw) {
            im2col_rows(x, g, r0, r1, cols.data());
            gemm<T>(Trans::kNo, Trans::kYes, g.c_out, K, nb, T(1), gblk, hw_out, cols.data(), nb, T(1), dw, K);
          }
          if (dx) {
            gemm<T>(Trans::kYes, Trans::kNo, K, nb, g.c_out, T(1), w, K, gblk, hw_out, T(0), dcols.data(), nb);
            col2im_rows(dcols.data(), g, r0, r1, dx);
          }
        }
      },
      "conv2d");
}

template <typename T>
Tensor<T> reflect_pad(const Tensor<T>& input, std::size_t pad) {
  require_rank(input, 3, "reflect_pad");
  const std::size_t c = input.dim(0), h = input.dim(1), w = input.dim(2);
  if (pad == 0) return reshape(input, input.shape());
  if (pad >= h || pad >= w) throw DimensionError("reflect_pad: pad must be smaller than the spatial extent");
  const std::size_t ho = h + 2 * pad, wo = w + 2 * pad;
  auto reflect = [pad](std::size_t i, std::size_t n) -> std::size_t {
    const std::ptrdiff_t v = static_cast<std::ptrdiff_t>(i) - static_cast<std::ptrdiff_t>(pad);
    if (v < 0) return static_cast<std::size_t>(-v);
    if (v >= static_cast<std::ptrdiff_t>(n)) return 2 * (n - 1) - static_cast<std::size_t>(v);
    return static_cast<std::size_t>(v);
  };
  std::vector<std::size_t> row_map(ho), col_map(wo);
  for (std::size_t i = 0; i < ho; ++i) row_map[i] = reflect(i, h);
  for (std::size_t j = 0; j < wo; ++j) col_map[j] = reflect(j, w);
  std::vector<T> y(c * ho * wo);
  const T* x = input.data().data();
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t i = 0; i < ho; ++i)
      for (std::size_t j = 0; j < wo; ++j) y[(ch * ho + i) * wo + j] = x[(ch * h + row_map[i]) * w + col_map[j]];
  auto xi = input.impl();
  return make_result<T>(Shape{c, ho, wo}, std::move(y), {input},
                        [xi, row_map, col_map, c, h, w, ho, wo](std::span<const T> g) {
                          if (T* dx = grad_ptr(xi)) {
                            for (std::size_t ch = 0; ch < c; ++ch)
                              for (std::size_t i = 0; i < ho; ++i)
                                for (std::size_t j = 0; j < wo; ++j)
                                  dx[(ch * h + row_map[i]) * w + col_map[j]] += g[(ch * ho + i) * wo + j];
                          }
                        },
                        "reflect_pad");
}

template <typename T>
Tensor<T> instance_norm(const Tensor<T>& input, const Tensor<T>& gamma, const Tensor<T>& beta, T eps) {
  require_rank(input, 3, "instance_norm");
  const std::size_t c = input.dim(0), hw = input.dim(1) * input.dim(2);
  if (gamma.numel() != c || beta.numel() != c) throw DimensionError("instance_norm: gamma/beta must be [C]");
  std::vector<T> y(c * hw);
  auto xhat = std::make_shared<std::vector<T>>(c * hw);
  auto inv_std = std::make_shared<std::vector<T>>(c);
  const T* x = input.data().data();
  for (std::size_t ch = 0; ch < c; ++ch) {
    const T* xc = x + ch * hw;
    T mu = 0;
    for (std::size_t i = 0; i < hw; ++i) mu += xc[i];
    mu /= static_cast<T>(hw);
    T var = 0;
    for (std::size_t i = 0; i < hw; ++i) var += (xc[i] - mu) * (xc[i] - mu);
    var /= static_cast<T>(hw);
    const T is = T(1) / std::sqrt(var + eps);
    (*inv_std)[ch] = is;
    for (std::size_t i = 0; i < hw; ++i) {
      const T n = (xc[i] - mu) * is;
      (*xhat)[ch * hw + i] = n;
      y[ch * hw + i] = gamma[ch] * n + beta[ch];
    }
  }
  auto xi = input.impl(), gi = gamma.impl(), bi = beta.impl();
  return make_result<T>(input.shape(), std::move(y), {input, gamma, beta},
                        [xi, gi, bi, xhat, inv_std, c, hw](std::span<const T> g) {
                          T* dx = grad_ptr(xi);
                          T* dg = grad_ptr(gi);
                          T* db = grad_ptr(bi);
                          const T inv_n = T(1) / static_cast<T>(hw);
                          for (std::size_t ch = 0; ch < c; ++ch) {
                            const T* gc = g.data() + ch * hw;
                            const T* nc = xhat->data() + ch * hw;
                            T sum_g = 0, sum_gn = 0;
                            for (std::size_t i = 0; i < hw; ++i) {
                              sum_g += gc[i];
                              sum_gn += gc[i] * nc[i];
                            }
                            if (dg) dg[ch] += sum_gn;
                            if (db) db[ch] += sum_g;
                            if (dx) {
                              const T k = gi->data[ch] * (*inv_std)[ch];
                              const T mg = sum_g * inv_n, mgn = sum_gn * inv_n;
                              T* dxc = dx + ch * hw;
                              for (std::size_t i = 0; i < hw; ++i) dxc[i] += k * (gc[i] - mg - nc[i] * mgn);
                            }
                          }
                        },
                        "instance_norm");
}

template <typename T>
Tensor<T> upsample_nearest(const Tensor<T>& input, std::size_t factor) {
  require_rank(input, 3, "upsample_nearest");
  if (factor == 0) throw ParameterError("upsample_nearest: factor must be positive");
  const std::size_t c = input.dim(0), h = input.dim(1), w = input.dim(2);
  const std::size_t ho = h * factor, wo = w * factor;
  std::vector<T> y(c * ho * wo);
  const T* x = input.data().data();
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t i = 0; i < ho; ++i)
      for (std::size_t j = 0; j < wo; ++j) y[(ch * ho + i) * wo + j] = x[(ch * h + i / factor) * w + j / factor];
  auto xi = input.impl();
  return make_result<T>(Shape{c, ho, wo}, std::move(y), {input},
                        [xi, c, h, w, factor](std::span<const T> g) {
                          if (T* dx = grad_ptr(xi)) {
                            const std::size_t ho = h * factor, wo = w * factor;
                            for (std::size_t ch = 0; ch < c; ++ch)
                              for (std::size_t i = 0; i < ho; ++i)
                                for (std::size_t j = 0; j < wo; ++j)
                                  dx[(ch * h + i / factor) * w + j / factor] += g[(ch * ho + i) * wo + j];
                          }
                        },
                        "upsample_nearest");
}

// --- normalization / losses ----------------------------------------------------

template <typename T>
Tensor<T> softmax(const Tensor<T>& logits, std::size_t axis) {
  if (axis >= logits.rank()) throw DimensionError("softmax: axis out of range");
  const Shape& s = logits.shape();
  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= s[d];
  for (std::size_t d = axis + 1; d < s.size(); ++d) inner *= s[d];
  const std::size_t n = s[axis];
  std::vector<T> y(logits.numel());
  const T* x = logits.data().data();
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t in = 0; in < inner; ++in) {
      const std::size_t base = o * n * inner + in;
      T mx = -std::numeric_limits<T>::infinity();
      for (std::size_t k = 0; k < n; ++k) mx = std::max(mx, x[base + k * inner]);
      T total = 0;
      for (std::size_t k = 0; k < n; ++k) {
        const T e = std::exp(x[base + k * inner] - mx);
        y[base + k * inner] = e;
        total += e;
      }
      const T inv = T(1) / total;
      for (std::size_t k = 0; k < n; ++k) y[base + k * inner] *= inv;
    }
  }
  auto ys = std::make_shared<std::vector<T>>(y);
  auto xi = logits.impl();
  return make_result<T>(s, std::move(y), {logits},
                        [xi, ys, outer, inner, n](std::span<const T> g) {
                          T* dx = grad_ptr(xi);
                          if (!dx) return;
                          const auto& yv = *ys;
                          for (std::size_t o = 0; o < outer; ++o) {
                            for (std::size_t in = 0; in < inner; ++in) {
                              const std::size_t base = o * n * inner + in;
                              T dot = 0;
                              for (std::size_t k = 0; k < n; ++k) dot += g[base + k * inner] * yv[base + k * inner];
                              for (std::size_t k = 0; k < n; ++k) {
                                const std::size_t idx = base + k * inner;
                                dx[idx] += yv[idx] * (g[idx] - dot);
                              }
                            }
                          }
                        },
                        "softmax");
}

template <typename T>
Tensor<T> cross_entropy_rows(const Tensor<T>& logits, const std::vector<std::size_t>& targets) {
  require_rank(logits, 2, "cross_entropy_rows");
  const std::size_t rows = logits.dim(0), m = logits.dim(1);
  if (targets.size() != rows) throw DimensionError("cross_entropy_rows: one target per row required");
  auto probs = std::make_shared<std::vector<T>>(rows * m);
  const T* x = logits.data().data();
  T total = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    if (targets[r] >= m) throw DimensionError("cross_entropy_rows: target out of range");
    const T* xr = x + r * m;
    const T mx = *std::max_element(xr, xr + m);
    T z = 0;
    for (std::size_t j = 0; j < m; ++j) z += std::exp(xr[j] - mx);
    const T lse = mx + std::log(z);
    total += lse - xr[targets[r]];
    for (std::size_t j = 0; j < m; ++j) (*probs)[r * m + j] = std::exp(xr[j] - lse);
  }
  const T inv_rows = T(1) / static_cast<T>(rows);
  auto xi = logits.impl();
  return make_result<T>(Shape{}, {total * inv_rows}, {logits},
                        [xi, probs, targets, rows, m, inv_rows](std::span<const T> g) {
                          T* dx = grad_ptr(xi);
                          if (!dx) return;
                          const T s = g[0] * inv_rows;
                          for (std::size_t r = 0; r < rows; ++r) {
                            for (std::size_t j = 0; j < m; ++j) dx[r * m + j] += s * (*probs)[r * m + j];
                            dx[r * m + targets[r]] -= s;
                          }
                        },
                        "cross_entropy_rows");
}

template <typename T>
Tensor<T> l2_normalize_rows(const Tensor<T>& x, T eps) {
  require_rank(x, 2, "l2_normalize_rows");
  const std::size_t rows = x.dim(0), d = x.dim(1);
  std::vector<T> y(rows * d);
  auto norms = std::make_shared<std::vector<T>>(rows);
  const T* xs = x.data().data();
  for (std::size_t r = 0; r < rows; ++r) {
    T ss = 0;
    for (std::size_t j = 0; j < d; ++j) ss += xs[r * d + j] * xs[r * d + j];
    const T nrm = std::sqrt(ss);
    (*norms)[r] = nrm;
    const T inv = T(1) / (nrm + eps);
    for (std::size_t j = 0; j < d; ++j) y[r * d + j] = xs[r * d + j] * inv;
  }
  auto xi = x.impl();
  return make_result<T>(x.shape(), std::move(y), {x},
                        [xi, norms, rows, d, eps](std::span<const T> g) {
                          T* dx = grad_ptr(xi);
                          if (!dx) return;
                          const T* xs = xi->data.data();
                          for (std::size_t r = 0; r < rows; ++r) {
                            const T nrm = (*norms)[r];
                            const T s = nrm + eps;
                            T dot = 0;
                            for (std::size_t j = 0; j < d; ++j) dot += g[r * d + j] * xs[r * d + j];
                            const T corr = nrm > T(0) ? dot / (s * s * nrm) : T(0);
                            for (std::size_t j = 0; j < d; ++j) dx[r * d + j] += g[r * d + j] / s - corr * xs[r * d + j];
                          }
                        },
                        "l2_normalize_rows");
}

template <typename T>
Tensor<T> gather_positions(const Tensor<T>& tap, const std::vector<std::size_t>& flat_indices) {
  require_rank(tap, 3, "gather_positions");
  const std::size_t c = tap.dim(0), hw = tap.dim(1) * tap.dim(2), n = flat_indices.size();
  if (n == 0) throw DimensionError("gather_positions: no indices");
  std::vector<T> y(n * c);
  const T* x = tap.data().data();
  for (std::size_t k = 0; k < n; ++k) {
    if (flat_indices[k] >= hw) throw SamplingError("gather_positions: location outside the feature map");
    for (std::size_t ch = 0; ch < c; ++ch) y[k * c + ch] = x[ch * hw + flat_indices[k]];
  }
  auto xi = tap.impl();
  return make_result<T>(Shape{n, c}, std::move(y), {tap},
                        [xi, flat_indices, c, hw](std::span<const T> g) {
                          if (T* dx = grad_ptr(xi)) {
                            for (std::size_t k = 0; k < flat_indices.size(); ++k)
                              for (std::size_t ch = 0; ch < c; ++ch) dx[ch * hw + flat_indices[k]] += g[k * c + ch];
                          }
                        },
                        "gather_positions");
}

template <typename T>
Tensor<T> crop_patches(const Tensor<T>& image, const std::vector<std::pair<std::size_t, std::size_t>>& origins,
                       std::size_t size) {
  require_rank(image, 3, "crop_patches");
  const std::size_t c = image.dim(0), h = image.dim(1), w = image.dim(2), n = origins.size();
  if (n == 0 || size == 0) throw DimensionError("crop_patches: empty request");
  for (const auto& [r, q] : origins) {
    if (r + size > h || q + size > w) throw DimensionError("crop_patches: patch extends past the image");
  }
  std::vector<T> y(n * c * size * size);
  const T* x = image.data().data();
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t i = 0; i < size; ++i)
        std::copy_n(x + (ch * h + origins[k].first + i) * w + origins[k].second, size,
                    y.begin() + ((k * c + ch) * size + i) * size);
  auto xi = image.impl();
  return make_result<T>(Shape{n, c, size, size}, std::move(y), {image},
                        [xi, origins, c, h, w, size](std::span<const T> g) {
                          T* dx = grad_ptr(xi);
                          if (!dx) return;
                          for (std::size_t k = 0; k < origins.size(); ++k)
                            for (std::size_t ch = 0; ch < c; ++ch)
                              for (std::size_t i = 0; i < size; ++i) {
                                T* dst = dx + (ch * h + origins[k].first + i) * w + origins[k].second;
                                const T* src = g.data() + ((k * c + ch) * size + i) * size;
                                for (std::size_t j = 0; j < size; ++j) dst[j] += src[j];
                              }
                        },
                        "crop_patches");
}

template <typename T>
ComplexTensor<T> fft2d(const Tensor<T>& input) {
  if (input.rank() < 2) throw DimensionError("fft2d: need at least two axes");
  const std::size_t n = input.dim(input.rank() - 1);
  if (input.dim(input.rank() - 2) != n) throw DimensionError("fft2d: last two axes must be square");
  if (!fft::is_power_of_two(n)) {
    throw UnsupportedSizeError("fft2d: size " + std::to_string(n) + " is not a power of two");
  }
  const std::size_t plane = n * n, planes = input.numel() / plane;
  std::vector<T> stacked(2 * input.numel());
  std::vector<std::complex<T>> buf(plane);
  const T* x = input.data().data();
  for (std::size_t p = 0; p < planes; ++p) {
    for (std::size_t i = 0; i < plane; ++i) buf[i] = {x[p * plane + i], T(0)};
    fft::transform2d(std::span<std::complex<T>>(buf), n, false);
    for (std::size_t i = 0; i < plane; ++i) {
      stacked[p * plane + i] = buf[i].real();
      stacked[input.numel() + p * plane + i] = buf[i].imag();
    }
  }
  Shape shape{2};
  shape.insert(shape.end(), input.shape().begin(), input.shape().end());
  auto xi = input.impl();
  const std::size_t total = input.numel();
  // Linear map: the adjoint of the forward DFT is the unscaled conjugate
  // transform, and the input is real, so dx = Re(conj-DFT(g_re + i g_im)).
  Tensor<T> both = make_result<T>(std::move(shape), std::move(stacked), {input},
                                  [xi, n, plane, planes, total](std::span<const T> g) {
                                    T* dx = grad_ptr(xi);
                                    if (!dx) return;
                                    std::vector<std::complex<T>> b(plane);
                                    for (std::size_t p = 0; p < planes; ++p) {
                                      for (std::size_t i = 0; i < plane; ++i)
                                        b[i] = {g[p * plane + i], g[total + p * plane + i]};
                                      fft::transform2d(std::span<std::complex<T>>(b), n, true);
                                      for (std::size_t i = 0; i < plane; ++i) dx[p * plane + i] += b[i].real();
                                    }
                                  },
                                  "fft2d");
  return {select(both, 0), select(both, 1)};
}

namespace testing {

template <typename T>
Tensor<T> negate_grad(const Tensor<T>& x) {
  std::vector<T> y(x.data().begin(), x.data().end());
  auto xi = x.impl();
  return make_result<T>(x.shape(), std::move(y), {x},
                        [xi](std::span<const T> g) {
                          if (T* dx = grad_ptr(xi)) {
                            for (std::size_t i = 0; i < g.size(); ++i) dx[i] -= g[i];
                          }
                        },
                        "negate_grad");
}

}  // namespace testing

#define ADANET_INSTANTIATE_OPS(T)                                                                              \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                                  \
  template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                                                  \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                                                  \
  template Tensor<T> add_scalar(const Tensor<T>&, T);                                                          \
  template Tensor<T> mul_scalar(const Tensor<T>&, T);                                                          \
  template Tensor<T> scale(const Tensor<T>&, const Tensor<T>&);                                                \
  template Tensor<T> square(const Tensor<T>&);                                                                 \
  template Tensor<T> abs(const Tensor<T>&);                                                                    \
  template Tensor<T> exp(const Tensor<T>&);                                                                    \
  template Tensor<T> log(const Tensor<T>&);                                                                    \
  template Tensor<T> softplus(const Tensor<T>&);                                                               \
  template Tensor<T> activation(const Tensor<T>&, Activation);                                                 \
  template Tensor<T> sum(const Tensor<T>&);                                                                    \
  template Tensor<T> mean(const Tensor<T>&);                                                                   \
  template Tensor<T> reshape(const Tensor<T>&, Shape);                                                         \
  template Tensor<T> transpose2d(const Tensor<T>&);                                                            \
  template Tensor<T> concat(const std::vector<Tensor<T>>&, std::size_t);                                       \
  template Tensor<T> select(const Tensor<T>&, std::size_t);                                                    \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&, bool, bool);                                   \
  template Tensor<T> dense(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);                              \
  template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, std::size_t, std::size_t);   \
  template Tensor<T> reflect_pad(const Tensor<T>&, std::size_t);                                               \
  template Tensor<T> instance_norm(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, T);                   \
  template Tensor<T> upsample_nearest(const Tensor<T>&, std::size_t);                                          \
  template Tensor<T> softmax(const Tensor<T>&, std::size_t);                                                   \
  template Tensor<T> cross_entropy_rows(const Tensor<T>&, const std::vector<std::size_t>&);                    \
  template Tensor<T> l2_normalize_rows(const Tensor<T>&, T);                                                   \
  template Tensor<T> gather_positions(const Tensor<T>&, const std::vector<std::size_t>&);                      \
  template Tensor<T> crop_patches(const Tensor<T>&, const std::vector<std::pair<std::size_t, std::size_t>>&,   \
                                  std::size_t);                                                                \
  template ComplexTensor<T> fft2d(const Tensor<T>&);                                                           \
  template Tensor<T> testing::negate_grad(const Tensor<T>&);

ADANET_INSTANTIATE_OPS(float)
ADANET_INSTANTIATE_OPS(double)

}  // namespace adanet::ops
