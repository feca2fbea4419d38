#include <array>

#include "adanet/kernels/gemm.hpp"

namespace adanet::kernels::detail {

namespace {

constexpr std::size_t kMr = 4;
constexpr std::size_t kNr = 4;

template <typename T>
void micro_scalar(std::size_t kc, const T* ap, const T* bp, T alpha, T beta, T* c, std::size_t ldc,
                  std::size_t m_valid, std::size_t n_valid) {
  std::array<T, kMr * kNr> acc{};
  for (std::size_t p = 0; p < kc; ++p) {
    const T* a = ap + p * kMr;
    const T* b = bp + p * kNr;
    for (std::size_t i = 0; i < kMr; ++i) {
      for (std::size_t j = 0; j < kNr; ++j) acc[i * kNr + j] += a[i] * b[j];
    }
  }
  for (std::size_t i = 0; i < m_valid; ++i) {
    for (std::size_t j = 0; j < n_valid; ++j) {
      T& dst = c[i * ldc + j];
      dst = beta == T(0) ? alpha * acc[i * kNr + j] : alpha * acc[i * kNr + j] + beta * dst;
    }
  }
}

}  // namespace

KernelDesc<float> scalar_kernel_f32() { return {&micro_scalar<float>, kMr, kNr}; }
KernelDesc<double> scalar_kernel_f64() { return {&micro_scalar<double>, kMr, kNr}; }

}  // namespace adanet::kernels::detail
