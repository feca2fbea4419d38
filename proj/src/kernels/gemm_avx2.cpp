// AVX2 + FMA micro-kernels. This TU alone is built with -mavx2 -mfma; nothing
// here may be called unless detected_isa() reported AVX2.
#include "adanet/kernels/gemm.hpp"

#if defined(ADANET_HAVE_AVX2_TU) && defined(__AVX2__) && defined(__FMA__)
#include <immintrin.h>

#include <cmath>

namespace adanet::kernels::detail {

namespace {

// 6 x 16 floats: twelve ymm accumulators, two B vectors, one broadcast.
constexpr std::size_t kMrF = 6;
constexpr std::size_t kNrF = 16;

void micro_avx2_f32(std::size_t kc, const float* ap, const float* bp, float alpha, float beta, float* c,
                    std::size_t ldc, std::size_t m_valid, std::size_t n_valid) {
  __m256 c00 = _mm256_setzero_ps(), c01 = _mm256_setzero_ps();
  __m256 c10 = _mm256_setzero_ps(), c11 = _mm256_setzero_ps();
  __m256 c20 = _mm256_setzero_ps(), c21 = _mm256_setzero_ps();
  __m256 c30 = _mm256_setzero_ps(), c31 = _mm256_setzero_ps();
  __m256 c40 = _mm256_setzero_ps(), c41 = _mm256_setzero_ps();
  __m256 c50 = _mm256_setzero_ps(), c51 = _mm256_setzero_ps();
  for (std::size_t p = 0; p < kc; ++p) {
    const __m256 b0 = _mm256_loadu_ps(bp);
    const __m256 b1 = _mm256_loadu_ps(bp + 8);
    __m256 a;
    a = _mm256_broadcast_ss(ap + 0);
    c00 = _mm256_fmadd_ps(a, b0, c00);
    c01 = _mm256_fmadd_ps(a, b1, c01);
    a = _mm256_broadcast_ss(ap + 1);
    c10 = _mm256_fmadd_ps(a, b0, c10);
    c11 = _mm256_fmadd_ps(a, b1, c11);
    a = _mm256_broadcast_ss(ap + 2);
    c20 = _mm256_fmadd_ps(a, b0, c20);
    c21 = _mm256_fmadd_ps(a, b1, c21);
    a = _mm256_broadcast_ss(ap + 3);
    c30 = _mm256_fmadd_ps(a, b0, c30);
    c31 = _mm256_fmadd_ps(a, b1, c31);
    a = _mm256_broadcast_ss(ap + 4);
    c40 = _mm256_fmadd_ps(a, b0, c40);
    c41 = _mm256_fmadd_ps(a, b1, c41);
    a = _mm256_broadcast_ss(ap + 5);
    c50 = _mm256_fmadd_ps(a, b0, c50);
    c51 = _mm256_fmadd_ps(a, b1, c51);
    ap += kMrF;
    bp += kNrF;
  }
  alignas(32) float acc[kMrF * kNrF];
  _mm256_store_ps(acc + 0, c00);
  _mm256_store_ps(acc + 8, c01);
  _mm256_store_ps(acc + 16, c10);
  _mm256_store_ps(acc + 24, c11);
  _mm256_store_ps(acc + 32, c20);
  _mm256_store_ps(acc + 40, c21);
  _mm256_store_ps(acc + 48, c30);
  _mm256_store_ps(acc + 56, c31);
  _mm256_store_ps(acc + 64, c40);
  _mm256_store_ps(acc + 72, c41);
  _mm256_store_ps(acc + 80, c50);
  _mm256_store_ps(acc + 88, c51);

  const __m256 va = _mm256_set1_ps(alpha);
  if (m_valid == kMrF && n_valid == kNrF) {
    for (std::size_t i = 0; i < kMrF; ++i) {
      float* row = c + i * ldc;
      __m256 r0 = _mm256_mul_ps(va, _mm256_load_ps(acc + i * kNrF));
      __m256 r1 = _mm256_mul_ps(va, _mm256_load_ps(acc + i * kNrF + 8));
      if (beta != 0.0f) {
        const __m256 vb = _mm256_set1_ps(beta);
        r0 = _mm256_fmadd_ps(vb, _mm256_loadu_ps(row), r0);
        r1 = _mm256_fmadd_ps(vb, _mm256_loadu_ps(row + 8), r1);
      }
      _mm256_storeu_ps(row, r0);
      _mm256_storeu_ps(row + 8, r1);
    }
    return;
  }
  for (std::size_t i = 0; i < m_valid; ++i) {
    for (std::size_t j = 0; j < n_valid; ++j) {
      float& dst = c[i * ldc + j];
      const float v = alpha * acc[i * kNrF + j];
      dst = beta == 0.0f ? v : std::fma(beta, dst, v);
    }
  }
}

// 6 x 8 doubles: same register budget as the float kernel.
constexpr std::size_t kMrD = 6;
constexpr std::size_t kNrD = 8;

void micro_avx2_f64(std::size_t kc, const double* ap, const double* bp, double alpha, double beta, double* c,
                    std::size_t ldc, std::size_t m_valid, std::size_t n_valid) {
  __m256d acc_v[kMrD][2];
  for (auto& row : acc_v) row[0] = row[1] = _mm256_setzero_pd();
  for (std::size_t p = 0; p < kc; ++p) {
    const __m256d b0 = _mm256_loadu_pd(bp);
    const __m256d b1 = _mm256_loadu_pd(bp + 4);
    for (std::size_t i = 0; i < kMrD; ++i) {
      const __m256d a = _mm256_broadcast_sd(ap + i);
      acc_v[i][0] = _mm256_fmadd_pd(a, b0, acc_v[i][0]);
      acc_v[i][1] = _mm256_fmadd_pd(a, b1, acc_v[i][1]);
    }
    ap += kMrD;
    bp += kNrD;
  }
  alignas(32) double acc[kMrD * kNrD];
  for (std::size_t i = 0; i < kMrD; ++i) {
    _mm256_store_pd(acc + i * kNrD, acc_v[i][0]);
    _mm256_store_pd(acc + i * kNrD + 4, acc_v[i][1]);
  }
  for (std::size_t i = 0; i < m_valid; ++i) {
    for (std::size_t j = 0; j < n_valid; ++j) {
      double& dst = c[i * ldc + j];
      const double v = alpha * acc[i * kNrD + j];
      dst = beta == 0.0 ? v : std::fma(beta, dst, v);
    }
  }
}

}  // namespace

KernelDesc<float> avx2_kernel_f32() { return {&micro_avx2_f32, kMrF, kNrF}; }
KernelDesc<double> avx2_kernel_f64() { return {&micro_avx2_f64, kMrD, kNrD}; }
bool avx2_compiled() { return true; }

}  // namespace adanet::kernels::detail

#else

namespace adanet::kernels::detail {

KernelDesc<float> avx2_kernel_f32() { return scalar_kernel_f32(); }
KernelDesc<double> avx2_kernel_f64() { return scalar_kernel_f64(); }
bool avx2_compiled() { return false; }

}  // namespace adanet::kernels::detail

#endif
