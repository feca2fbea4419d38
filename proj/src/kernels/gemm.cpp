#include "adanet/kernels/gemm.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <string>
#include <vector>

#include "adanet/errors.hpp"

namespace adanet::kernels {

namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Isa initial_isa() {
  Isa isa = detected_isa();
  if (const char* env = std::getenv("ADANET_ISA")) {
    const std::string v(env);
    if (v == "scalar") isa = Isa::kScalar;
  }
  return isa;
}

std::atomic<Isa>& active_slot() {
  static std::atomic<Isa> slot{initial_isa()};
  return slot;
}

// Cache blocking. KC x NR panels of B stay in L1, MC x KC of A in L2.
constexpr std::size_t kKc = 256;
constexpr std::size_t kMc = 96;
constexpr std::size_t kNc = 2048;

template <typename T>
detail::KernelDesc<T> kernel_for(Isa isa) {
  if constexpr (std::is_same_v<T, float>) {
    return isa == Isa::kAvx2 ? detail::avx2_kernel_f32() : detail::scalar_kernel_f32();
  } else {
    return isa == Isa::kAvx2 ? detail::avx2_kernel_f64() : detail::scalar_kernel_f64();
  }
}

// op(A)[i, p] for the logical m x k operand.
template <typename T>
inline T at_a(const T* a, std::size_t lda, Trans ta, std::size_t i, std::size_t p) {
  return ta == Trans::kNo ? a[i * lda + p] : a[p * lda + i];
}

template <typename T>
inline T at_b(const T* b, std::size_t ldb, Trans tb, std::size_t p, std::size_t j) {
  return tb == Trans::kNo ? b[p * ldb + j] : b[j * ldb + p];
}

// Pack rows [i0, i0+mc) x cols [p0, p0+kc) of op(A) into mr-row panels, each
// laid out p-major (mr values per p), zero-padding the last panel.
template <typename T>
void pack_a(const T* a, std::size_t lda, Trans ta, std::size_t i0, std::size_t mc, std::size_t p0,
            std::size_t kc, std::size_t mr, T* dst) {
  for (std::size_t ir = 0; ir < mc; ir += mr) {
    const std::size_t rows = std::min(mr, mc - ir);
    for (std::size_t p = 0; p < kc; ++p) {
      std::size_t i = 0;
      for (; i < rows; ++i) dst[i] = at_a(a, lda, ta, i0 + ir + i, p0 + p);
      for (; i < mr; ++i) dst[i] = T(0);
      dst += mr;
    }
  }
}

template <typename T>
void pack_b(const T* b, std::size_t ldb, Trans tb, std::size_t p0, std::size_t kc, std::size_t j0,
            std::size_t nc, std::size_t nr, T* dst) {
  for (std::size_t jr = 0; jr < nc; jr += nr) {
    const std::size_t cols = std::min(nr, nc - jr);
    for (std::size_t p = 0; p < kc; ++p) {
      std::size_t j = 0;
      if (tb == Trans::kNo) {
        const T* src = b + (p0 + p) * ldb + j0 + jr;
        for (; j < cols; ++j) dst[j] = src[j];
      } else {
        for (; j < cols; ++j) dst[j] = b[(j0 + jr + j) * ldb + p0 + p];
      }
      for (; j < nr; ++j) dst[j] = T(0);
      dst += nr;
    }
  }
}

template <typename T>
void scale_c(std::size_t m, std::size_t n, T beta, T* c, std::size_t ldc) {
  for (std::size_t i = 0; i < m; ++i) {
    T* row = c + i * ldc;
    if (beta == T(0)) {
      std::fill(row, row + n, T(0));
    } else {
      for (std::size_t j = 0; j < n; ++j) row[j] *= beta;
    }
  }
}

}  // namespace

std::string_view isa_name(Isa isa) { return isa == Isa::kAvx2 ? "avx2" : "scalar"; }

Isa detected_isa() {
  static const Isa isa = (detail::avx2_compiled() && cpu_has_avx2()) ? Isa::kAvx2 : Isa::kScalar;
  return isa;
}

Isa active_isa() { return active_slot().load(std::memory_order_relaxed); }

void set_active_isa(Isa isa) {
  if (isa == Isa::kAvx2 && detected_isa() != Isa::kAvx2) {
    throw ParameterError("AVX2 kernels are not available on this CPU/build");
  }
  active_slot().store(isa, std::memory_order_relaxed);
}

template <typename T>
void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, T alpha, const T* a,
          std::size_t lda, const T* b, std::size_t ldb, T beta, T* c, std::size_t ldc) {
  if (m == 0 || n == 0) return;
  if (k == 0 || alpha == T(0)) {
    scale_c(m, n, beta, c, ldc);
    return;
  }
  const auto kernel = kernel_for<T>(active_isa());
  const std::size_t mr = kernel.mr;
  const std::size_t nr = kernel.nr;

  thread_local std::vector<T> a_buf;
  thread_local std::vector<T> b_buf;
  const std::size_t mc_max = std::min(kMc, m);
  const std::size_t nc_max = std::min(kNc, n);
  const std::size_t kc_max = std::min(kKc, k);
  a_buf.resize(((mc_max + mr - 1) / mr) * mr * kc_max);
  b_buf.resize(((nc_max + nr - 1) / nr) * nr * kc_max);

  for (std::size_t jc = 0; jc < n; jc += kNc) {
    const std::size_t nc = std::min(kNc, n - jc);
    for (std::size_t pc = 0; pc < k; pc += kKc) {
      const std::size_t kc = std::min(kKc, k - pc);
      const T beta_eff = pc == 0 ? beta : T(1);
      pack_b(b, ldb, tb, pc, kc, jc, nc, nr, b_buf.data());
      for (std::size_t ic = 0; ic < m; ic += kMc) {
        const std::size_t mc = std::min(kMc, m - ic);
        pack_a(a, lda, ta, ic, mc, pc, kc, mr, a_buf.data());
        for (std::size_t jr = 0; jr < nc; jr += nr) {
          const std::size_t n_valid = std::min(nr, nc - jr);
          const T* bp = b_buf.data() + (jr / nr) * nr * kc;
          for (std::size_t ir = 0; ir < mc; ir += mr) {
            const std::size_t m_valid = std::min(mr, mc - ir);
            const T* ap = a_buf.data() + (ir / mr) * mr * kc;
            T* ct = c + (ic + ir) * ldc + jc + jr;
            kernel.fn(kc, ap, bp, alpha, beta_eff, ct, ldc, m_valid, n_valid);
          }
        }
      }
    }
  }
}

template <typename T>
void gemm_reference(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, T alpha,
                    const T* a, std::size_t lda, const T* b, std::size_t ldb, T beta, T* c,
                    std::size_t ldc) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      long double acc = 0.0L;
      for (std::size_t p = 0; p < k; ++p) {
        acc += static_cast<long double>(at_a(a, lda, ta, i, p)) * at_b(b, ldb, tb, p, j);
      }
      T& dst = c[i * ldc + j];
      const long double scaled = static_cast<long double>(alpha) * acc;
      dst = beta == T(0) ? static_cast<T>(scaled) : static_cast<T>(scaled + static_cast<long double>(beta) * dst);
    }
  }
}

template void gemm<float>(Trans, Trans, std::size_t, std::size_t, std::size_t, float, const float*,
                          std::size_t, const float*, std::size_t, float, float*, std::size_t);
template void gemm<double>(Trans, Trans, std::size_t, std::size_t, std::size_t, double, const double*,
                           std::size_t, const double*, std::size_t, double, double*, std::size_t);
template void gemm_reference<float>(Trans, Trans, std::size_t, std::size_t, std::size_t, float,
                                    const float*, std::size_t, const float*, std::size_t, float, float*,
                                    std::size_t);
template void gemm_reference<double>(Trans, Trans, std::size_t, std::size_t, std::size_t, double,
                                     const double*, std::size_t, const double*, std::size_t, double,
                                     double*, std::size_t);

}  // namespace adanet::kernels
