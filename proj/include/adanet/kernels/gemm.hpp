#pragma once

#include <cstddef>
#include <string_view>

namespace adanet::kernels {

enum class Isa { kScalar, kAvx2 };

std::string_view isa_name(Isa isa);

// Best instruction set this CPU supports (and this build carries code for).
Isa detected_isa();
// The instruction set gemm() dispatches to. Defaults to detected_isa(); the
// ADANET_ISA environment variable ("scalar" / "avx2") overrides at startup.
Isa active_isa();
// Throws ParameterError if the CPU cannot run `isa`.
void set_active_isa(Isa isa);

// RAII override of the active ISA, used by equivalence tests.
class ScopedIsa {
 public:
  explicit ScopedIsa(Isa isa) : previous_(active_isa()) { set_active_isa(isa); }
  ~ScopedIsa() { set_active_isa(previous_); }
  ScopedIsa(const ScopedIsa&) = delete;
  ScopedIsa& operator=(const ScopedIsa&) = delete;

 private:
  Isa previous_;
};

enum class Trans { kNo, kYes };

// Row-major C[m x n] = alpha * op(A) * op(B) + beta * C.
// op(A) is m x k: A is m x k (lda >= k) or, transposed, k x m (lda >= m).
// op(B) is k x n: B is k x n (ldb >= n) or, transposed, n x k (ldb >= k).
// beta == 0 never reads C.
template <typename T>
void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, T alpha, const T* a,
          std::size_t lda, const T* b, std::size_t ldb, T beta, T* c, std::size_t ldc);

// Straight triple loop with a long-double accumulator. Test oracle only.
template <typename T>
void gemm_reference(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, T alpha,
                    const T* a, std::size_t lda, const T* b, std::size_t ldb, T beta, T* c,
                    std::size_t ldc);

namespace detail {

// Micro-kernel contract: acc = sum_p ap[p*mr + i] * bp[p*nr + j] over kc,
// then C[i, j] = alpha * acc + beta * C[i, j] for i < m_valid, j < n_valid.
// ap/bp are packed panels; beta == 0 must not read C.
template <typename T>
using MicroKernel = void (*)(std::size_t kc, const T* ap, const T* bp, T alpha, T beta, T* c,
                             std::size_t ldc, std::size_t m_valid, std::size_t n_valid);

template <typename T>
struct KernelDesc {
  MicroKernel<T> fn;
  std::size_t mr;
  std::size_t nr;
};

KernelDesc<float> scalar_kernel_f32();
KernelDesc<double> scalar_kernel_f64();
KernelDesc<float> avx2_kernel_f32();
KernelDesc<double> avx2_kernel_f64();
bool avx2_compiled();

}  // namespace detail

}  // namespace adanet::kernels
