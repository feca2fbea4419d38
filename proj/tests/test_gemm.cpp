#include <gtest/gtest.h>

#include <cmath>
#include <tuple>
#include <vector>

#include "adanet/kernels/gemm.hpp"
#include "adanet/rng.hpp"

using namespace adanet;
using namespace adanet::kernels;

namespace {

template <typename T>
std::vector<T> random_matrix(std::size_t n, Rng& rng) {
  std::vector<T> v(n);
  for (auto& x : v) x = static_cast<T>(rng.uniform(-1.0, 1.0));
  return v;
}

std::vector<Isa> available_isas() {
  std::vector<Isa> isas{Isa::kScalar};
  if (detected_isa() == Isa::kAvx2) isas.push_back(Isa::kAvx2);
  return isas;
}

template <typename T>
void check_against_reference(std::size_t m, std::size_t n, std::size_t k, Trans ta, Trans tb, T alpha, T beta,
                             double tol) {
  Rng rng(m * 7919 + n * 104729 + k);
  const std::size_t lda = (ta == Trans::kNo ? k : m) + 3;
  const std::size_t ldb = (tb == Trans::kNo ? n : k) + 1;
  const std::size_t ldc = n + 2;
  const auto a = random_matrix<T>((ta == Trans::kNo ? m : k) * lda, rng);
  const auto b = random_matrix<T>((tb == Trans::kNo ? k : n) * ldb, rng);
  const auto c0 = random_matrix<T>(m * ldc, rng);

  auto expected = c0;
  gemm_reference<T>(ta, tb, m, n, k, alpha, a.data(), lda, b.data(), ldb, beta, expected.data(), ldc);
  for (Isa isa : available_isas()) {
    ScopedIsa scope(isa);
    auto got = c0;
    gemm<T>(ta, tb, m, n, k, alpha, a.data(), lda, b.data(), ldb, beta, got.data(), ldc);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < ldc; ++j) {
        const std::size_t idx = i * ldc + j;
        if (j >= n) {
          ASSERT_EQ(got[idx], c0[idx]) << "wrote outside C at " << i << "," << j;
          continue;
        }
        ASSERT_NEAR(got[idx], expected[idx], tol * (1.0 + std::abs(expected[idx])))
            << isa_name(isa) << " m=" << m << " n=" << n << " k=" << k << " at " << i << "," << j;
      }
    }
  }
}

}  // namespace

class GemmShapes : public ::testing::TestWithParam<std::tuple<int, int, int>> {};

TEST_P(GemmShapes, AllIsasMatchReferenceF64) {
  const auto [m, n, k] = GetParam();
  for (Trans ta : {Trans::kNo, Trans::kYes})
    for (Trans tb : {Trans::kNo, Trans::kYes}) {
      check_against_reference<double>(m, n, k, ta, tb, 1.0, 0.0, 1e-12);
      check_against_reference<double>(m, n, k, ta, tb, -0.5, 1.0, 1e-12);
      check_against_reference<double>(m, n, k, ta, tb, 2.0, 0.25, 1e-12);
    }
}

TEST_P(GemmShapes, AllIsasMatchReferenceF32) {
  const auto [m, n, k] = GetParam();
  for (Trans ta : {Trans::kNo, Trans::kYes})
    for (Trans tb : {Trans::kNo, Trans::kYes}) {
      check_against_reference<float>(m, n, k, ta, tb, 1.0f, 0.0f, 2e-5 * std::sqrt(k + 1.0));
      check_against_reference<float>(m, n, k, ta, tb, 0.5f, 1.0f, 2e-5 * std::sqrt(k + 1.0));
    }
}

// Edge cases around the micro-tile sizes (4x4 scalar, 6x16 / 6x8 AVX2) and
// the KC = 256 depth block.
INSTANTIATE_TEST_SUITE_P(Shapes, GemmShapes,
                         ::testing::Values(std::tuple{1, 1, 1}, std::tuple{3, 5, 7}, std::tuple{6, 16, 8},
                                           std::tuple{7, 17, 9}, std::tuple{13, 33, 300}, std::tuple{97, 40, 257},
                                           std::tuple{5, 2100, 3}, std::tuple{64, 64, 64}));

TEST(Gemm, ZeroDepthScalesC) {
  std::vector<double> c{1, 2, 3, 4};
  gemm<double>(Trans::kNo, Trans::kNo, 2, 2, 0, 1.0, nullptr, 1, nullptr, 2, 0.5, c.data(), 2);
  EXPECT_EQ(c, (std::vector<double>{0.5, 1, 1.5, 2}));
}

TEST(Gemm, BetaZeroIgnoresNanInC) {
  std::vector<double> a{1, 2}, b{3, 4};
  std::vector<double> c{std::nan(""), std::nan(""), std::nan(""), std::nan("")};
  for (Isa isa : available_isas()) {
    ScopedIsa scope(isa);
    gemm<double>(Trans::kNo, Trans::kNo, 2, 2, 1, 1.0, a.data(), 1, b.data(), 2, 0.0, c.data(), 2);
    EXPECT_EQ(c, (std::vector<double>{3, 4, 6, 8}));
  }
}

TEST(Gemm, ScalarIsaAlwaysSelectable) {
  ScopedIsa scope(Isa::kScalar);
  EXPECT_EQ(active_isa(), Isa::kScalar);
}
