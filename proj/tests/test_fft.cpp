#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "adanet/errors.hpp"
#include "adanet/fft.hpp"
#include "adanet/ops.hpp"
#include "adanet/rng.hpp"

using namespace adanet;

namespace {

// O(N^4) double-sum DFT of one N x N plane.
std::vector<std::complex<double>> naive_dft2(const std::vector<double>& x, std::size_t n) {
  std::vector<std::complex<double>> out(n * n);
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = 0; v < n; ++v) {
      std::complex<double> acc = 0;
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c) {
          const double ang = -2.0 * std::numbers::pi * static_cast<double>(u * r + v * c) / static_cast<double>(n);
          acc += x[r * n + c] * std::complex<double>(std::cos(ang), std::sin(ang));
        }
      out[u * n + v] = acc;
    }
  return out;
}

}  // namespace

TEST(Fft, ConstantInputHasOnlyDc) {
  const std::size_t n = 8;
  auto spec = ops::fft2d(Tensor<double>::full({1, n, n}, 2.5));
  EXPECT_NEAR(spec.re[0], 2.5 * n * n, 1e-10);
  for (std::size_t i = 1; i < n * n; ++i) {
    EXPECT_NEAR(spec.re[i], 0.0, 1e-10);
    EXPECT_NEAR(spec.im[i], 0.0, 1e-10);
  }
}

TEST(Fft, ImpulseGivesFlatSpectrum) {
  auto x = Tensor<double>::zeros({1, 4, 4});
  x.mutable_data()[0] = 1.0;
  auto spec = ops::fft2d(x);
  for (std::size_t i = 0; i < 16; ++i) {
    EXPECT_NEAR(spec.re[i], 1.0, 1e-12);
    EXPECT_NEAR(spec.im[i], 0.0, 1e-12);
  }
}

TEST(Fft, MatchesNaiveDft) {
  Rng rng(3);
  const std::size_t c = 2, n = 32;
  std::vector<double> v(c * n * n);
  for (auto& e : v) e = rng.uniform(-1, 1);
  auto spec = ops::fft2d(Tensor<double>::from({c, n, n}, v));
  for (std::size_t ch = 0; ch < c; ++ch) {
    const auto ref = naive_dft2(std::vector<double>(v.begin() + ch * n * n, v.begin() + (ch + 1) * n * n), n);
    for (std::size_t i = 0; i < n * n; ++i) {
      ASSERT_NEAR(spec.re[ch * n * n + i], ref[i].real(), 1e-9);
      ASSERT_NEAR(spec.im[ch * n * n + i], ref[i].imag(), 1e-9);
    }
  }
}

TEST(Fft, InverseRoundTrip) {
  Rng rng(4);
  const std::size_t n = 32;
  std::vector<std::complex<double>> data(n * n), orig;
  for (auto& e : data) e = {rng.uniform(-1, 1), 0.0};
  orig = data;
  fft::transform2d<double>(data, n, false);
  fft::inverse2d<double>(data, n);
  for (std::size_t i = 0; i < n * n; ++i) ASSERT_NEAR(std::abs(data[i] - orig[i]), 0.0, 1e-10);
}

TEST(Fft, RejectsNonPowerOfTwo) {
  EXPECT_THROW(ops::fft2d(Tensor<double>::zeros({1, 6, 6})), UnsupportedSizeError);
  EXPECT_THROW(ops::fft2d(Tensor<double>::zeros({1, 4, 8})), DimensionError);
}
