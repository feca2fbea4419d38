#include "adanet/fft.hpp"

#include <cmath>
#include <numbers>
#include <utility>
#include <vector>

#include "adanet/errors.hpp"

namespace adanet::fft {

template <typename T>
void transform(std::span<std::complex<T>> data, bool inverse) {
  const std::size_t n = data.size();
  if (!is_power_of_two(n)) throw UnsupportedSizeError("FFT length must be a power of two, got " + std::to_string(n));
  if (n == 1) return;

  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(data[i], data[j]);
  }

  const T sign = inverse ? T(1) : T(-1);
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    // Twiddles are evaluated directly rather than by recurrence so that the
    // rounding error does not grow with the stage length.
    for (std::size_t k = 0; k < half; ++k) {
      const T angle = sign * T(2) * std::numbers::pi_v<T> * static_cast<T>(k) / static_cast<T>(len);
      const std::complex<T> w(std::cos(angle), std::sin(angle));
      for (std::size_t start = 0; start < n; start += len) {
        const std::complex<T> u = data[start + k];
        const std::complex<T> v = data[start + k + half] * w;
        data[start + k] = u + v;
        data[start + k + half] = u - v;
      }
    }
  }
}

template <typename T>
void transform2d(std::span<std::complex<T>> data, std::size_t n, bool inverse) {
  if (data.size() != n * n) throw DimensionError("transform2d: buffer is not n x n");
  for (std::size_t r = 0; r < n; ++r) transform(data.subspan(r * n, n), inverse);
  std::vector<std::complex<T>> column(n);
  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t r = 0; r < n; ++r) column[r] = data[r * n + c];
    transform(std::span<std::complex<T>>(column), inverse);
    for (std::size_t r = 0; r < n; ++r) data[r * n + c] = column[r];
  }
}

template <typename T>
void inverse2d(std::span<std::complex<T>> data, std::size_t n) {
  transform2d(data, n, true);
  const T scale = T(1) / static_cast<T>(n * n);
  for (auto& v : data) v *= scale;
}

template void transform<float>(std::span<std::complex<float>>, bool);
template void transform<double>(std::span<std::complex<double>>, bool);
template void transform2d<float>(std::span<std::complex<float>>, std::size_t, bool);
template void transform2d<double>(std::span<std::complex<double>>, std::size_t, bool);
template void inverse2d<float>(std::span<std::complex<float>>, std::size_t);
template void inverse2d<double>(std::span<std::complex<double>>, std::size_t);

}  // namespace adanet::fft
