#pragma once

#include <complex>
#include <cstddef>
#include <span>

namespace adanet::fft {

constexpr bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// In-place iterative radix-2 transform of length data.size(). Forward uses
// e^{-i...}; inverse uses e^{+i...} and is NOT scaled by 1/n.
template <typename T>
void transform(std::span<std::complex<T>> data, bool inverse);

// In-place 2-D transform of an n x n row-major block, rows then columns.
template <typename T>
void transform2d(std::span<std::complex<T>> data, std::size_t n, bool inverse);

// Normalized inverse (divides by n^2), so inverse2d(transform2d(x)) == x.
template <typename T>
void inverse2d(std::span<std::complex<T>> data, std::size_t n);

}  // namespace adanet::fft
