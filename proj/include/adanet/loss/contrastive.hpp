#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "adanet/loss/heads.hpp"
#include "adanet/nn/generator.hpp"
#include "adanet/rng.hpp"
#include "adanet/tensor.hpp"

namespace adanet::loss {

// Flat spatial indices per tap, in that tap's own h x w coordinates.
struct SpatialSampleSet {
  std::vector<std::vector<std::size_t>> indices;
};

// Top-left corners of square patches of side `size`.
struct FreqPatchSet {
  std::vector<std::pair<std::size_t, std::size_t>> origins;
  std::size_t size = 32;
};

// n_s distinct locations per tap, uniform without replacement. Throws
// SamplingError if a tap has fewer than n_s positions.
SpatialSampleSet sample_locations(const std::vector<Shape>& tap_shapes, std::size_t n_s, Rng& rng);

// n_f distinct origins of size x size patches lying fully inside h x w.
FreqPatchSet sample_patches(std::size_t h, std::size_t w, std::size_t n_f, std::size_t size, Rng& rng);

// -log(e^{q.p/tau} / (e^{q.p/tau} + sum_k e^{q.n_k/tau})) for q, p [d] and
// negatives F_n [d x K]. Inputs are used as given (callers normalize).
template <typename T>
Tensor<T> info_nce(const Tensor<T>& f_q, const Tensor<T>& f_p, const Tensor<T>& f_n, T tau);

// Batched info_nce: row i of `queries` is positive with row i of `keys` and
// negative with every other row. Returns the mean over rows.
template <typename T>
Tensor<T> patch_nce(const Tensor<T>& queries, const Tensor<T>& keys, T tau);

// Spatial contrastive loss from precomputed taps: query features come from
// the generated image, positives/negatives from the source. Averaged over
// heads and locations.
template <typename T>
Tensor<T> spatial_contrastive_from_taps(const ProjectionHeads<T>& phi, const std::vector<Tensor<T>>& query_taps,
                                        const std::vector<Tensor<T>>& key_taps, const SpatialSampleSet& samples,
                                        T tau);

template <typename T>
Tensor<T> spatial_contrastive(const nn::Generator<T>& g, const ProjectionHeads<T>& phi, const Tensor<T>& source,
                              const Tensor<T>& generated, const SpatialSampleSet& samples, T tau);

// [Re; Im] of each patch spectrum, divided by the patch side so the rows
// have the same scale as the pixels. patches [n x C x p x p] -> [n x 2Cp^2].
template <typename T>
Tensor<T> spectrum_rows(const Tensor<T>& patches);

template <typename T>
Tensor<T> freq_contrastive(const FreqHead<T>& theta, const Tensor<T>& source, const Tensor<T>& generated,
                           const FreqPatchSet& patches, T tau);

template <typename T>
struct IdentityLosses {
  Tensor<T> id_spatial;  // undefined when not requested
  Tensor<T> id_freq;
  Tensor<T> reconstruction;  // G(target)
};

// G(target) and the two contrastive terms against target. Either head may
// be null to skip its term.
template <typename T>
IdentityLosses<T> identity_losses(const nn::Generator<T>& g, const ProjectionHeads<T>* phi, const FreqHead<T>* theta,
                                  const Tensor<T>& target, const SpatialSampleSet& samples,
                                  const FreqPatchSet& patches, T tau);

}  // namespace adanet::loss
