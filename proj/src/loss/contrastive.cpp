#include "adanet/loss/contrastive.hpp"

#include <numeric>
#include <string>

#include "adanet/errors.hpp"
#include "adanet/ops.hpp"

namespace adanet::loss {

namespace {

// First k entries of a partial Fisher-Yates shuffle of [0, n).
std::vector<std::size_t> choose_distinct(std::size_t n, std::size_t k, Rng& rng) {
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  return pool;
}

template <typename T>
void check_tau(T tau) {
  if (!(tau > T(0))) throw ParameterError("temperature must be positive");
}

}  // namespace

SpatialSampleSet sample_locations(const std::vector<Shape>& tap_shapes, std::size_t n_s, Rng& rng) {
  if (n_s < 2) throw SamplingError("at least two sample locations are needed (one positive, one negative)");
  SpatialSampleSet s;
  for (std::size_t m = 0; m < tap_shapes.size(); ++m) {
    const Shape& sh = tap_shapes[m];
    if (sh.size() != 3) throw DimensionError("tap shapes must be C x h x w");
    const std::size_t hw = sh[1] * sh[2];
    if (n_s > hw) {
      throw SamplingError("tap " + std::to_string(m) + " has " + std::to_string(hw) + " positions, " +
                          std::to_string(n_s) + " samples requested");
    }
    s.indices.push_back(choose_distinct(hw, n_s, rng));
  }
  return s;
}

FreqPatchSet sample_patches(std::size_t h, std::size_t w, std::size_t n_f, std::size_t size, Rng& rng) {
  if (size == 0 || size > h || size > w) throw SamplingError("frequency patch does not fit in the image");
  const std::size_t rows = h - size + 1, cols = w - size + 1;
  if (n_f < 2 || n_f > rows * cols) {
    throw SamplingError("cannot place " + std::to_string(n_f) + " distinct " + std::to_string(size) +
                        "-pixel patches in " + std::to_string(h) + "x" + std::to_string(w));
  }
  FreqPatchSet p;
  p.size = size;
  for (std::size_t flat : choose_distinct(rows * cols, n_f, rng)) p.origins.emplace_back(flat / cols, flat % cols);
  return p;
}

template <typename T>
Tensor<T> info_nce(const Tensor<T>& f_q, const Tensor<T>& f_p, const Tensor<T>& f_n, T tau) {
  check_tau(tau);
  if (f_q.rank() != 1 || f_p.shape() != f_q.shape() || f_n.rank() != 2 || f_n.dim(0) != f_q.dim(0)) {
    throw DimensionError("info_nce: expected f_q, f_p [d] and F_n [d x K]");
  }
  const std::size_t d = f_q.dim(0);
  auto candidates = ops::concat<T>({ops::reshape(f_p, {1, d}), ops::transpose2d(f_n)}, 0);
  auto logits = ops::mul_scalar(ops::matmul(ops::reshape(f_q, {1, d}), candidates, false, true), T(1) / tau);
  return ops::cross_entropy_rows(logits, {0});
}

template <typename T>
Tensor<T> patch_nce(const Tensor<T>& queries, const Tensor<T>& keys, T tau) {
  check_tau(tau);
  if (queries.rank() != 2 || queries.shape() != keys.shape()) {
    throw DimensionError("patch_nce: queries and keys must both be [n x d]");
  }
  const std::size_t n = queries.dim(0);
  std::vector<std::size_t> diag(n);
  std::iota(diag.begin(), diag.end(), std::size_t{0});
  auto logits = ops::mul_scalar(ops::matmul(queries, keys, false, true), T(1) / tau);
  return ops::cross_entropy_rows(logits, diag);
}

template <typename T>
Tensor<T> spatial_contrastive_from_taps(const ProjectionHeads<T>& phi, const std::vector<Tensor<T>>& query_taps,
                                        const std::vector<Tensor<T>>& key_taps, const SpatialSampleSet& samples,
                                        T tau) {
  const std::size_t m_count = phi.size();
  if (query_taps.size() != m_count || key_taps.size() != m_count || samples.indices.size() != m_count) {
    throw DimensionError("spatial_contrastive: need one tap and one sample list per head");
  }
  Tensor<T> total;
  for (std::size_t m = 0; m < m_count; ++m) {
    auto q = ops::l2_normalize_rows(phi.forward(m, ops::gather_positions(query_taps[m], samples.indices[m])));
    auto k = ops::l2_normalize_rows(phi.forward(m, ops::gather_positions(key_taps[m], samples.indices[m])));
    auto term = patch_nce(q, k, tau);
    total = total.defined() ? ops::add(total, term) : term;
  }
  return ops::mul_scalar(total, T(1) / static_cast<T>(m_count));
}

template <typename T>
Tensor<T> spatial_contrastive(const nn::Generator<T>& g, const ProjectionHeads<T>& phi, const Tensor<T>& source,
                              const Tensor<T>& generated, const SpatialSampleSet& samples, T tau) {
  return spatial_contrastive_from_taps(phi, g.encode(generated), g.encode(source), samples, tau);
}

template <typename T>
Tensor<T> spectrum_rows(const Tensor<T>& patches) {
  if (patches.rank() != 4) throw DimensionError("spectrum_rows: expected [n x C x p x p]");
  const std::size_t n = patches.dim(0), per = patches.numel() / n;
  auto spec = ops::fft2d(patches);
  auto rows = ops::concat<T>({ops::reshape(spec.re, {n, per}), ops::reshape(spec.im, {n, per})}, 1);
  return ops::mul_scalar(rows, T(1) / static_cast<T>(patches.dim(3)));
}

template <typename T>
Tensor<T> freq_contrastive(const FreqHead<T>& theta, const Tensor<T>& source, const Tensor<T>& generated,
                           const FreqPatchSet& patches, T tau) {
  if (source.shape() != generated.shape()) throw DimensionError("freq_contrastive: image shapes differ");
  auto embed = [&](const Tensor<T>& img) {
    return ops::l2_normalize_rows(theta.forward(spectrum_rows(ops::crop_patches(img, patches.origins, patches.size))));
  };
  return patch_nce(embed(generated), embed(source), tau);
}

template <typename T>
IdentityLosses<T> identity_losses(const nn::Generator<T>& g, const ProjectionHeads<T>* phi, const FreqHead<T>* theta,
                                  const Tensor<T>& target, const SpatialSampleSet& samples,
                                  const FreqPatchSet& patches, T tau) {
  IdentityLosses<T> out;
  std::vector<Tensor<T>> key_taps;
  out.reconstruction = g.forward(target, phi ? &key_taps : nullptr);
  if (phi) out.id_spatial = spatial_contrastive_from_taps(*phi, g.encode(out.reconstruction), key_taps, samples, tau);
  if (theta) out.id_freq = freq_contrastive(*theta, target, out.reconstruction, patches, tau);
  return out;
}

#define ADANET_INSTANTIATE_CONTRASTIVE(T)                                                                         \
  template Tensor<T> info_nce(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, T);                           \
  template Tensor<T> patch_nce(const Tensor<T>&, const Tensor<T>&, T);                                            \
  template Tensor<T> spatial_contrastive_from_taps(const ProjectionHeads<T>&, const std::vector<Tensor<T>>&,       \
                                                   const std::vector<Tensor<T>>&, const SpatialSampleSet&, T);    \
  template Tensor<T> spatial_contrastive(const nn::Generator<T>&, const ProjectionHeads<T>&, const Tensor<T>&,     \
                                         const Tensor<T>&, const SpatialSampleSet&, T);                           \
  template Tensor<T> spectrum_rows(const Tensor<T>&);                                                             \
  template Tensor<T> freq_contrastive(const FreqHead<T>&, const Tensor<T>&, const Tensor<T>&, const FreqPatchSet&, \
                                      T);                                                                         \
  template IdentityLosses<T> identity_losses(const nn::Generator<T>&, const ProjectionHeads<T>*, const FreqHead<T>*, \
                                             const Tensor<T>&, const SpatialSampleSet&, const FreqPatchSet&, T);

ADANET_INSTANTIATE_CONTRASTIVE(float)
ADANET_INSTANTIATE_CONTRASTIVE(double)

}  // namespace adanet::loss
