#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <vector>

#include "adanet/errors.hpp"
#include "adanet/loss/contrastive.hpp"
#include "adanet/loss/heads.hpp"
#include "adanet/loss/objective.hpp"
#include "adanet/ops.hpp"

using namespace adanet;
using T = double;

namespace {

Tensor<T> random_tensor(Shape shape, std::uint64_t seed, double lo = -1, double hi = 1) {
  Rng rng(seed);
  std::vector<T> v(shape_numel(shape));
  for (auto& x : v) x = rng.uniform(lo, hi);
  return Tensor<T>::from(std::move(shape), std::move(v));
}

Tensor<T> unit(std::size_t d, std::size_t i) {
  std::vector<T> v(d, 0.0);
  v[i] = 1.0;
  return Tensor<T>::from({d}, v);
}

// d x K matrix whose every column is `col`.
Tensor<T> repeat_columns(const std::vector<T>& col, std::size_t k) {
  std::vector<T> v(col.size() * k);
  for (std::size_t r = 0; r < col.size(); ++r)
    for (std::size_t c = 0; c < k; ++c) v[r * k + c] = col[r];
  return Tensor<T>::from({col.size(), k}, v);
}

// -log softmax of the positive among [q.p, q.n_1, ...], in long double.
double info_nce_oracle(const std::vector<T>& q, const std::vector<T>& p, const std::vector<std::vector<T>>& negs,
                       double tau) {
  auto dot = [&](const std::vector<T>& a) {
    long double s = 0;
    for (std::size_t i = 0; i < q.size(); ++i) s += static_cast<long double>(q[i]) * a[i];
    return s / tau;
  };
  long double denom = std::exp(dot(p));
  for (auto& n : negs) denom += std::exp(dot(n));
  return static_cast<double>(std::log(denom) - dot(p));
}

nn::GeneratorConfig tiny_config() {
  nn::GeneratorConfig c;
  c.in_channels = 2;
  c.base_channels = 2;
  c.n_resblocks = 2;
  return c;
}

}  // namespace

// --- info_nce ------------------------------------------------------------------

TEST(InfoNce, UniformSimilarityGivesLogKPlusOne) {
  for (std::size_t k : {1u, 63u, 255u}) {
    auto q = unit(8, 3);
    auto loss = loss::info_nce<T>(q, q, repeat_columns(std::vector<T>(q.data().begin(), q.data().end()), k), 0.07);
    EXPECT_NEAR(loss.item(), std::log(static_cast<double>(k + 1)), 1e-9) << "K=" << k;
  }
}

TEST(InfoNce, AlignedQueryOrthogonalNegatives) {
  const std::size_t d = 256, k = 255;
  const double tau = 0.07;
  std::vector<T> negs(d * k, 0.0);
  for (std::size_t c = 0; c < k; ++c) negs[(c + 1) * k + c] = 1.0;  // column c is e_{c+1}
  auto q = unit(d, 0);
  auto loss = loss::info_nce<T>(q, q, Tensor<T>::from({d, k}, negs), tau);
  EXPECT_NEAR(loss.item(), std::log1p(255.0 * std::exp(-1.0 / tau)), 1e-9);
}

TEST(InfoNce, MatchesDirectFormulaOnRandomInputs) {
  const std::size_t d = 6, k = 9;
  auto q = random_tensor({d}, 1), p = random_tensor({d}, 2), n = random_tensor({d, k}, 3);
  std::vector<std::vector<T>> negs(k, std::vector<T>(d));
  for (std::size_t r = 0; r < d; ++r)
    for (std::size_t c = 0; c < k; ++c) negs[c][r] = n[r * k + c];
  std::vector<T> qv(q.data().begin(), q.data().end()), pv(p.data().begin(), p.data().end());
  for (double tau : {0.07, 0.5, 2.0}) {
    EXPECT_NEAR(loss::info_nce<T>(q, p, n, tau).item(), info_nce_oracle(qv, pv, negs, tau), 1e-10);
  }
}

TEST(InfoNce, RejectsBadInputs) {
  auto q = unit(4, 0);
  EXPECT_THROW(loss::info_nce<T>(q, q, random_tensor({4, 3}, 1), 0.0), ParameterError);
  EXPECT_THROW(loss::info_nce<T>(q, unit(5, 0), random_tensor({4, 3}, 1), 0.07), DimensionError);
  EXPECT_THROW(loss::info_nce<T>(q, q, random_tensor({5, 3}, 1), 0.07), DimensionError);
}

TEST(PatchNce, MatchesRowwiseOracle) {
  const std::size_t n = 5, d = 3;
  auto qs = random_tensor({n, d}, 4), ks = random_tensor({n, d}, 5);
  double expected = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<T> q(d), p(d);
    std::vector<std::vector<T>> negs;
    for (std::size_t j = 0; j < d; ++j) q[j] = qs[i * d + j], p[j] = ks[i * d + j];
    for (std::size_t o = 0; o < n; ++o) {
      if (o == i) continue;
      std::vector<T> row(d);
      for (std::size_t j = 0; j < d; ++j) row[j] = ks[o * d + j];
      negs.push_back(row);
    }
    expected += info_nce_oracle(q, p, negs, 0.3) / n;
  }
  EXPECT_NEAR(loss::patch_nce<T>(qs, ks, T(0.3)).item(), expected, 1e-10);
}

TEST(PatchNce, InvariantToJointRowPermutation) {
  const std::size_t n = 6, d = 4;
  auto qs = random_tensor({n, d}, 6), ks = random_tensor({n, d}, 7);
  const std::vector<std::size_t> perm{3, 0, 5, 1, 4, 2};
  std::vector<T> pq(n * d), pk(n * d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) pq[i * d + j] = qs[perm[i] * d + j], pk[i * d + j] = ks[perm[i] * d + j];
  EXPECT_NEAR(loss::patch_nce<T>(qs, ks, T(0.07)).item(),
              loss::patch_nce<T>(Tensor<T>::from({n, d}, pq), Tensor<T>::from({n, d}, pk), T(0.07)).item(), 1e-12);
}

// --- spatial / frequency ----------------------------------------------------------

TEST(SpatialContrastive, ConstantTapsGiveLogNs) {
  Rng rng(11);
  std::vector<std::size_t> channels{3, 5};
  loss::ProjectionHeads<T> phi(channels, rng, 16);
  std::vector<Tensor<T>> taps{Tensor<T>::full({3, 8, 8}, 0.4), Tensor<T>::full({5, 4, 4}, -0.7)};
  auto samples = loss::sample_locations({{3, 8, 8}, {5, 4, 4}}, 16, rng);
  EXPECT_NEAR(loss::spatial_contrastive_from_taps<T>(phi, taps, taps, samples, 0.07).item(), std::log(16.0), 1e-9);
}

TEST(SpatialContrastive, AlignedQueriesScoreBelowShiftedOnes) {
  // One-hot features per location, so queries taken from the keys' own image
  // should beat queries shifted by one location.
  Rng rng(12);
  const std::size_t c = 16;
  std::vector<T> v(c * 4 * 4, 0.0);
  for (std::size_t pos = 0; pos < 16; ++pos) v[pos * 16 + pos] = 5.0;
  std::vector<Tensor<T>> taps{Tensor<T>::from({c, 4, 4}, v)};
  loss::ProjectionHeads<T> phi({c}, rng, 64);
  auto samples = loss::sample_locations({{c, 4, 4}}, 8, rng);
  const double aligned = loss::spatial_contrastive_from_taps<T>(phi, taps, taps, samples, 0.07).item();
  // Shifted queries: every query now matches a different key.
  std::vector<T> shifted(v.size(), 0.0);
  for (std::size_t pos = 0; pos < 16; ++pos) shifted[((pos + 1) % 16) * 16 + pos] = 5.0;
  std::vector<Tensor<T>> qtaps{Tensor<T>::from({c, 4, 4}, shifted)};
  const double misaligned = loss::spatial_contrastive_from_taps<T>(phi, qtaps, taps, samples, 0.07).item();
  EXPECT_LT(aligned, misaligned);
}

TEST(SpectrumRows, ConstantPatchHasOnlyDc) {
  const std::size_t p = 4;
  auto patches = Tensor<T>::full({2, 1, p, p}, 0.25);
  auto rows = loss::spectrum_rows(patches);
  ASSERT_EQ(rows.shape(), (Shape{2, 2 * p * p}));
  for (std::size_t r = 0; r < 2; ++r) {
    for (std::size_t j = 0; j < 2 * p * p; ++j) {
      // DC = sum of the patch = 0.25 p^2, divided by the side p.
      const double expected = j == 0 ? 0.25 * p : 0.0;
      EXPECT_NEAR(rows[r * 2 * p * p + j], expected, 1e-12) << j;
    }
  }
}

TEST(FreqContrastive, ConstantImageGivesLog64) {
  Rng rng(13);
  loss::FreqHead<T> theta(2, 4, rng, 32, 16);
  auto img = Tensor<T>::full({2, 16, 16}, 0.3);
  auto patches = loss::sample_patches(16, 16, 64, 4, rng);
  EXPECT_NEAR(loss::freq_contrastive<T>(theta, img, img, patches, 0.07).item(), std::log(64.0), 1e-9);
}

TEST(Sampling, LocationsAreDistinctAndInRange) {
  Rng rng(14);
  auto s = loss::sample_locations({{1, 8, 8}, {1, 4, 4}}, 16, rng);
  ASSERT_EQ(s.indices.size(), 2u);
  for (std::size_t m = 0; m < 2; ++m) {
    std::set<std::size_t> seen(s.indices[m].begin(), s.indices[m].end());
    EXPECT_EQ(seen.size(), 16u);
    EXPECT_LT(*seen.rbegin(), m == 0 ? 64u : 16u);
  }
  auto p = loss::sample_patches(10, 12, 20, 4, rng);
  std::set<std::pair<std::size_t, std::size_t>> origins(p.origins.begin(), p.origins.end());
  EXPECT_EQ(origins.size(), 20u);
  for (auto [r, c] : origins) {
    EXPECT_LE(r + 4, 10u);
    EXPECT_LE(c + 4, 12u);
  }
}

TEST(Sampling, Errors) {
  Rng rng(15);
  EXPECT_THROW(loss::sample_locations({{1, 4, 4}}, 17, rng), SamplingError);
  EXPECT_THROW(loss::sample_locations({{1, 4, 4}}, 1, rng), SamplingError);
  EXPECT_THROW(loss::sample_patches(8, 8, 4, 9, rng), SamplingError);
  EXPECT_THROW(loss::sample_patches(8, 8, 26, 4, rng), SamplingError);
}

TEST(IdentityLosses, NullHeadsSkipTerms) {
  Rng rng(16);
  nn::Generator<T> g(tiny_config(), rng);
  auto target = random_tensor({2, 8, 8}, 17);
  auto taps = g.encode(target);
  std::vector<Shape> shapes;
  for (auto& t : taps) shapes.push_back(t.shape());
  auto samples = loss::sample_locations(shapes, 2, rng);
  auto patches = loss::sample_patches(8, 8, 4, 4, rng);
  auto id = loss::identity_losses<T>(g, nullptr, nullptr, target, samples, patches, 0.07);
  EXPECT_FALSE(id.id_spatial.defined());
  EXPECT_FALSE(id.id_freq.defined());
  auto expected = g.translate(target);
  for (std::size_t i = 0; i < expected.numel(); ++i) EXPECT_EQ(id.reconstruction[i], expected[i]);
}

// --- adversarial / cycle ------------------------------------------------------------

TEST(Adversarial, LeastSquaresValues) {
  using loss::Role;
  const auto ls = loss::GanFlavor::kLeastSquares;
  auto ones = Tensor<T>::full({3, 3}, 1.0), zeros = Tensor<T>::zeros({3, 3});
  EXPECT_DOUBLE_EQ(loss::adversarial_loss<T>({}, ones, Role::kGenerator, ls).item(), 0.0);
  EXPECT_DOUBLE_EQ(loss::adversarial_loss<T>({}, zeros, Role::kGenerator, ls).item(), 1.0);
  EXPECT_DOUBLE_EQ(loss::adversarial_loss<T>(ones, zeros, Role::kDiscriminator, ls).item(), 0.0);
  EXPECT_DOUBLE_EQ(loss::adversarial_loss<T>(zeros, ones, Role::kDiscriminator, ls).item(), 2.0);
  auto mixed = Tensor<T>::from({2}, {0.5, 3.0});
  EXPECT_DOUBLE_EQ(loss::adversarial_loss<T>({}, mixed, Role::kGenerator, ls).item(), (0.25 + 4.0) / 2);
}

TEST(Adversarial, NonSaturatingBceValues) {
  using loss::Role;
  const auto bce = loss::GanFlavor::kNonSaturatingBce;
  auto zeros = Tensor<T>::zeros({2, 2});
  EXPECT_NEAR(loss::adversarial_loss<T>({}, zeros, Role::kGenerator, bce).item(), std::log(2.0), 1e-12);
  EXPECT_NEAR(loss::adversarial_loss<T>(zeros, zeros, Role::kDiscriminator, bce).item(), 2 * std::log(2.0), 1e-12);
  auto x = Tensor<T>::from({1}, {1.5});
  EXPECT_NEAR(loss::adversarial_loss<T>({}, x, Role::kGenerator, bce).item(), std::log1p(std::exp(-1.5)), 1e-12);
  EXPECT_THROW(loss::adversarial_loss<T>({}, zeros, Role::kDiscriminator, bce), ContractError);
}

TEST(Cycle, IdentityDoublesGiveZero) {
  Rng rng(18);
  auto cfg = tiny_config();
  cfg.identity_output = true;
  nn::Generator<T> gf(cfg, rng), gi(cfg, rng);
  auto low = random_tensor({2, 8, 8}, 19), high = random_tensor({2, 8, 8}, 20);
  EXPECT_EQ(loss::cycle_consistency_loss<T>(loss::Preset::kCycleGan, low, high, gf, gi).item(), 0.0);
  EXPECT_THROW(loss::cycle_consistency_loss<T>(loss::Preset::kAdanet, low, high, gf, gi), ConfigError);
}

TEST(Cycle, MatchesDirectL1) {
  Rng rng(21);
  nn::Generator<T> gf(tiny_config(), rng), gi(tiny_config(), rng);
  auto low = random_tensor({2, 8, 8}, 22), high = random_tensor({2, 8, 8}, 23);
  auto a = gi.translate(gf.translate(low)), b = gf.translate(gi.translate(high));
  double expected = 0;
  for (std::size_t i = 0; i < low.numel(); ++i) {
    expected += std::abs(low[i] - a[i]) / low.numel() + std::abs(high[i] - b[i]) / high.numel();
  }
  EXPECT_NEAR(loss::cycle_consistency_loss<T>(loss::Preset::kCycleGan, low, high, gf, gi).item(), expected, 1e-12);
}

// --- objective ---------------------------------------------------------------------

TEST(Objective, PresetWeights) {
  auto a = loss::preset_weights(loss::Preset::kAdanet);
  EXPECT_EQ(a.spatial, 0.5);
  EXPECT_EQ(a.id_spatial, 0.5);
  EXPECT_EQ(a.freq, 0.5);
  EXPECT_EQ(a.id_freq, 0.5);
  EXPECT_EQ(a.cycle, 0.0);
  auto fast = loss::preset_weights(loss::Preset::kFastCut);
  EXPECT_EQ(fast.id_spatial, 0.0);
  EXPECT_EQ(fast.freq, 0.0);
  EXPECT_EQ(fast.id_freq, 0.0);
  auto cut = loss::preset_weights(loss::Preset::kCut);
  EXPECT_EQ(cut.spatial, 1.0);
  EXPECT_EQ(cut.id_spatial, 1.0);
  EXPECT_EQ(cut.freq, 0.0);
  EXPECT_GT(loss::preset_weights(loss::Preset::kCycleGan).cycle, 0.0);
}

TEST(Objective, WeightedSumOfActiveTerms) {
  auto s = [](double v) { return Tensor<T>::scalar(v); };
  loss::LossTerms<T> terms{s(1.0), s(2.0), s(3.0), s(4.0), s(5.0), {}};
  auto w = loss::preset_weights(loss::Preset::kAdanet);
  auto obj = loss::total_objective(terms, w);
  EXPECT_DOUBLE_EQ(obj.total.item(), 1.0 + 0.5 * (2 + 3 + 4 + 5));
  EXPECT_DOUBLE_EQ(obj.report.total, obj.total.item());
  EXPECT_EQ(*obj.report.id_freq, 5.0);
  EXPECT_FALSE(obj.report.cycle.has_value());

  auto fast = loss::total_objective(terms, loss::preset_weights(loss::Preset::kFastCut));
  EXPECT_DOUBLE_EQ(fast.total.item(), 3.0);
  EXPECT_FALSE(fast.report.id_spatial.has_value());
  EXPECT_FALSE(fast.report.freq.has_value());
  EXPECT_FALSE(fast.report.id_freq.has_value());
}

TEST(Objective, ActiveUndefinedTermIsAnError) {
  loss::LossTerms<T> terms{Tensor<T>::scalar(1.0), {}, {}, {}, {}, {}};
  EXPECT_THROW(loss::total_objective(terms, loss::preset_weights(loss::Preset::kAdanet)), ConfigError);
  EXPECT_THROW(loss::total_objective(terms, loss::preset_weights(loss::Preset::kCycleGan)), ConfigError);
}

TEST(Objective, WeightValidation) {
  loss::LossWeights w;
  w.freq = -0.1;
  EXPECT_THROW(w.validate(), ParameterError);
  w = {};
  w.tau = 0;
  EXPECT_THROW(w.validate(), ParameterError);
  EXPECT_THROW(loss::parse_preset("pix2pix"), ConfigError);
  EXPECT_THROW(loss::parse_flavor("wasserstein"), ParameterError);
  EXPECT_EQ(loss::parse_preset("fastcut"), loss::Preset::kFastCut);
  EXPECT_EQ(loss::parse_flavor(loss::flavor_name(loss::GanFlavor::kNonSaturatingBce)),
            loss::GanFlavor::kNonSaturatingBce);
}

TEST(Objective, CsvMarksAbsentTerms) {
  loss::LossReport r;
  r.step = 3;
  r.adversarial_g = 0.5;
  r.adversarial_d = 0.25;
  r.spatial = 2.0;
  r.total = 1.5;
  EXPECT_EQ(loss::LossReport::csv_header(), "step,L_A_G,L_A_D,L_Spatial,L_IDSpatial,L_Freq,L_IDFreq,total");
  EXPECT_EQ(r.csv_row(), "3,0.5,0.25,2,NA,NA,NA,1.5");
}
