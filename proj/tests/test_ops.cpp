#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "adanet/errors.hpp"
#include "adanet/gradcheck.hpp"
#include "adanet/ops.hpp"
#include "adanet/rng.hpp"
#include "adanet/train/gradcheck_suite.hpp"

using namespace adanet;
using T = double;

namespace {

Tensor<T> random_tensor(Shape shape, std::uint64_t seed, double lo = -1, double hi = 1) {
  Rng rng(seed);
  std::vector<T> v(shape_numel(shape));
  for (auto& x : v) x = rng.uniform(lo, hi);
  return Tensor<T>::from(std::move(shape), std::move(v));
}

// Direct quadruple loop; zero padding, cross-correlation.
std::vector<T> conv_oracle(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b, std::size_t stride,
                           std::size_t pad) {
  const std::size_t ci = x.dim(0), h = x.dim(1), wd = x.dim(2), co = w.dim(0), f = w.dim(2);
  const std::size_t oh = (h + 2 * pad - f) / stride + 1, ow = (wd + 2 * pad - f) / stride + 1;
  std::vector<T> out(co * oh * ow);
  for (std::size_t o = 0; o < co; ++o)
    for (std::size_t r = 0; r < oh; ++r)
      for (std::size_t c = 0; c < ow; ++c) {
        T acc = b.defined() ? b[o] : 0;
        for (std::size_t i = 0; i < ci; ++i)
          for (std::size_t kr = 0; kr < f; ++kr)
            for (std::size_t kc = 0; kc < f; ++kc) {
              const auto rr = static_cast<std::ptrdiff_t>(r * stride + kr) - static_cast<std::ptrdiff_t>(pad);
              const auto cc = static_cast<std::ptrdiff_t>(c * stride + kc) - static_cast<std::ptrdiff_t>(pad);
              if (rr < 0 || cc < 0 || rr >= static_cast<std::ptrdiff_t>(h) || cc >= static_cast<std::ptrdiff_t>(wd))
                continue;
              acc += x[(i * h + rr) * wd + cc] * w[((o * ci + i) * f + kr) * f + kc];
            }
        out[(o * oh + r) * ow + c] = acc;
      }
  return out;
}

}  // namespace

// --- conv2d ---------------------------------------------------------------

TEST(Conv2d, IdentityKernelReproducesInput) {
  auto x = random_tensor({3, 5, 4}, 1);
  std::vector<T> w(9, 0.0);
  for (int i = 0; i < 3; ++i) w[i * 3 + i] = 1.0;
  auto y = ops::conv2d(x, Tensor<T>::from({3, 3, 1, 1}, w), Tensor<T>::zeros({3}), 1, 0);
  ASSERT_EQ(y.shape(), x.shape());
  for (std::size_t i = 0; i < x.numel(); ++i) EXPECT_EQ(y[i], x[i]);
}

TEST(Conv2d, ConstantFieldAllOnesKernel) {
  const T c = 1.75;
  auto y = ops::conv2d(Tensor<T>::full({1, 6, 6}, c), Tensor<T>::full({1, 1, 3, 3}, 1.0), Tensor<T>{}, 1, 0);
  ASSERT_EQ(y.shape(), (Shape{1, 4, 4}));
  for (std::size_t i = 0; i < y.numel(); ++i) EXPECT_DOUBLE_EQ(y[i], 9 * c);
}

TEST(Conv2d, MatchesNestedLoopOracle) {
  auto x = random_tensor({2, 5, 5}, 2);
  auto w = random_tensor({3, 2, 3, 3}, 3);
  auto b = random_tensor({3}, 4);
  for (std::size_t stride : {1, 2}) {
    for (std::size_t pad : {0, 1, 2}) {
      auto y = ops::conv2d(x, w, b, stride, pad);
      auto ref = conv_oracle(x, w, b, stride, pad);
      ASSERT_EQ(y.numel(), ref.size());
      for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(y[i], ref[i], 1e-6 * std::max(1.0, std::abs(ref[i])));
    }
  }
}

TEST(Conv2d, FloatPathMatchesOracle) {
  auto xd = random_tensor({4, 9, 7}, 5);
  auto wd = random_tensor({6, 4, 3, 3}, 6);
  auto ref = conv_oracle(xd, wd, Tensor<T>{}, 2, 1);
  std::vector<float> xf(xd.data().begin(), xd.data().end()), wf(wd.data().begin(), wd.data().end());
  auto y = ops::conv2d(Tensor<float>::from(xd.shape(), xf), Tensor<float>::from(wd.shape(), wf), Tensor<float>{}, 2, 1);
  for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(y[i], ref[i], 1e-5);
}

TEST(Conv2d, OutputExtentFormula) {
  auto y = ops::conv2d(Tensor<T>::zeros({1, 11, 8}), Tensor<T>::zeros({2, 1, 3, 3}), Tensor<T>{}, 2, 1);
  EXPECT_EQ(y.shape(), (Shape{2, (11 + 2 - 3) / 2 + 1, (8 + 2 - 3) / 2 + 1}));
}

TEST(Conv2d, ChannelMismatchIsDimensionError) {
  EXPECT_THROW(ops::conv2d(Tensor<T>::zeros({2, 4, 4}), Tensor<T>::zeros({1, 3, 3, 3}), Tensor<T>{}, 1, 1),
               DimensionError);
}

TEST(Conv2d, SumGradientMatchesFiniteDifferences) {
  GradCheckFn fn = [](const std::vector<Tensor<T>>& in) {
    return ops::sum(ops::conv2d(in[0], in[1], Tensor<T>{}, 1, 1));
  };
  auto r = grad_check("sum(conv2d)", fn, {random_tensor({2, 6, 6}, 7), random_tensor({3, 2, 3, 3}, 8)});
  EXPECT_TRUE(r.pass) << r.max_rel_error;
}

// --- dense ------------------------------------------------------------------

TEST(Dense, IdentityAndZeroInput) {
  auto x = random_tensor({4}, 9);
  std::vector<T> eye(16, 0.0);
  for (int i = 0; i < 4; ++i) eye[i * 5] = 1.0;
  auto y = ops::dense(x, Tensor<T>::from({4, 4}, eye), Tensor<T>::zeros({4}));
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(y[i], x[i]);

  auto b = random_tensor({3}, 10);
  auto z = ops::dense(Tensor<T>::zeros({4}), random_tensor({3, 4}, 11), b);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(z[i], b[i]);
}

TEST(Dense, MatchesLoopOracle) {
  auto x = random_tensor({4}, 12);
  auto w = random_tensor({3, 4}, 13);
  auto b = random_tensor({3}, 14);
  auto y = ops::dense(x, w, b);
  for (std::size_t j = 0; j < 3; ++j) {
    T acc = b[j];
    for (std::size_t i = 0; i < 4; ++i) acc += w[j * 4 + i] * x[i];
    EXPECT_NEAR(y[j], acc, 1e-12);
  }
}

TEST(Dense, ExtentMismatchIsDimensionError) {
  EXPECT_THROW(ops::dense(Tensor<T>::zeros({5}), Tensor<T>::zeros({3, 4}), Tensor<T>{}), DimensionError);
}

// --- softmax ----------------------------------------------------------------

TEST(Softmax, SymmetricAndShiftInvariant) {
  auto a = ops::softmax(Tensor<T>::from({2}, {0, 0}), 0);
  EXPECT_DOUBLE_EQ(a[0], 0.5);
  EXPECT_DOUBLE_EQ(a[1], 0.5);
  for (T x : {-1000.0, 0.0, 3.5, 1e6}) {
    auto b = ops::softmax(Tensor<T>::full({3}, x), 0);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(b[i], 1.0 / 3.0, 1e-15);
  }
}

TEST(Softmax, MatchesDirectFormula) {
  auto s = ops::softmax(Tensor<T>::from({3}, {1, 2, 3}), 0);
  const T z = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(s[i], std::exp(i + 1.0) / z, 1e-12);
}

TEST(Softmax, RowsSumToOneAlongAnyAxis) {
  auto x = random_tensor({3, 4, 5}, 15, -50, 50);
  for (std::size_t axis = 0; axis < 3; ++axis) {
    auto s = ops::softmax(x, axis);
    const auto& sh = x.shape();
    std::size_t inner = 1;
    for (std::size_t a = axis + 1; a < 3; ++a) inner *= sh[a];
    const std::size_t outer = x.numel() / (inner * sh[axis]);
    for (std::size_t o = 0; o < outer; ++o)
      for (std::size_t i = 0; i < inner; ++i) {
        T total = 0;
        for (std::size_t k = 0; k < sh[axis]; ++k) {
          const T v = s[(o * sh[axis] + k) * inner + i];
          EXPECT_GT(v, 0.0 - 1e-300);
          total += v;
        }
        EXPECT_NEAR(total, 1.0, 1e-12);
      }
  }
}

// --- instance_norm ----------------------------------------------------------

TEST(InstanceNorm, ConstantChannelMapsToZero) {
  auto y = ops::instance_norm(Tensor<T>::full({1, 3, 3}, 4.2), Tensor<T>::full({1}, 1.0), Tensor<T>::zeros({1}));
  for (std::size_t i = 0; i < y.numel(); ++i) EXPECT_EQ(y[i], 0.0);
}

TEST(InstanceNorm, ZeroGammaGivesBeta) {
  auto beta = Tensor<T>::from({2}, {0.3, -1.2});
  auto y = ops::instance_norm(random_tensor({2, 4, 4}, 16), Tensor<T>::zeros({2}), beta);
  for (std::size_t i = 0; i < y.numel(); ++i) EXPECT_DOUBLE_EQ(y[i], beta[i / 16]);
}

TEST(InstanceNorm, PerChannelStatistics) {
  // std ~10 so the eps term shifts the variance by far less than 1e-6.
  auto y = ops::instance_norm(random_tensor({2, 4, 4}, 17, -17, 17), Tensor<T>::full({2}, 1.0), Tensor<T>::zeros({2}));
  for (std::size_t c = 0; c < 2; ++c) {
    T mean = 0, var = 0;
    for (std::size_t i = 0; i < 16; ++i) mean += y[c * 16 + i];
    mean /= 16;
    for (std::size_t i = 0; i < 16; ++i) var += (y[c * 16 + i] - mean) * (y[c * 16 + i] - mean);
    var /= 16;
    EXPECT_LT(std::abs(mean), 1e-10);
    EXPECT_NEAR(var, 1.0, 1e-6);
  }
}

// --- activations ------------------------------------------------------------

TEST(Activation, Definitions) {
  auto x = Tensor<T>::from({2}, {-1, 2});
  auto r = ops::relu(x);
  EXPECT_EQ(r[0], 0.0);
  EXPECT_EQ(r[1], 2.0);
  EXPECT_EQ(ops::tanh(Tensor<T>::scalar(0))[0], 0.0);
  EXPECT_EQ(ops::sigmoid(Tensor<T>::scalar(0))[0], 0.5);
  EXPECT_NEAR(ops::leaky_relu(Tensor<T>::scalar(-2), 0.2)[0], -0.4, 1e-15);
}

TEST(Activation, NanPropagates) {
  const T nan = std::numeric_limits<T>::quiet_NaN();
  for (auto kind : {ops::ActivationKind::kRelu, ops::ActivationKind::kLeakyRelu, ops::ActivationKind::kTanh,
                    ops::ActivationKind::kSigmoid}) {
    EXPECT_TRUE(std::isnan(ops::activation(Tensor<T>::scalar(nan), {kind})[0])) << static_cast<int>(kind);
  }
}

TEST(Activation, ReluSubgradientAtZeroIsZero) {
  auto x = Tensor<T>::from({1}, {0.0});
  x.set_requires_grad(true);
  backward(ops::sum(ops::relu(x)));
  EXPECT_EQ(x.grad()[0], 0.0);
}

TEST(Activation, LeakySlopeMustLieInUnitInterval) {
  EXPECT_THROW(ops::leaky_relu(Tensor<T>::scalar(1), 1.5), ParameterError);
  EXPECT_THROW(ops::leaky_relu(Tensor<T>::scalar(1), 0.0), ParameterError);
}

// --- upsample ---------------------------------------------------------------

TEST(Upsample, FactorOneAndReplication) {
  auto x = random_tensor({2, 3, 3}, 18);
  auto y = ops::upsample_nearest(x, 1);
  for (std::size_t i = 0; i < x.numel(); ++i) EXPECT_EQ(y[i], x[i]);
  auto z = ops::upsample_nearest(Tensor<T>::full({1, 1, 1}, 7.0), 2);
  ASSERT_EQ(z.shape(), (Shape{1, 2, 2}));
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(z[i], 7.0);
}

TEST(Upsample, SumGradientIsFactorSquared) {
  for (std::size_t f : {2, 3}) {
    auto x = random_tensor({2, 3, 2}, 19);
    x.set_requires_grad(true);
    backward(ops::sum(ops::upsample_nearest(x, f)));
    for (T g : x.grad()) EXPECT_DOUBLE_EQ(g, static_cast<T>(f * f));
    GradCheckFn fn = [f](const std::vector<Tensor<T>>& in) { return ops::sum(ops::upsample_nearest(in[0], f)); };
    EXPECT_TRUE(grad_check("upsample", fn, {random_tensor({2, 3, 2}, 20)}).pass);
  }
}

// --- helpers used by the losses ---------------------------------------------

TEST(ReflectPad, MirrorsWithoutEdgeRepeat) {
  auto x = Tensor<T>::from({1, 1, 4}, {1, 2, 3, 4});
  auto y = ops::reflect_pad(Tensor<T>::from({1, 3, 4}, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12}), 2);
  ASSERT_EQ(y.shape(), (Shape{1, 7, 8}));
  // Row 2 of the output is input row 0: 3 2 | 1 2 3 4 | 3 2.
  const T expect[] = {3, 2, 1, 2, 3, 4, 3, 2};
  for (int i = 0; i < 8; ++i) EXPECT_EQ(y[2 * 8 + i], expect[i]);
  EXPECT_THROW(ops::reflect_pad(x, 1), DimensionError);
}

TEST(CrossEntropyRows, MatchesLogSumExp) {
  auto l = Tensor<T>::from({2, 3}, {1, 2, 3, -1, 0, 4});
  const T a = std::log(std::exp(1.0) + std::exp(2.0) + std::exp(3.0)) - 1.0;
  const T b = std::log(std::exp(-1.0) + std::exp(0.0) + std::exp(4.0)) - 4.0;
  EXPECT_NEAR(ops::cross_entropy_rows(l, {0, 2}).item(), (a + b) / 2, 1e-12);
}

TEST(GatherPositions, OutOfRangeIsSamplingError) {
  EXPECT_THROW(ops::gather_positions(Tensor<T>::zeros({2, 3, 3}), {9}), SamplingError);
}

// --- the gradient suite -----------------------------------------------------

TEST(GradientSuite, OpsScopePassesOnThreeSeeds) {
  const auto summary = train::run_gradcheck_suite(train::CheckScope::kOps, 3);
  for (const auto& r : summary.reports) EXPECT_TRUE(r.pass) << r.name << " " << r.max_rel_error;
}

TEST(GradientSuite, TanhChainPasses) {
  for (const auto& c : train::gradcheck_cases(train::CheckScope::kOps)) {
    if (c.name == "tanh_chain") {
      EXPECT_TRUE(c.run(1, {}).pass);
    }
  }
}

TEST(GradientSuite, SignFlippedConvBackwardFailsNearTwo) {
  for (const auto& c : train::gradcheck_cases(train::CheckScope::kOps, true)) {
    if (c.name.rfind("conv2d", 0) != 0) continue;
    const auto r = c.run(1, {});
    EXPECT_FALSE(r.pass);
    EXPECT_NEAR(r.max_rel_error, 2.0, 1e-6) << c.name;
  }
}

TEST(GradientSuite, ReluKinkAvoidedByPerturbation) {
  // Inputs pushed away from 0 keep the stencil on one side of the kink.
  Rng rng(3);
  std::vector<T> v(32);
  for (auto& x : v) x = (rng.bernoulli(0.5) ? 1 : -1) * rng.uniform(0.1, 1.0);
  GradCheckFn fn = [](const std::vector<Tensor<T>>& in) { return ops::relu(in[0]); };
  EXPECT_TRUE(grad_check("relu", fn, {Tensor<T>::from({2, 4, 4}, v)}).pass);
}
