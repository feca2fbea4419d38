#include <gtest/gtest.h>

#include <cmath>

#include "adanet/adam.hpp"
#include "adanet/errors.hpp"
#include "adanet/gradcheck.hpp"
#include "adanet/ops.hpp"

using namespace adanet;

namespace {

// Independent scalar Adam used as the reference trace.
struct ScalarAdam {
  double lr, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  double m = 0, v = 0;
  int t = 0;
  double step(double p, double g) {
    ++t;
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const double mh = m / (1 - std::pow(b1, t));
    const double vh = v / (1 - std::pow(b2, t));
    return p - lr * mh / (std::sqrt(vh) + eps);
  }
};

void set_grad(Tensor<double>& p, double g) {
  p.set_requires_grad(true);
  backward(ops::sum(ops::mul_scalar(p, g)));
}

}  // namespace

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
  auto p = Tensor<double>::from({3}, {1, -2, 3});
  Adam<double> adam({p}, {});
  set_grad(p, 0.0);
  adam.step();
  EXPECT_EQ(adam.t(), 1u);
  EXPECT_EQ(p[0], 1.0);
  EXPECT_EQ(p[1], -2.0);
  EXPECT_EQ(p[2], 3.0);
  EXPECT_FALSE(p.has_grad());
}

TEST(Adam, SingleStepMatchesHandEvaluation) {
  auto p = Tensor<double>::scalar(0.5);
  AdamOptions o;
  o.learning_rate = 1e-3;
  Adam<double> adam({p}, o);
  set_grad(p, 3.0);
  adam.step();
  // m_hat = 3, v_hat = 9 after bias correction: step = lr * 3 / (3 + eps).
  const double expected = 1e-3 * 3.0 / (3.0 + 1e-8);
  EXPECT_NEAR(0.5 - p[0], expected, 1e-9);
  EXPECT_NEAR(0.5 - p[0], 9.9999e-4, 1e-8);
}

TEST(Adam, TwoStepsMatchScalarReference) {
  auto p = Tensor<double>::scalar(1.0);
  AdamOptions o;
  o.learning_rate = 0.01;
  Adam<double> adam({p}, o);
  ScalarAdam ref{0.01};
  double q = 1.0;
  for (int k = 0; k < 2; ++k) {
    set_grad(p, 2.5);
    adam.step();
    q = ref.step(q, 2.5);
    EXPECT_NEAR(p[0], q, 1e-15);
  }
  EXPECT_EQ(adam.t(), 2u);
}

TEST(Adam, MissingGradientIsContractError) {
  auto p = Tensor<double>::scalar(1.0);
  p.set_requires_grad(true);
  Adam<double> adam({p}, {});
  EXPECT_THROW(adam.step(), ContractError);
}

TEST(Adam, MomentShapesMatchParameters) {
  auto a = Tensor<float>::zeros({2, 3});
  auto b = Tensor<float>::zeros({4});
  Adam<float> adam({a, b}, {});
  EXPECT_EQ(adam.first_moments()[0].shape(), a.shape());
  EXPECT_EQ(adam.second_moments()[1].shape(), b.shape());
}

TEST(GradCheck, ReportsFailureInsteadOfThrowing) {
  GradCheckFn broken = [](const std::vector<Tensor<double>>& in) {
    return ops::testing::negate_grad(ops::square(in[0]));
  };
  auto r = grad_check("broken", broken, {Tensor<double>::from({3}, {0.5, -1, 2})});
  EXPECT_FALSE(r.pass);
  EXPECT_NEAR(r.max_rel_error, 2.0, 1e-9);
  EXPECT_EQ(r.checked, 3u);
}

TEST(GradCheck, RestoresInputs) {
  auto x = Tensor<double>::from({2}, {0.25, -0.75});
  GradCheckFn fn = [](const std::vector<Tensor<double>>& in) { return ops::exp(in[0]); };
  EXPECT_TRUE(grad_check("exp", fn, {x}).pass);
  EXPECT_EQ(x[0], 0.25);
  EXPECT_EQ(x[1], -0.75);
}

TEST(GradCheck, AbsoluteFallbackNearZero) {
  // d/dx of x^3 at 0 is 0; the stencil's tiny roundoff must not count as a
  // relative error of 1.
  GradCheckFn fn = [](const std::vector<Tensor<double>>& in) { return ops::mul(ops::square(in[0]), in[0]); };
  EXPECT_TRUE(grad_check("cube", fn, {Tensor<double>::from({2}, {0.0, 1e-9})}).pass);
}
