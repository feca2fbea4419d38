#include "adanet/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "adanet/ops.hpp"
#include "adanet/rng.hpp"

namespace adanet {

namespace {

double scalarize(const Tensor<double>& out, const std::vector<double>& w) {
  double acc = 0;
  for (std::size_t i = 0; i < w.size(); ++i) acc += w[i] * out[i];
  return acc;
}

}  // namespace

GradCheckReport grad_check(const std::string& name, const GradCheckFn& fn, std::vector<Tensor<double>> inputs,
                           const GradCheckOptions& options) {
  GradCheckReport report;
  report.name = name;

  for (auto& x : inputs) {
    x.clear_grad();
    x.set_requires_grad(true);
  }
  Tensor<double> out = fn(inputs);
  Rng rng = Rng(options.seed).substream(RngPurpose::kGradCheck);
  std::vector<double> w(out.numel());
  for (auto& v : w) v = rng.uniform(0.5, 1.5) * (rng.bernoulli(0.5) ? 1.0 : -1.0);

  Tensor<double> loss = ops::sum(ops::mul(out, Tensor<double>::from(out.shape(), w)));
  backward(loss);

  NoGradGuard no_grad;
  auto eval = [&] { return scalarize(fn(inputs), w); };
  for (auto& x : inputs) {
    std::vector<double> analytic(x.numel(), 0.0);
    if (x.has_grad()) std::copy(x.grad().begin(), x.grad().end(), analytic.begin());
    // Step relative to the tensor's own magnitude: small-initialized weights
    // feeding a normalization need steps well below their spread.
    double scale = 0.0;
    for (double v : x.data()) scale = std::max(scale, std::abs(v));
    if (scale == 0.0) scale = 1.0;
    const double h = options.relative_step * scale;
    auto data = x.mutable_data();
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double orig = data[i];
      auto at = [&](double k) {
        data[i] = orig + k * h;
        return eval();
      };
      // Sixth-order central stencil.
      const double d1 = at(1) - at(-1), d2 = at(2) - at(-2), d3 = at(3) - at(-3);
      data[i] = orig;
      const double numeric = (45.0 * d1 - 9.0 * d2 + d3) / (60.0 * h);
      const double diff = std::abs(analytic[i] - numeric);
      // Relative error, except that near zero (where roundoff dominates) the
      // denominator is floored so an absolute difference of abs_fallback maps
      // to exactly the tolerance.
      const double floor = options.abs_fallback / options.tolerance;
      const double rel = diff / std::max({std::abs(analytic[i]), std::abs(numeric), floor});
      report.max_rel_error = std::max(report.max_rel_error, rel);
      ++report.checked;
    }
    x.clear_grad();
  }
  report.pass = report.max_rel_error < options.tolerance;
  return report;
}

}  // namespace adanet
