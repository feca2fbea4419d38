#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "adanet/tensor.hpp"

namespace adanet {

struct GradCheckOptions {
  double tolerance = 1e-4;
  double abs_fallback = 1e-8;  // absolute error accepted near zero
  // Finite-difference step as a fraction of the input tensor's max |x| (1 if all zero).
  double relative_step = 1e-3;
  std::uint64_t seed = 0;  // for the output projection weights
};

struct GradCheckReport {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  bool pass = true;
};

using GradCheckFn = std::function<Tensor<double>(const std::vector<Tensor<double>>&)>;

// Compares the analytic gradient of sum(w * fn(inputs)), with fixed random
// weights w, against a central-difference estimate for every input element.
// Inputs are perturbed in place and restored. A failure is reported, not thrown.
GradCheckReport grad_check(const std::string& name, const GradCheckFn& fn, std::vector<Tensor<double>> inputs,
                           const GradCheckOptions& options = {});

}  // namespace adanet
