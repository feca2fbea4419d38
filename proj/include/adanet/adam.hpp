#pragma once

#include <cstdint>
#include <vector>

#include "adanet/tensor.hpp"

namespace adanet {

struct AdamOptions {
  double learning_rate = 2e-6;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam over a fixed parameter list. Moments are stored as
// tensors so checkpoints can serialize them with the parameter table.
template <typename T>
class Adam {
 public:
  Adam() = default;
  Adam(std::vector<Tensor<T>> params, AdamOptions options);

  // Throws ContractError if any parameter has no gradient. Clears gradients.
  void step();

  [[nodiscard]] const AdamOptions& options() const { return options_; }
  void set_learning_rate(double lr) { options_.learning_rate = lr; }
  [[nodiscard]] std::uint64_t t() const { return t_; }
  void set_t(std::uint64_t t) { t_ = t; }
  [[nodiscard]] const std::vector<Tensor<T>>& params() const { return params_; }
  [[nodiscard]] std::vector<Tensor<T>>& first_moments() { return m_; }
  [[nodiscard]] std::vector<Tensor<T>>& second_moments() { return v_; }
  [[nodiscard]] const std::vector<Tensor<T>>& first_moments() const { return m_; }
  [[nodiscard]] const std::vector<Tensor<T>>& second_moments() const { return v_; }

 private:
  std::vector<Tensor<T>> params_;
  std::vector<Tensor<T>> m_;
  std::vector<Tensor<T>> v_;
  AdamOptions options_;
  std::uint64_t t_ = 0;
};

}  // namespace adanet
