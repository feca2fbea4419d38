#pragma once

#include <cstddef>
#include <vector>

#include "adanet/nn/parameters.hpp"
#include "adanet/ops.hpp"
#include "adanet/tensor.hpp"

namespace adanet::loss {

// Three dense layers, in -> hidden -> hidden -> out, with a nonlinearity
// (relu unless a test asks for a smooth one) between them.
template <typename T>
class Mlp {
 public:
  Mlp() = default;
  Mlp(std::size_t in, std::size_t hidden, std::size_t out, Rng& rng,
      ops::ActivationKind act = ops::ActivationKind::kRelu);

  // rows [n x in] -> [n x out]
  Tensor<T> forward(const Tensor<T>& rows) const;

  [[nodiscard]] const nn::ParameterSet<T>& parameters() const { return params_; }
  [[nodiscard]] std::size_t in_features() const { return in_; }

 private:
  std::size_t in_ = 0;
  ops::ActivationKind act_ = ops::ActivationKind::kRelu;
  nn::ParameterSet<T> params_;
  Tensor<T> w_[3], b_[3];
};

// Phi: one MLP per generator feature tap. Head m only ever sees tap m.
template <typename T>
class ProjectionHeads {
 public:
  ProjectionHeads() = default;
  ProjectionHeads(const std::vector<std::size_t>& tap_channels, Rng& rng, std::size_t width = 256,
                  ops::ActivationKind act = ops::ActivationKind::kRelu);

  Tensor<T> forward(std::size_t m, const Tensor<T>& rows) const;

  [[nodiscard]] std::size_t size() const { return heads_.size(); }
  [[nodiscard]] const nn::ParameterSet<T>& parameters() const { return params_; }

 private:
  std::vector<Mlp<T>> heads_;
  nn::ParameterSet<T> params_;
};

// Theta: the single head shared by all frequency patches. Input is the
// flattened [Re; Im] spectrum of a C x p x p patch (2 C p^2 reals).
template <typename T>
class FreqHead {
 public:
  FreqHead() = default;
  FreqHead(std::size_t channels, std::size_t patch, Rng& rng, std::size_t hidden = 1024, std::size_t out = 256,
           ops::ActivationKind act = ops::ActivationKind::kRelu);

  Tensor<T> forward(const Tensor<T>& rows) const { return mlp_.forward(rows); }

  [[nodiscard]] std::size_t in_features() const { return mlp_.in_features(); }
  [[nodiscard]] const nn::ParameterSet<T>& parameters() const { return mlp_.parameters(); }

 private:
  Mlp<T> mlp_;
};

}  // namespace adanet::loss
