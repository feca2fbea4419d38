#include "adanet/loss/heads.hpp"

#include <string>

#include "adanet/errors.hpp"
#include "adanet/ops.hpp"

namespace adanet::loss {

template <typename T>
Mlp<T>::Mlp(std::size_t in, std::size_t hidden, std::size_t out, Rng& rng, ops::ActivationKind act)
    : in_(in), act_(act) {
  const std::size_t widths[] = {in, hidden, hidden, out};
  for (int i = 0; i < 3; ++i) {
    const std::string n = "fc" + std::to_string(i);
    w_[i] = params_.add_normal(n + ".w", {widths[i + 1], widths[i]}, rng);
    b_[i] = params_.add_constant(n + ".b", {widths[i + 1]}, T(0));
  }
}

template <typename T>
Tensor<T> Mlp<T>::forward(const Tensor<T>& rows) const {
  const ops::Activation act{act_};
  Tensor<T> h = ops::activation(ops::dense(rows, w_[0], b_[0]), act);
  h = ops::activation(ops::dense(h, w_[1], b_[1]), act);
  return ops::dense(h, w_[2], b_[2]);
}

template <typename T>
ProjectionHeads<T>::ProjectionHeads(const std::vector<std::size_t>& tap_channels, Rng& rng, std::size_t width,
                                    ops::ActivationKind act) {
  for (std::size_t m = 0; m < tap_channels.size(); ++m) {
    heads_.emplace_back(tap_channels[m], width, width, rng, act);
    params_.merge("phi" + std::to_string(m) + ".", heads_.back().parameters());
  }
}

template <typename T>
Tensor<T> ProjectionHeads<T>::forward(std::size_t m, const Tensor<T>& rows) const {
  if (m >= heads_.size()) throw DimensionError("projection head index out of range");
  return heads_[m].forward(rows);
}

template <typename T>
FreqHead<T>::FreqHead(std::size_t channels, std::size_t patch, Rng& rng, std::size_t hidden, std::size_t out,
                      ops::ActivationKind act)
    : mlp_(2 * channels * patch * patch, hidden, out, rng, act) {}

template class Mlp<float>;
template class Mlp<double>;
template class ProjectionHeads<float>;
template class ProjectionHeads<double>;
template class FreqHead<float>;
template class FreqHead<double>;

}  // namespace adanet::loss
