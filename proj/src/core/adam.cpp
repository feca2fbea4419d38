#include "adanet/adam.hpp"

#include <cmath>
#include <string>

#include "adanet/errors.hpp"

namespace adanet {

template <typename T>
Adam<T>::Adam(std::vector<Tensor<T>> params, AdamOptions options) : params_(std::move(params)), options_(options) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const auto& p : params_) {
    m_.push_back(Tensor<T>::zeros(p.shape()));
    v_.push_back(Tensor<T>::zeros(p.shape()));
  }
}

template <typename T>
void Adam<T>::step() {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (!params_[i].has_grad()) {
      throw ContractError("adam: parameter " + std::to_string(i) + " " + shape_str(params_[i].shape()) +
                          " has no gradient");
    }
  }
  ++t_;
  const double b1 = options_.beta1, b2 = options_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  const T lr = static_cast<T>(options_.learning_rate);
  const T eps = static_cast<T>(options_.eps);
  const T tb1 = static_cast<T>(b1), tb2 = static_cast<T>(b2);
  const T inv_c1 = static_cast<T>(1.0 / c1), inv_c2 = static_cast<T>(1.0 / c2);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto p = params_[i].mutable_data();
    auto g = params_[i].grad();
    auto m = m_[i].mutable_data();
    auto v = v_[i].mutable_data();
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = tb1 * m[j] + (T(1) - tb1) * g[j];
      v[j] = tb2 * v[j] + (T(1) - tb2) * g[j] * g[j];
      const T mhat = m[j] * inv_c1;
      const T vhat = v[j] * inv_c2;
      p[j] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
    params_[i].clear_grad();
  }
}

template class Adam<float>;
template class Adam<double>;

}  // namespace adanet
