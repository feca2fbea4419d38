#include "adanet/nn/parameters.hpp"

#include "adanet/errors.hpp"

namespace adanet::nn {

template <typename T>
Tensor<T> ParameterSet<T>::add(const std::string& name, Tensor<T> value) {
  if (contains(name)) throw ContractError("duplicate parameter name '" + name + "'");
  value.set_requires_grad(true);
  entries_.emplace_back(name, value);
  return value;
}

template <typename T>
Tensor<T> ParameterSet<T>::add_normal(const std::string& name, Shape shape, Rng& rng, double stddev) {
  std::vector<T> values(shape_numel(shape));
  for (auto& v : values) v = static_cast<T>(rng.normal(0.0, stddev));
  return add(name, Tensor<T>::from(std::move(shape), std::move(values)));
}

template <typename T>
Tensor<T> ParameterSet<T>::add_constant(const std::string& name, Shape shape, T value) {
  return add(name, Tensor<T>::full(std::move(shape), value));
}

template <typename T>
void ParameterSet<T>::merge(const std::string& prefix, const ParameterSet& other) {
  for (const auto& [name, t] : other.entries_) add(prefix + name, t);
}

template <typename T>
const Tensor<T>& ParameterSet<T>::get(const std::string& name) const {
  for (const auto& [n, t] : entries_) {
    if (n == name) return t;
  }
  throw ContractError("no parameter named '" + name + "'");
}

template <typename T>
bool ParameterSet<T>::contains(const std::string& name) const {
  for (const auto& e : entries_) {
    if (e.first == name) return true;
  }
  return false;
}

template <typename T>
std::size_t ParameterSet<T>::scalar_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.second.numel();
  return n;
}

template <typename T>
std::vector<Tensor<T>> ParameterSet<T>::tensors() const {
  std::vector<Tensor<T>> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.second);
  return out;
}

template <typename T>
void ParameterSet<T>::clear_grads() const {
  for (auto e : entries_) e.second.clear_grad();
}

template class ParameterSet<float>;
template class ParameterSet<double>;

}  // namespace adanet::nn
