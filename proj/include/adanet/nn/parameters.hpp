#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "adanet/rng.hpp"
#include "adanet/tensor.hpp"

namespace adanet::nn {

// Ordered, named parameter collection. Names are unique and stable so that
// checkpoints can be matched by name.
template <typename T>
class ParameterSet {
 public:
  Tensor<T> add(const std::string& name, Tensor<T> value);
  Tensor<T> add_normal(const std::string& name, Shape shape, Rng& rng, double stddev = 0.02);
  Tensor<T> add_constant(const std::string& name, Shape shape, T value);

  // Appends every entry of `other` with `prefix` prepended to its name.
  void merge(const std::string& prefix, const ParameterSet& other);

  [[nodiscard]] const Tensor<T>& get(const std::string& name) const;
  [[nodiscard]] bool contains(const std::string& name) const;
  [[nodiscard]] std::size_t size() const { return entries_.size(); }
  [[nodiscard]] std::size_t scalar_count() const;
  [[nodiscard]] const std::vector<std::pair<std::string, Tensor<T>>>& entries() const { return entries_; }
  [[nodiscard]] std::vector<Tensor<T>> tensors() const;

  void clear_grads() const;

 private:
  std::vector<std::pair<std::string, Tensor<T>>> entries_;
};

}  // namespace adanet::nn
