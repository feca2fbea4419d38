#include "adanet/tensor.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_set>
#include <utility>

#include "adanet/errors.hpp"

namespace adanet {

std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_str(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

namespace {

thread_local bool g_grad_enabled = true;

template <typename T>
std::shared_ptr<TensorImpl<T>> new_impl(Shape shape, std::vector<T> values) {
  for (auto e : shape) {
    if (e == 0) throw DimensionError("tensor extents must be positive, got " + shape_str(shape));
  }
  if (shape_numel(shape) != values.size()) {
    throw DimensionError("shape " + shape_str(shape) + " does not match " + std::to_string(values.size()) +
                         " values");
  }
  auto impl = std::make_shared<TensorImpl<T>>();
  impl->shape = std::move(shape);
  impl->data = std::move(values);
  return impl;
}

}  // namespace

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

template <typename T>
Tensor<T> Tensor<T>::zeros(Shape shape) {
  const auto n = shape_numel(shape);
  return Tensor(new_impl<T>(std::move(shape), std::vector<T>(n, T(0))));
}

template <typename T>
Tensor<T> Tensor<T>::full(Shape shape, T value) {
  const auto n = shape_numel(shape);
  return Tensor(new_impl<T>(std::move(shape), std::vector<T>(n, value)));
}

template <typename T>
Tensor<T> Tensor<T>::from(Shape shape, std::vector<T> values) {
  return Tensor(new_impl<T>(std::move(shape), std::move(values)));
}

template <typename T>
Tensor<T> Tensor<T>::scalar(T value) {
  return Tensor(new_impl<T>(Shape{}, std::vector<T>{value}));
}

template <typename T>
T Tensor<T>::item() const {
  if (numel() != 1) throw DimensionError("item() on tensor of shape " + shape_str(shape()));
  return impl_->data[0];
}

template <typename T>
Tensor<T>& Tensor<T>::set_requires_grad(bool flag) {
  if (!is_leaf() && !flag) throw ContractError("cannot clear requires_grad on a non-leaf tensor");
  impl_->requires_grad = flag;
  return *this;
}

template <typename T>
void Tensor<T>::zero_grad() {
  std::fill(impl_->grad.begin(), impl_->grad.end(), T(0));
}

template <typename T>
Tensor<T> Tensor<T>::detach() const {
  auto impl = std::make_shared<TensorImpl<T>>();
  impl->shape = impl_->shape;
  impl->data = impl_->data;
  return Tensor(std::move(impl));
}

template <typename T>
Tensor<T> Tensor<T>::clone() const {
  auto impl = std::make_shared<TensorImpl<T>>();
  impl->shape = impl_->shape;
  impl->data = impl_->data;
  impl->requires_grad = impl_->requires_grad;
  return Tensor(std::move(impl));
}

template <typename T>
Tensor<T> make_result(Shape shape, std::vector<T> values, std::vector<Tensor<T>> inputs,
                      std::function<void(std::span<const T>)> backward_fn, const char* op_name) {
  auto impl = new_impl<T>(std::move(shape), std::move(values));
  if (!g_grad_enabled) return Tensor<T>(std::move(impl));
  const bool any = std::any_of(inputs.begin(), inputs.end(),
                               [](const Tensor<T>& t) { return t.defined() && t.requires_grad(); });
  if (!any) return Tensor<T>(std::move(impl));
  auto node = std::make_shared<Node<T>>();
  node->inputs.reserve(inputs.size());
  for (auto& t : inputs) {
    if (t.defined()) node->inputs.push_back(t.impl());
  }
  node->backward = std::move(backward_fn);
  node->op_name = op_name;
  impl->requires_grad = true;
  impl->node = std::move(node);
  return Tensor<T>(std::move(impl));
}

template <typename T>
void accumulate_grad(const std::shared_ptr<TensorImpl<T>>& t, std::span<const T> g) {
  if (!t->requires_grad) return;
  t->ensure_grad();
  T* dst = t->grad.data();
  const std::size_t n = g.size();
  for (std::size_t i = 0; i < n; ++i) dst[i] += g[i];
}

template <typename T>
void backward(const Tensor<T>& loss) {
  if (!loss.defined() || loss.rank() != 0) {
    throw ContractError("backward() requires a rank-0 loss, got shape " +
                        (loss.defined() ? shape_str(loss.shape()) : std::string("<undefined>")));
  }
  if (!loss.requires_grad()) return;

  // Iterative post-order DFS gives a topological order (inputs before users).
  using ImplPtr = TensorImpl<T>*;
  std::vector<ImplPtr> order;
  std::unordered_set<ImplPtr> visited;
  std::vector<std::pair<ImplPtr, std::size_t>> stack;
  stack.emplace_back(loss.impl().get(), 0);
  visited.insert(loss.impl().get());
  while (!stack.empty()) {
    auto& [impl, next] = stack.back();
    if (impl->node && next < impl->node->inputs.size()) {
      ImplPtr child = impl->node->inputs[next++].get();
      if (child->requires_grad && visited.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(impl);
      stack.pop_back();
    }
  }

  // Interior gradients start from zero on every call; leaves accumulate.
  for (ImplPtr impl : order) {
    if (impl->node) {
      impl->grad.assign(impl->data.size(), T(0));
    } else {
      impl->ensure_grad();
    }
  }
  loss.impl()->grad[0] += T(1);

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    ImplPtr impl = *it;
    if (!impl->node) continue;
    impl->node->backward(std::span<const T>(impl->grad));
  }
  for (ImplPtr impl : order) {
    if (impl->node) {
      impl->grad.clear();
      impl->grad.shrink_to_fit();
    }
  }
}

template class Tensor<float>;
template class Tensor<double>;
template void backward<float>(const Tensor<float>&);
template void backward<double>(const Tensor<double>&);
template Tensor<float> make_result<float>(Shape, std::vector<float>, std::vector<Tensor<float>>,
                                          std::function<void(std::span<const float>)>, const char*);
template Tensor<double> make_result<double>(Shape, std::vector<double>, std::vector<Tensor<double>>,
                                            std::function<void(std::span<const double>)>, const char*);
template void accumulate_grad<float>(const std::shared_ptr<TensorImpl<float>>&, std::span<const float>);
template void accumulate_grad<double>(const std::shared_ptr<TensorImpl<double>>&, std::span<const double>);

}  // namespace adanet
