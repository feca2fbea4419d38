#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace adanet {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

template <typename T>
struct TensorImpl;

// One edge set of the computation graph: the inputs an op consumed and the
// closure that pushes the output gradient back into them. The closure must
// only touch inputs whose requires_grad flag is set.
template <typename T>
struct Node {
  std::vector<std::shared_ptr<TensorImpl<T>>> inputs;
  std::function<void(std::span<const T> grad_out)> backward;
  const char* op_name = "";
};

template <typename T>
struct TensorImpl {
  Shape shape;
  std::vector<T> data;
  std::vector<T> grad;  // empty == absent
  bool requires_grad = false;
  std::shared_ptr<Node<T>> node;  // null for leaves and for results built without grad

  void ensure_grad() {
    if (grad.empty()) grad.assign(data.size(), T(0));
  }
};

// Dense row-major array with optional gradient slot. Tensor is a handle:
// copies share storage, which is what parameter lists and graph edges need.
// Use clone() for a deep copy.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(std::shared_ptr<TensorImpl<T>> impl) : impl_(std::move(impl)) {}

  static Tensor zeros(Shape shape);
  static Tensor full(Shape shape, T value);
  static Tensor from(Shape shape, std::vector<T> values);
  static Tensor scalar(T value);

  [[nodiscard]] bool defined() const { return static_cast<bool>(impl_); }
  [[nodiscard]] const Shape& shape() const { return impl_->shape; }
  [[nodiscard]] std::size_t rank() const { return impl_->shape.size(); }
  [[nodiscard]] std::size_t dim(std::size_t axis) const { return impl_->shape.at(axis); }
  [[nodiscard]] std::size_t numel() const { return impl_->data.size(); }

  [[nodiscard]] std::span<const T> data() const { return impl_->data; }
  // Writable view. Mutating a tensor that is already part of a live graph
  // invalidates that graph; optimizers only write between steps.
  [[nodiscard]] std::span<T> mutable_data() { return impl_->data; }
  [[nodiscard]] T item() const;
  [[nodiscard]] T operator[](std::size_t i) const { return impl_->data[i]; }

  [[nodiscard]] bool requires_grad() const { return impl_->requires_grad; }
  Tensor& set_requires_grad(bool flag);
  [[nodiscard]] bool has_grad() const { return !impl_->grad.empty(); }
  [[nodiscard]] std::span<const T> grad() const { return impl_->grad; }
  [[nodiscard]] std::span<T> mutable_grad() { return impl_->grad; }
  void zero_grad();
  void clear_grad() { impl_->grad.clear(); impl_->grad.shrink_to_fit(); }

  [[nodiscard]] bool is_leaf() const { return !impl_->node; }
  // Same values, no lineage, requires_grad = false.
  [[nodiscard]] Tensor detach() const;
  // Deep copy of the values (leaf, requires_grad copied).
  [[nodiscard]] Tensor clone() const;

  [[nodiscard]] const std::shared_ptr<TensorImpl<T>>& impl() const { return impl_; }

 private:
  std::shared_ptr<TensorImpl<T>> impl_;
};

// Thread-local switch: with grad mode off, ops build no graph.
bool grad_enabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

// Accumulates d(loss)/d(t) into every reachable tensor with requires_grad.
// Leaves keep their gradients (repeated calls add); intermediate gradients are
// scratch and are released afterwards. Throws ContractError unless `loss` is
// a rank-0 tensor.
template <typename T>
void backward(const Tensor<T>& loss);

// Builds an op result. If grad mode is on and any input requires grad, the
// result gets a node whose closure receives the output gradient.
template <typename T>
Tensor<T> make_result(Shape shape, std::vector<T> values, std::vector<Tensor<T>> inputs,
                      std::function<void(std::span<const T>)> backward_fn, const char* op_name);

// Adds `g` into the gradient of `t` if it requires grad. For op closures.
template <typename T>
void accumulate_grad(const std::shared_ptr<TensorImpl<T>>& t, std::span<const T> g);

}  // namespace adanet
