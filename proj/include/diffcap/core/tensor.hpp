#pragma once

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <memory>
#include <unordered_set>
#include <utility>

#include "diffcap/core/common.hpp"

namespace diffcap {

// Reductions accumulate in 64-bit regardless of the storage scalar.
template <class T>
using acc_t = double;

// Thread-local autodiff switch. Ops record backward edges only while enabled.
inline bool& grad_mode() {
  thread_local bool enabled = true;
  return enabled;
}

struct NoGradGuard {
  bool prev;
  NoGradGuard() : prev(grad_mode()) { grad_mode() = false; }
  ~NoGradGuard() { grad_mode() = prev; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;
};

template <class T>
class Tensor;

template <class T>
struct TensorImpl {
  Shape shape;
  std::vector<T> data;
  std::vector<T> grad;  // same length as data once touched by backward
  bool requires_grad = false;
  // Autodiff edge for the op that produced this value. Leaves keep both empty.
  std::vector<Tensor<T>> parents;
  std::function<void(TensorImpl<T>&)> backward;
};

// Dense row-major tensor with reverse-mode autodiff, value semantics over a
// shared payload. Copies alias the same storage; ops allocate fresh outputs.
template <class T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;

  explicit Tensor(Shape shape, T fill = T(0)) : impl_(std::make_shared<TensorImpl<T>>()) {
    for (int d : shape) check(d > 0, ErrorKind::shape, "tensor extents must be positive, got " + shape_str(shape));
    impl_->shape = std::move(shape);
    impl_->data.assign(static_cast<std::size_t>(diffcap::numel(impl_->shape)), fill);
  }

  static Tensor from(Shape shape, std::vector<T> values) {
    Tensor t(shape);
    check(static_cast<std::int64_t>(values.size()) == diffcap::numel(shape), ErrorKind::shape,
          "value count does not match shape " + shape_str(shape));
    t.impl_->data = std::move(values);
    return t;
  }

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  std::int64_t numel() const { return static_cast<std::int64_t>(impl_->data.size()); }
  int dim(int i) const { return impl_->shape.at(static_cast<std::size_t>(i)); }
  int rank() const { return static_cast<int>(impl_->shape.size()); }

  // 2-D helpers; rank-1 tensors count as a single row.
  int rows() const { return rank() == 2 ? dim(0) : 1; }
  int cols() const { return rank() == 2 ? dim(1) : static_cast<int>(impl_->data.size()); }

  // The handle has shared_ptr semantics: constness of the handle does not
  // propagate to the shared payload, so backward lambdas holding copies can
  // still accumulate gradients.
  T* data() const { return impl_->data.data(); }
  std::vector<T>& vec() const { return impl_->data; }

  T& at(int i) const { return impl_->data[static_cast<std::size_t>(i)]; }
  T& at(int i, int j) const { return impl_->data[static_cast<std::size_t>(i) * cols() + j]; }

  T item() const {
    check(numel() == 1, ErrorKind::shape, "item() on non-scalar tensor " + shape_str(shape()));
    return impl_->data[0];
  }

  bool requires_grad() const { return impl_ && impl_->requires_grad; }
  const Tensor& set_requires_grad(bool v) const {
    impl_->requires_grad = v;
    return *this;
  }

  bool has_grad() const { return impl_ && !impl_->grad.empty(); }
  T* grad() const { return impl_->grad.data(); }
  std::vector<T>& grad_vec() const { return impl_->grad; }

  void ensure_grad() const {
    if (impl_->grad.empty()) impl_->grad.assign(impl_->data.size(), T(0));
  }
  void zero_grad() const {
    if (!impl_->grad.empty()) std::fill(impl_->grad.begin(), impl_->grad.end(), T(0));
  }

  TensorImpl<T>* impl() const { return impl_.get(); }

  // Used by ops to attach the autodiff edge.
  void set_edge(std::vector<Tensor<T>> parents, std::function<void(TensorImpl<T>&)> backward) {
    impl_->parents = std::move(parents);
    impl_->backward = std::move(backward);
  }

  Tensor clone() const {
    Tensor out(shape());
    out.impl_->data = impl_->data;
    return out;
  }

  bool all_finite() const {
    for (T v : impl_->data)
      if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
  }

  // Reverse-mode sweep from a scalar root. `seed` is dL/droot.
  void backward(T seed = T(1)) {
    check(numel() == 1, ErrorKind::shape, "backward() must start from a scalar");
    // Post-order DFS; reversed order visits every consumer before its producer.
    std::vector<TensorImpl<T>*> order;
    std::unordered_set<TensorImpl<T>*> seen;
    std::vector<std::pair<TensorImpl<T>*, std::size_t>> stack;
    stack.emplace_back(impl_.get(), 0);
    seen.insert(impl_.get());
    while (!stack.empty()) {
      auto& [node, next] = stack.back();
      if (next < node->parents.size()) {
        TensorImpl<T>* p = node->parents[next].impl();
        ++next;
        if (p->requires_grad && !seen.count(p)) {
          seen.insert(p);
          stack.emplace_back(p, 0);
        }
      } else {
        order.push_back(node);
        stack.pop_back();
      }
    }
    ensure_grad();
    impl_->grad[0] += seed;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      TensorImpl<T>* node = *it;
      if (!node->backward) continue;
      for (auto& p : node->parents)
        if (p.requires_grad()) p.ensure_grad();
      node->backward(*node);
    }
  }

 private:
  std::shared_ptr<TensorImpl<T>> impl_;
};

template <class T>
inline void check_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  check(a.shape() == b.shape(), ErrorKind::shape,
        std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

}  // namespace diffcap
