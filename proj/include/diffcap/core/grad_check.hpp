#pragma once

#include <cmath>
#include <functional>

#include "diffcap/core/tensor.hpp"

namespace diffcap {

// Finite-difference oracle for reverse-mode gradients. `f` must be a pure
// scalar function re-evaluating the same graph over the shared handle `x`
// (any parameters it closes over stay fixed). Returns the max over
// coordinates of |analytic − central difference| / (|analytic| + |fd| + 1e-12).
template <class T>
double grad_check(const std::function<Tensor<T>()>& f, Tensor<T> x, double step) {
  const bool was_tracked = x.requires_grad();
  x.set_requires_grad(true);
  x.ensure_grad();
  x.zero_grad();
  Tensor<T> y = f();
  y.backward();
  std::vector<T> analytic = x.grad_vec();

  double worst = 0.0;
  {
    NoGradGuard ng;
    for (std::int64_t i = 0; i < x.numel(); ++i) {
      const T orig = x.at(static_cast<int>(i));
      x.at(static_cast<int>(i)) = orig + static_cast<T>(step);
      const double fp = static_cast<double>(f().item());
      x.at(static_cast<int>(i)) = orig - static_cast<T>(step);
      const double fm = static_cast<double>(f().item());
      x.at(static_cast<int>(i)) = orig;
      const double fd = (fp - fm) / (2.0 * step);
      const double an = static_cast<double>(analytic[static_cast<std::size_t>(i)]);
      const double err = std::abs(an - fd) / (std::abs(an) + std::abs(fd) + 1e-12);
      worst = std::max(worst, err);
    }
  }
  x.set_requires_grad(was_tracked);
  return worst;
}

}  // namespace diffcap
