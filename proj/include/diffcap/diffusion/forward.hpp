#pragma once

#include <cmath>

#include "diffcap/core/ops.hpp"
#include "diffcap/core/rng.hpp"
#include "diffcap/core/tensor.hpp"
#include "diffcap/diffusion/schedule.hpp"

namespace diffcap {

// A continuous textual latent at a specific point on the noising trajectory.
// t == 0 is the clean representation.
template <class T>
struct LatentSeq {
  Tensor<T> x;
  int t = 0;
};

template <class T>
Tensor<T> gaussian_like(const Tensor<T>& ref, Rng& rng) {
  Tensor<T> eps(ref.shape());
  for (auto& v : eps.vec()) v = static_cast<T>(rng.gaussian());
  return eps;
}

// One-shot forward noising: x_t = √(ᾱ_t)·x_0 + √(1−ᾱ_t)·ε, ε ~ N(0, I).
template <class T>
LatentSeq<T> q_sample(const LatentSeq<T>& x0, int t, const VarianceSchedule& sched, Rng& rng) {
  check(1 <= t && t <= sched.T(), ErrorKind::range,
        "q_sample: t=" + std::to_string(t) + " outside [1, T=" + std::to_string(sched.T()) + "]");
  const double ab = sched.alpha_bar(t);
  Tensor<T> eps = gaussian_like(x0.x, rng);
  Tensor<T> xt = lincomb(static_cast<T>(std::sqrt(ab)), x0.x, static_cast<T>(std::sqrt(1.0 - ab)), eps);
  return {xt, t};
}

// Single forward step x_t = √(1−β_t)·x_{t−1} + √(β_t)·ε — the brute-force
// composition oracle for q_sample.
template <class T>
LatentSeq<T> q_step(const LatentSeq<T>& x_prev, int t, const VarianceSchedule& sched, Rng& rng) {
  check(1 <= t && t <= sched.T(), ErrorKind::range,
        "q_step: t=" + std::to_string(t) + " outside [1, T=" + std::to_string(sched.T()) + "]");
  const double b = sched.beta(t);
  Tensor<T> eps = gaussian_like(x_prev.x, rng);
  Tensor<T> xt = lincomb(static_cast<T>(std::sqrt(1.0 - b)), x_prev.x, static_cast<T>(std::sqrt(b)), eps);
  return {xt, t};
}

}  // namespace diffcap
