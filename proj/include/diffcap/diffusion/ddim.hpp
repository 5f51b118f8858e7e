#pragma once

#include <cmath>
#include <vector>

#include "diffcap/diffusion/forward.hpp"

namespace diffcap {

// Reverse-sampling plan: a strictly increasing timestep subsequence τ of
// 1..T walked from the back, plus the stochasticity knob η (0 ⇒ the reverse
// process is deterministic).
struct DdimPlan {
  std::vector<int> tau;
  double eta = 0.0;
};

// Evenly spaced subsequence τ_i = round(i·T/n), i = 1..n; the largest element
// is always T.
inline DdimPlan make_plan(int n_steps, int T, double eta = 0.0) {
  check(1 <= n_steps && n_steps <= T, ErrorKind::config,
        "plan: n_steps=" + std::to_string(n_steps) + " outside [1, T=" + std::to_string(T) + "]");
  check(eta >= 0.0, ErrorKind::config, "plan: eta must be >= 0");
  DdimPlan plan;
  plan.eta = eta;
  plan.tau.reserve(static_cast<std::size_t>(n_steps));
  for (int i = 1; i <= n_steps; ++i)
    plan.tau.push_back(static_cast<int>(std::llround(static_cast<double>(i) * T / n_steps)));
  for (std::size_t i = 1; i < plan.tau.size(); ++i)
    check(plan.tau[i - 1] < plan.tau[i], ErrorKind::config, "plan: subsequence not strictly increasing");
  check(plan.tau.front() >= 1 && plan.tau.back() == T, ErrorKind::config, "plan: subsequence out of bounds");
  return plan;
}

// One reverse jump t_from → t_to given the model's clean-sequence prediction:
//   x_to = √(ᾱ_to)·x̂0 + √(1−ᾱ_to−σ²)·(x_from − √(ᾱ_from)·x̂0)/√(1−ᾱ_from) + σ·ε
// with σ² = η·(1−ᾱ_to)/(1−ᾱ_from)·β_from. No noise is drawn when σ = 0, so
// the deterministic path never consumes RNG state.
template <class T>
LatentSeq<T> ddim_step(const LatentSeq<T>& x_from, const Tensor<T>& x0_hat, int t_from, int t_to,
                       const VarianceSchedule& sched, const DdimPlan& plan, Rng& rng) {
  check(0 <= t_to && t_to < t_from, ErrorKind::range, "ddim_step: need 0 <= t_to < t_from");
  check(t_from <= sched.T(), ErrorKind::range, "ddim_step: t_from beyond schedule");
  check(x0_hat.shape() == x_from.x.shape(), ErrorKind::shape, "ddim_step: prediction shape mismatch");

  const double ab_from = sched.alpha_bar(t_from);
  const double ab_to = sched.alpha_bar(t_to);
  const double sigma2 = plan.eta * (1.0 - ab_to) / (1.0 - ab_from) * sched.beta(t_from);
  const double radicand = 1.0 - ab_to - sigma2;
  if (radicand < 0.0) {
    fail(ErrorKind::numeric,
         "ddim_step: direction coefficient radicand " + std::to_string(radicand) + " < 0 at t_from=" +
             std::to_string(t_from) + ", t_to=" + std::to_string(t_to) + " (alpha_bar_from=" +
             std::to_string(ab_from) + ", alpha_bar_to=" + std::to_string(ab_to) + ", sigma^2=" +
             std::to_string(sigma2) + "); lower eta or use a coarser plan");
  }

  // direction term: the noise implied by x_from under the predicted x̂0
  const double inv = 1.0 / std::sqrt(1.0 - ab_from);
  Tensor<T> dir = lincomb(static_cast<T>(inv), x_from.x, static_cast<T>(-std::sqrt(ab_from) * inv), x0_hat);
  Tensor<T> out =
      lincomb(static_cast<T>(std::sqrt(ab_to)), x0_hat, static_cast<T>(std::sqrt(radicand)), dir);
  if (sigma2 > 0.0) {
    Tensor<T> eps = gaussian_like(out, rng);
    out = lincomb(T(1), out, static_cast<T>(std::sqrt(sigma2)), eps);
  }
  return {out, t_to};
}

}  // namespace diffcap
