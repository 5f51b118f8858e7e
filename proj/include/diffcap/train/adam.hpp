#pragma once

#include <cmath>
#include <vector>

#include "diffcap/model/params.hpp"

namespace diffcap {

// Adam with bias correction and global-norm gradient clipping. Moments are
// kept in double regardless of the parameter scalar so long runs stay stable.
// Update order is the registration order — fully deterministic.
template <class T>
class Adam {
 public:
  explicit Adam(double lr, double clip = 0.0, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), clip_(clip), beta1_(beta1), beta2_(beta2), eps_(eps) {
    check(lr > 0.0, ErrorKind::config, "adam: lr must be positive");
    check(clip >= 0.0, ErrorKind::config, "adam: clip must be >= 0");
    check(0.0 <= beta1 && beta1 < 1.0 && 0.0 <= beta2 && beta2 < 1.0, ErrorKind::config,
          "adam: betas must lie in [0, 1)");
  }

  void step(const NamedParams<T>& params) {
    if (m_.empty()) {
      m_.resize(params.size());
      v_.resize(params.size());
      for (std::size_t i = 0; i < params.size(); ++i) {
        m_[i].assign(static_cast<std::size_t>(params.items[i].second.numel()), 0.0);
        v_[i].assign(static_cast<std::size_t>(params.items[i].second.numel()), 0.0);
      }
    }
    check(m_.size() == params.size(), ErrorKind::config, "adam: parameter set changed between steps");

    double norm_sq = 0.0;
    for (const auto& it : params.items) {
      it.second.ensure_grad();
      const T* g = it.second.grad();
      for (std::int64_t j = 0; j < it.second.numel(); ++j) {
        const double gj = static_cast<double>(g[j]);
        norm_sq += gj * gj;
      }
    }
    last_norm_ = std::sqrt(norm_sq);
    const double scale = (clip_ > 0.0 && last_norm_ > clip_) ? clip_ / last_norm_ : 1.0;

    ++steps_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(steps_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(steps_));

    for (std::size_t i = 0; i < params.size(); ++i) {
      const Tensor<T>& p = params.items[i].second;
      const T* g = p.grad();
      T* w = p.data();
      for (std::int64_t j = 0; j < p.numel(); ++j) {
        const double gj = static_cast<double>(g[j]) * scale;
        double& m = m_[i][static_cast<std::size_t>(j)];
        double& v = v_[i][static_cast<std::size_t>(j)];
        m = beta1_ * m + (1.0 - beta1_) * gj;
        v = beta2_ * v + (1.0 - beta2_) * gj * gj;
        const double update = lr_ * (m / bc1) / (std::sqrt(v / bc2) + eps_);
        w[j] = static_cast<T>(static_cast<double>(w[j]) - update);
      }
    }
  }

  double last_grad_norm() const { return last_norm_; }
  std::int64_t steps() const { return steps_; }
  double lr() const { return lr_; }

  // Moment access for checkpointing; empty until the first step.
  const std::vector<std::vector<double>>& moments_m() const { return m_; }
  const std::vector<std::vector<double>>& moments_v() const { return v_; }

  // Continue a run from persisted state. Per-tensor lengths must match the
  // parameter set this optimizer will step.
  void restore(std::int64_t steps, std::vector<std::vector<double>> m,
               std::vector<std::vector<double>> v, const NamedParams<T>& params) {
    check(steps >= 0, ErrorKind::io, "adam: negative step count in restored state");
    check(m.size() == params.size() && v.size() == params.size(), ErrorKind::io,
          "adam: restored moment count does not match parameter count");
    for (std::size_t i = 0; i < params.size(); ++i) {
      const auto want = static_cast<std::size_t>(params.items[i].second.numel());
      check(m[i].size() == want && v[i].size() == want, ErrorKind::io,
            "adam: restored moments for '" + params.items[i].first + "' have the wrong length");
    }
    steps_ = steps;
    m_ = std::move(m);
    v_ = std::move(v);
  }

 private:
  double lr_, clip_, beta1_, beta2_, eps_;
  std::int64_t steps_ = 0;
  double last_norm_ = 0.0;
  std::vector<std::vector<double>> m_, v_;
};

}  // namespace diffcap
