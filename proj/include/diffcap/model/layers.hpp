#pragma once

#include <cmath>
#include <string>

#include "diffcap/core/attention.hpp"
#include "diffcap/core/ops.hpp"
#include "diffcap/model/params.hpp"

namespace diffcap {

template <class T>
struct LayerNormParams {
  Tensor<T> gain, bias;

  static LayerNormParams init(int d) {
    LayerNormParams p;
    p.gain = Tensor<T>({d}, T(1));
    p.bias = Tensor<T>({d}, T(0));
    return p;
  }

  Tensor<T> forward(const Tensor<T>& x) const { return layernorm(x, gain, bias); }

  void collect(const std::string& prefix, NamedParams<T>& out) const {
    out.add(prefix + ".g", gain);
    out.add(prefix + ".b", bias);
  }
};

// Position-wise feed-forward: x -> gelu(x·W1 + b1)·W2 + b2. The second
// projection can start at zero so the residual branch is a no-op initially.
template <class T>
struct FfnParams {
  Tensor<T> w1, b1, w2, b2;

  static FfnParams init(int d, int mult, Rng& rng, bool zero_out_proj) {
    FfnParams p;
    const int d_h = d * mult;
    p.w1 = randn<T>({d, d_h}, rng, 1.0 / std::sqrt(static_cast<double>(d)));
    p.b1 = Tensor<T>({d_h});
    p.w2 = zero_out_proj ? Tensor<T>({d_h, d})
                         : randn<T>({d_h, d}, rng, 1.0 / std::sqrt(static_cast<double>(d_h)));
    p.b2 = Tensor<T>({d});
    return p;
  }

  Tensor<T> forward(const Tensor<T>& x) const { return linear(gelu(linear(x, w1, b1)), w2, b2); }

  void collect(const std::string& prefix, NamedParams<T>& out) const {
    out.add(prefix + ".w1", w1);
    out.add(prefix + ".b1", b1);
    out.add(prefix + ".w2", w2);
    out.add(prefix + ".b2", b2);
  }
};

template <class T>
inline void collect_mha(const std::string& prefix, const MhaParams<T>& p, NamedParams<T>& out) {
  out.add(prefix + ".wq", p.wq);
  out.add(prefix + ".bq", p.bq);
  out.add(prefix + ".wk", p.wk);
  out.add(prefix + ".bk", p.bk);
  out.add(prefix + ".wv", p.wv);
  out.add(prefix + ".bv", p.bv);
  out.add(prefix + ".wo", p.wo);
  out.add(prefix + ".bo", p.bo);
}

}  // namespace diffcap
