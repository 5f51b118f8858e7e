#pragma once

#include <cmath>
#include <vector>

#include "diffcap/core/ops.hpp"

namespace diffcap {

// Projection weights for one multi-head attention layer. Output projection
// may be zero-initialized so a residual branch starts as a no-op.
template <class T>
struct MhaParams {
  Tensor<T> wq, bq, wk, bk, wv, bv, wo, bo;

  static MhaParams init(int d_model, Rng& rng, bool zero_out_proj) {
    MhaParams p;
    const double std = 1.0 / std::sqrt(static_cast<double>(d_model));
    p.wq = randn<T>({d_model, d_model}, rng, std);
    p.wk = randn<T>({d_model, d_model}, rng, std);
    p.wv = randn<T>({d_model, d_model}, rng, std);
    p.wo = zero_out_proj ? Tensor<T>({d_model, d_model}) : randn<T>({d_model, d_model}, rng, std);
    p.bq = Tensor<T>({d_model});
    p.bk = Tensor<T>({d_model});
    p.bv = Tensor<T>({d_model});
    p.bo = Tensor<T>({d_model});
    return p;
  }
};

// Scaled dot-product multi-head attention. Queries come from `q_in`; keys and
// values from `kv_in` (pass the same tensor for self-attention). Each head
// attends with scale 1/√d_head; heads are concatenated and output-projected.
// `causal` masks scores so position i only attends to positions ≤ i.
template <class T>
Tensor<T> mha(const Tensor<T>& q_in, const Tensor<T>& kv_in, int heads, const MhaParams<T>& p,
              bool causal = false) {
  check(q_in.rank() == 2 && kv_in.rank() == 2, ErrorKind::shape, "mha: rank-2 inputs required");
  const int d_model = q_in.dim(1);
  check(kv_in.dim(1) == d_model, ErrorKind::shape, "mha: query and key/value widths differ");
  check(heads >= 1 && d_model % heads == 0, ErrorKind::config,
        "mha: model width " + std::to_string(d_model) + " not divisible by " + std::to_string(heads) + " heads");
  const int d_head = d_model / heads;
  const T att_scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(d_head)));

  Tensor<T> q = linear(q_in, p.wq, p.bq);
  Tensor<T> k = linear(kv_in, p.wk, p.bk);
  Tensor<T> v = linear(kv_in, p.wv, p.bv);

  std::vector<Tensor<T>> ctx;
  ctx.reserve(static_cast<std::size_t>(heads));
  for (int h = 0; h < heads; ++h) {
    const int c0 = h * d_head, c1 = c0 + d_head;
    Tensor<T> qh = slice_cols(q, c0, c1);
    Tensor<T> kh = slice_cols(k, c0, c1);
    Tensor<T> vh = slice_cols(v, c0, c1);
    Tensor<T> scores = scale(matmul_nt(qh, kh), att_scale);
    if (causal) scores = add_causal_mask(scores);
    Tensor<T> attn = softmax(scores, 1);
    ctx.push_back(matmul(attn, vh));
  }
  return linear(concat_cols(ctx), p.wo, p.bo);
}

}  // namespace diffcap
