#pragma once

#include <string>
#include <vector>

#include "diffcap/core/attention.hpp"
#include "diffcap/core/ops.hpp"
#include "diffcap/model/config.hpp"
#include "diffcap/model/layers.hpp"
#include "diffcap/model/params.hpp"
#include "diffcap/model/timestep.hpp"

namespace diffcap {

// One pre-norm denoiser block over the latent canvas h (N_v x d_v), given the
// projected visual rows and the timestep vector:
//
//   h'  = h  + DropPath(SelfAttn(LN(h + t_vec)))
//   h'' = h' + DropPath(CrossAttn(LN(h'), visual rows))
//   out = h'' + DropPath(FFN(LN(h'')))
//
// The timestep vector joins before the first normalization of every block.
// Residual-branch output projections start at zero, so a freshly initialized
// block is exactly the identity on h.
template <class T>
struct DenoiserBlock {
  LayerNormParams<T> ln1, ln2, ln3;
  MhaParams<T> self_attn, cross_attn;
  FfnParams<T> ffn;

  static DenoiserBlock init(int d_v, int ffn_mult, Rng& rng) {
    DenoiserBlock b;
    b.ln1 = LayerNormParams<T>::init(d_v);
    b.self_attn = MhaParams<T>::init(d_v, rng, /*zero_out_proj=*/true);
    b.ln2 = LayerNormParams<T>::init(d_v);
    b.cross_attn = MhaParams<T>::init(d_v, rng, /*zero_out_proj=*/true);
    b.ln3 = LayerNormParams<T>::init(d_v);
    b.ffn = FfnParams<T>::init(d_v, ffn_mult, rng, /*zero_out_proj=*/true);
    return b;
  }

  Tensor<T> forward(const Tensor<T>& h, const Tensor<T>& cond_rows, const Tensor<T>& t_vec,
                    int n_heads, double drop_rate, bool training, Rng& rng) const {
    Tensor<T> n1 = ln1.forward(add_rowvec(h, t_vec));
    Tensor<T> h1 = add(h, droppath(mha(n1, n1, n_heads, self_attn), drop_rate, training, rng));
    Tensor<T> c = mha(ln2.forward(h1), cond_rows, n_heads, cross_attn);
    Tensor<T> h2 = add(h1, droppath(c, drop_rate, training, rng));
    Tensor<T> f = ffn.forward(ln3.forward(h2));
    return add(h2, droppath(f, drop_rate, training, rng));
  }

  void collect(const std::string& prefix, NamedParams<T>& out) const {
    ln1.collect(prefix + ".ln1", out);
    collect_mha(prefix + ".self", self_attn, out);
    ln2.collect(prefix + ".ln2", out);
    collect_mha(prefix + ".cross", cross_attn, out);
    ln3.collect(prefix + ".ln3", out);
    ffn.collect(prefix + ".ffn", out);
  }
};

// Reconstruction network: maps a noisy latent canvas x_t (N_v x d_v), the raw
// visual feature rows (N_f x d_f) and a timestep t to an estimate of the
// clean canvas x0. Visual features are projected to the latent width once per
// call; learned position rows are added to the canvas at entry.
template <class T>
struct Denoiser {
  int d_v = 0, d_f = 0, n_v = 0, n_heads = 0, t_max = 0;
  double drop_rate = 0.0;
  Tensor<T> cond_w, cond_b;  // d_f -> d_v visual projection
  Tensor<T> pos;             // N_v x d_v learned position table
  TimestepEmbedding<T> t_emb;
  std::vector<DenoiserBlock<T>> blocks;
  LayerNormParams<T> final_ln;
  Tensor<T> head_w, head_b;  // d_v -> d_v reconstruction head

  static Denoiser init(const Config& cfg, Rng& rng) {
    Denoiser m;
    m.d_v = cfg.d_v;
    m.d_f = cfg.d_f;
    m.n_v = cfg.N_v;
    m.n_heads = cfg.n_heads;
    m.t_max = cfg.T;
    m.drop_rate = cfg.drop_path;
    m.cond_w = randn<T>({cfg.d_f, cfg.d_v}, rng, 1.0 / std::sqrt(static_cast<double>(cfg.d_f)));
    m.cond_b = Tensor<T>({cfg.d_v});
    m.pos = randn<T>({cfg.N_v, cfg.d_v}, rng, 0.02);
    m.t_emb = TimestepEmbedding<T>::init(cfg.T, cfg.d_v, rng);
    m.blocks.reserve(static_cast<std::size_t>(cfg.n_denoiser_blocks));
    for (int i = 0; i < cfg.n_denoiser_blocks; ++i)
      m.blocks.push_back(DenoiserBlock<T>::init(cfg.d_v, cfg.ffn_mult, rng));
    m.final_ln = LayerNormParams<T>::init(cfg.d_v);
    m.head_w = randn<T>({cfg.d_v, cfg.d_v}, rng, 1.0 / std::sqrt(static_cast<double>(cfg.d_v)));
    m.head_b = Tensor<T>({cfg.d_v});
    return m;
  }

  Tensor<T> project_condition(const Tensor<T>& feats) const {
    check(feats.rank() == 2 && feats.dim(1) == d_f, ErrorKind::shape,
          "denoiser: visual features must be rank-2 with width " + std::to_string(d_f) + ", got " +
              shape_str(feats.shape()));
    return linear(feats, cond_w, cond_b);
  }

  Tensor<T> forward(const Tensor<T>& x_t, const Tensor<T>& feats, int t, bool training, Rng& rng) const {
    check(x_t.rank() == 2 && x_t.dim(0) == n_v && x_t.dim(1) == d_v, ErrorKind::shape,
          "denoiser: latent canvas must be " + std::to_string(n_v) + "x" + std::to_string(d_v) + ", got " +
              shape_str(x_t.shape()));
    check(1 <= t && t <= t_max, ErrorKind::range,
          "denoiser: t=" + std::to_string(t) + " outside [1, " + std::to_string(t_max) + "]");
    Tensor<T> cond_rows = project_condition(feats);
    Tensor<T> t_vec = t_emb.forward(t);
    Tensor<T> h = add(x_t, pos);
    for (const auto& b : blocks) h = b.forward(h, cond_rows, t_vec, n_heads, drop_rate, training, rng);
    return linear(final_ln.forward(h), head_w, head_b);
  }

  void collect(NamedParams<T>& out) const {
    out.add("denoiser.cond.w", cond_w);
    out.add("denoiser.cond.b", cond_b);
    out.add("denoiser.pos", pos);
    t_emb.collect("denoiser.temb", out);
    for (std::size_t i = 0; i < blocks.size(); ++i)
      blocks[i].collect("denoiser.blk" + std::to_string(i), out);
    final_ln.collect("denoiser.out_ln", out);
    out.add("denoiser.head.w", head_w);
    out.add("denoiser.head.b", head_b);
  }
};

}  // namespace diffcap
