#pragma once

#include <string>
#include <vector>

#include "diffcap/core/attention.hpp"
#include "diffcap/core/ops.hpp"
#include "diffcap/model/config.hpp"
#include "diffcap/model/layers.hpp"
#include "diffcap/model/params.hpp"
#include "diffcap/text/codec.hpp"
#include "diffcap/text/vocab.hpp"

namespace diffcap {

template <class T>
struct LmBlock {
  LayerNormParams<T> ln_a, ln_f;
  MhaParams<T> attn;
  FfnParams<T> ffn;

  static LmBlock init(int d_v, int ffn_mult, Rng& rng) {
    LmBlock b;
    b.ln_a = LayerNormParams<T>::init(d_v);
    b.attn = MhaParams<T>::init(d_v, rng, /*zero_out_proj=*/false);
    b.ln_f = LayerNormParams<T>::init(d_v);
    b.ffn = FfnParams<T>::init(d_v, ffn_mult, rng, /*zero_out_proj=*/false);
    return b;
  }

  void collect(const std::string& prefix, NamedParams<T>& out) const {
    ln_a.collect(prefix + ".ln_a", out);
    collect_mha(prefix + ".attn", attn, out);
    ln_f.collect(prefix + ".ln_f", out);
    ffn.collect(prefix + ".ffn", out);
  }
};

// Non-autoregressive caption head: reads the reconstructed latent canvas and
// emits a categorical distribution per position, all positions in parallel.
//
// The first layer feeds its attention output forward WITHOUT adding the
// block input back:
//
//   h'_1 = DropPath(SelfAttn(LN(h_0)))          (no residual here)
//   h_1  = h'_1 + DropPath(FFN(LN(h'_1)))
//
// Every later layer uses both residuals. `residual_first_layer` restores the
// conventional first-layer form for comparison runs.
template <class T>
struct CaptionLm {
  int d_v = 0, n_v = 0, n_heads = 0, vocab_size = 0;
  double drop_rate = 0.0;
  bool residual_first_layer = false;
  Tensor<T> pos;  // N_v x d_v learned position table
  std::vector<LmBlock<T>> blocks;
  Tensor<T> fc_w, fc_b;  // d_v -> |V| readout

  static CaptionLm init(const Config& cfg, int vocab_size, Rng& rng) {
    check(vocab_size >= 2, ErrorKind::config, "caption lm: vocabulary too small");
    CaptionLm m;
    m.d_v = cfg.d_v;
    m.n_v = cfg.N_v;
    m.n_heads = cfg.n_heads;
    m.vocab_size = vocab_size;
    m.drop_rate = cfg.drop_path;
    m.residual_first_layer = cfg.residual_first_layer;
    m.pos = randn<T>({cfg.N_v, cfg.d_v}, rng, 0.02);
    m.blocks.reserve(static_cast<std::size_t>(cfg.n_lm_blocks));
    for (int i = 0; i < cfg.n_lm_blocks; ++i) m.blocks.push_back(LmBlock<T>::init(cfg.d_v, cfg.ffn_mult, rng));
    m.fc_w = randn<T>({cfg.d_v, vocab_size}, rng, 1.0 / std::sqrt(static_cast<double>(cfg.d_v)));
    m.fc_b = Tensor<T>({vocab_size});
    return m;
  }

  // N_v x |V| row-stochastic matrix.
  Tensor<T> forward(const Tensor<T>& x0_hat, bool training, Rng& rng) const {
    check(x0_hat.rank() == 2 && x0_hat.dim(0) == n_v && x0_hat.dim(1) == d_v, ErrorKind::shape,
          "caption lm: input canvas must be " + std::to_string(n_v) + "x" + std::to_string(d_v) + ", got " +
              shape_str(x0_hat.shape()));
    Tensor<T> h = add(x0_hat, pos);
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      const LmBlock<T>& b = blocks[i];
      Tensor<T> n_a = b.ln_a.forward(h);
      Tensor<T> a = droppath(mha(n_a, n_a, n_heads, b.attn), drop_rate, training, rng);
      Tensor<T> h_mid = (i == 0 && !residual_first_layer) ? a : add(h, a);
      Tensor<T> f = droppath(b.ffn.forward(b.ln_f.forward(h_mid)), drop_rate, training, rng);
      h = add(h_mid, f);
    }
    return softmax(linear(h, fc_w, fc_b), 1);
  }

  void collect(NamedParams<T>& out) const {
    out.add("lm.pos", pos);
    for (std::size_t i = 0; i < blocks.size(); ++i) blocks[i].collect("lm.blk" + std::to_string(i), out);
    out.add("lm.fc.w", fc_w);
    out.add("lm.fc.b", fc_b);
  }
};

// Greedy per-position readout of a sentence distribution. Ties resolve toward
// the lowest token id. Returns the raw canvas ids; callers strip the padding
// and anything past the terminator with postprocess_ids.
template <class T>
TokenSeq decode(const Tensor<T>& s, const Vocabulary& vocab) {
  check(s.rank() == 2, ErrorKind::shape, "decode: rank-2 distribution required");
  check(s.dim(1) == vocab.size(), ErrorKind::shape,
        "decode: distribution width " + std::to_string(s.dim(1)) + " does not match vocabulary size " +
            std::to_string(vocab.size()));
  TokenSeq seq;
  seq.ids.resize(static_cast<std::size_t>(s.dim(0)));
  for (int i = 0; i < s.dim(0); ++i) {
    int best = 0;
    T best_p = s.at(i, 0);
    for (int j = 1; j < s.dim(1); ++j) {
      if (s.at(i, j) > best_p) {  // strict: first maximum wins, lowest index on ties
        best_p = s.at(i, j);
        best = j;
      }
    }
    seq.ids[static_cast<std::size_t>(i)] = best;
  }
  seq.length = s.dim(0);
  return seq;
}

}  // namespace diffcap
