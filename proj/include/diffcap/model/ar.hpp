#pragma once

#include <string>
#include <utility>
#include <vector>

#include "diffcap/core/attention.hpp"
#include "diffcap/core/ops.hpp"
#include "diffcap/model/config.hpp"
#include "diffcap/model/layers.hpp"
#include "diffcap/model/params.hpp"
#include "diffcap/text/embedding.hpp"
#include "diffcap/text/vocab.hpp"

namespace diffcap {

template <class T>
struct ArBlock {
  LayerNormParams<T> ln1, ln2, ln3;
  MhaParams<T> self_attn, cross_attn;
  FfnParams<T> ffn;

  static ArBlock init(int d_v, int ffn_mult, Rng& rng) {
    ArBlock b;
    b.ln1 = LayerNormParams<T>::init(d_v);
    b.self_attn = MhaParams<T>::init(d_v, rng, /*zero_out_proj=*/false);
    b.ln2 = LayerNormParams<T>::init(d_v);
    b.cross_attn = MhaParams<T>::init(d_v, rng, /*zero_out_proj=*/false);
    b.ln3 = LayerNormParams<T>::init(d_v);
    b.ffn = FfnParams<T>::init(d_v, ffn_mult, rng, /*zero_out_proj=*/false);
    return b;
  }

  Tensor<T> forward(const Tensor<T>& h, const Tensor<T>& cond_rows, int n_heads, double drop_rate,
                    bool training, Rng& rng) const {
    Tensor<T> n1 = ln1.forward(h);
    Tensor<T> h1 = add(h, droppath(mha(n1, n1, n_heads, self_attn, /*causal=*/true), drop_rate, training, rng));
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

// Left-to-right baseline with the same per-block layer budget as the parallel
// path: causal self-attention, cross-attention over the visual rows, and a
// feed-forward, all pre-norm with residuals. Decoding emits one token per
// full forward pass (no incremental cache), which is exactly what the latency
// comparison is meant to measure.
template <class T>
struct ArModel {
  int d_v = 0, d_f = 0, n_v = 0, n_heads = 0, vocab_size = 0;
  double drop_rate = 0.0;
  EmbeddingTable<T> emb;  // the baseline owns its token embedding
  Tensor<T> pos;          // N_v x d_v learned position table
  Tensor<T> cond_w, cond_b;
  std::vector<ArBlock<T>> blocks;
  LayerNormParams<T> final_ln;
  Tensor<T> head_w, head_b;  // d_v -> |V| readout

  static ArModel init(const Config& cfg, int vocab_size, Rng& rng) {
    check(vocab_size >= 2, ErrorKind::config, "ar model: vocabulary too small");
    ArModel m;
    m.d_v = cfg.d_v;
    m.d_f = cfg.d_f;
    m.n_v = cfg.N_v;
    m.n_heads = cfg.n_heads;
    m.vocab_size = vocab_size;
    m.drop_rate = cfg.drop_path;
    m.emb = EmbeddingTable<T>::init(vocab_size, cfg.d_v, rng);
    m.pos = randn<T>({cfg.N_v, cfg.d_v}, rng, 0.02);
    m.cond_w = randn<T>({cfg.d_f, cfg.d_v}, rng, 1.0 / std::sqrt(static_cast<double>(cfg.d_f)));
    m.cond_b = Tensor<T>({cfg.d_v});
    m.blocks.reserve(static_cast<std::size_t>(cfg.n_lm_blocks));
    for (int i = 0; i < cfg.n_lm_blocks; ++i) m.blocks.push_back(ArBlock<T>::init(cfg.d_v, cfg.ffn_mult, rng));
    m.final_ln = LayerNormParams<T>::init(cfg.d_v);
    m.head_w = randn<T>({cfg.d_v, vocab_size}, rng, 1.0 / std::sqrt(static_cast<double>(cfg.d_v)));
    m.head_b = Tensor<T>({vocab_size});
    return m;
  }

  // Logits over the vocabulary for every prefix position. `inputs` is the
  // shifted token stream (terminator id doubles as the start symbol).
  Tensor<T> forward_logits(const std::vector<int>& inputs, const Tensor<T>& feats, bool training,
                           Rng& rng) const {
    check(!inputs.empty() && static_cast<int>(inputs.size()) <= n_v, ErrorKind::shape,
          "ar model: prefix length must lie in [1, " + std::to_string(n_v) + "]");
    check(feats.rank() == 2 && feats.dim(1) == d_f, ErrorKind::shape,
          "ar model: visual features must be rank-2 with width " + std::to_string(d_f));
    Tensor<T> cond_rows = linear(feats, cond_w, cond_b);
    std::vector<int> pos_ids(inputs.size());
    for (std::size_t i = 0; i < inputs.size(); ++i) pos_ids[i] = static_cast<int>(i);
    Tensor<T> h = add(emb.embed_ids(inputs), lookup_rows(pos, pos_ids));
    for (const auto& b : blocks) h = b.forward(h, cond_rows, n_heads, drop_rate, training, rng);
    return linear(final_ln.forward(h), head_w, head_b);
  }

  // Greedy left-to-right decoding: one full forward pass per emitted token,
  // stopping at the terminator or after max_len tokens. With forced_len > 0
  // the terminator is suppressed until that many tokens are out, so latency
  // runs compare equal-length outputs. Canvas fill ids are never emitted.
  // Returns the emitted ids (terminator included when produced) and reports
  // the number of forward passes via `forward_passes` when non-null.
  std::vector<int> greedy_decode(const Tensor<T>& feats, int max_len, int forced_len = 0,
                                 int* forward_passes = nullptr) const {
    check(1 <= max_len && max_len <= n_v, ErrorKind::generation,
          "ar decode: max_len must lie in [1, " + std::to_string(n_v) + "]");
    check(forced_len <= max_len, ErrorKind::generation, "ar decode: forced_len exceeds max_len");
    NoGradGuard ng;
    Rng unused(0);  // drop-path is inert outside training and draws nothing
    std::vector<int> inputs = {kEosId};
    std::vector<int> emitted;
    int passes = 0;
    while (static_cast<int>(emitted.size()) < max_len) {
      Tensor<T> logits = forward_logits(inputs, feats, /*training=*/false, unused);
      ++passes;
      const int last = logits.dim(0) - 1;
      int best = -1;
      T best_v = T(0);
      for (int j = 0; j < vocab_size; ++j) {
        if (j == kPadId || j == kMaskId) continue;
        if (j == kEosId && static_cast<int>(emitted.size()) < forced_len) continue;
        if (best < 0 || logits.at(last, j) > best_v) {
          best_v = logits.at(last, j);
          best = j;
        }
      }
      emitted.push_back(best);
      if (best == kEosId) break;
      if (static_cast<int>(inputs.size()) < n_v) inputs.push_back(best);
    }
    if (forward_passes) *forward_passes = passes;
    return emitted;
  }

  void collect(NamedParams<T>& out) const {
    out.add("ar.emb", emb.table);
    out.add("ar.pos", pos);
    out.add("ar.cond.w", cond_w);
    out.add("ar.cond.b", cond_b);
    for (std::size_t i = 0; i < blocks.size(); ++i) blocks[i].collect("ar.blk" + std::to_string(i), out);
    final_ln.collect("ar.out_ln", out);
    out.add("ar.head.w", head_w);
    out.add("ar.head.b", head_b);
  }
};

// Teacher-forcing pair for one encoded caption: inputs are the target stream
// shifted right with the terminator as start symbol; targets keep the caption
// tokens plus the terminator at index `length`, with the tail padded out so
// the loss ignores it.
inline std::pair<std::vector<int>, std::vector<int>> ar_teacher_pair(const TokenSeq& seq) {
  const int n = static_cast<int>(seq.ids.size());
  check(seq.length < n && seq.ids[static_cast<std::size_t>(seq.length)] == kEosId, ErrorKind::shape,
        "ar teacher pair: canvas must carry the terminator at index `length`");
  std::vector<int> inputs(static_cast<std::size_t>(n), kPadId);
  std::vector<int> targets(static_cast<std::size_t>(n), kPadId);
  inputs[0] = kEosId;
  for (int i = 0; i < n; ++i) {
    if (i <= seq.length) targets[static_cast<std::size_t>(i)] = seq.ids[static_cast<std::size_t>(i)];
    if (i >= 1 && i - 1 <= seq.length) inputs[static_cast<std::size_t>(i)] = seq.ids[static_cast<std::size_t>(i - 1)];
  }
  return {std::move(inputs), std::move(targets)};
}

}  // namespace diffcap
