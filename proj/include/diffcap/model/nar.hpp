#pragma once

#include "diffcap/model/denoiser.hpp"
#include "diffcap/model/lm.hpp"
#include "diffcap/text/embedding.hpp"

namespace diffcap {

// The full non-autoregressive captioner: a token embedding that defines the
// clean latents, the denoiser that recovers them from noise, and the parallel
// caption head that reads tokens back out. Initialization order is fixed so a
// given seed always produces the same parameters.
template <class T>
struct NarModel {
  EmbeddingTable<T> emb;
  Denoiser<T> denoiser;
  CaptionLm<T> lm;

  static NarModel init(const Config& cfg, int vocab_size, Rng& rng) {
    NarModel m;
    m.emb = EmbeddingTable<T>::init(vocab_size, cfg.d_v, rng);
    m.denoiser = Denoiser<T>::init(cfg, rng);
    m.lm = CaptionLm<T>::init(cfg, vocab_size, rng);
    return m;
  }

  void collect(NamedParams<T>& out) const {
    out.add("emb.table", emb.table);
    denoiser.collect(out);
    lm.collect(out);
  }
};

}  // namespace diffcap
