#pragma once

#include "diffcap/core/ops.hpp"
#include "diffcap/text/codec.hpp"

namespace diffcap {

// Learned |V| × d_v token embedding standing in for a pretrained text
// encoder: the clean latent x_0 is a row lookup over the caption's canvas.
// The padding row is pinned at zero — initialized to zero and excluded from
// gradient flow, so no optimizer step can move it.
template <class T>
struct EmbeddingTable {
  Tensor<T> table;

  static EmbeddingTable init(int vocab_size, int d_v, Rng& rng) {
    EmbeddingTable e;
    // Unit-scale rows match the unit-noise forward process.
    e.table = randn<T>({vocab_size, d_v}, rng, 1.0);
    for (int j = 0; j < d_v; ++j) e.table.at(kPadId, j) = T(0);
    return e;
  }

  Tensor<T> embed(const TokenSeq& seq) const { return embed_ids(seq.ids); }

  Tensor<T> embed_ids(const std::vector<int>& ids) const {
    return lookup_rows(table, ids, /*frozen_id=*/kPadId);
  }
};

}  // namespace diffcap
