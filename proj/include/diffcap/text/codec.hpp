#pragma once

#include <string>
#include <vector>

#include "diffcap/text/vocab.hpp"

namespace diffcap {

// A fixed-canvas token sequence. `ids` holds the canvas (caption tokens, then
// EOS, then MASK filler); `length` counts the positions before EOS.
struct TokenSeq {
  std::vector<int> ids;
  int length = 0;
};

// Caption text → canvas of exactly n_positions ids: tokens, EOS, MASK fill.
// Overlong input keeps the first n_positions−1 tokens so EOS always fits.
inline TokenSeq encode_caption(const std::string& text, const Vocabulary& vocab, int n_positions) {
  check(n_positions >= 2, ErrorKind::config, "encode: canvas must hold at least one token plus EOS");
  TokenSeq seq;
  for (const auto& tok : tokenize(text)) {
    if (static_cast<int>(seq.ids.size()) == n_positions - 1) break;
    seq.ids.push_back(vocab.id_of(tok));
  }
  seq.length = static_cast<int>(seq.ids.size());
  seq.ids.push_back(kEosId);
  seq.ids.resize(static_cast<std::size_t>(n_positions), kMaskId);
  return seq;
}

// Raw per-position ids → caption tokens: truncate at the first EOS, then
// strip MASK/PAD filler.
inline TokenSeq postprocess_ids(const std::vector<int>& raw) {
  TokenSeq seq;
  for (int id : raw) {
    if (id == kEosId) break;
    if (id == kMaskId || id == kPadId) continue;
    seq.ids.push_back(id);
  }
  seq.length = static_cast<int>(seq.ids.size());
  return seq;
}

// Caption tokens of a postprocessed sequence, joined with single spaces.
inline std::string caption_text(const TokenSeq& seq, const Vocabulary& vocab) {
  std::string out;
  for (int i = 0; i < seq.length; ++i) {
    if (i > 0) out.push_back(' ');
    out += vocab.token_of(seq.ids[static_cast<std::size_t>(i)]);
  }
  return out;
}

}  // namespace diffcap
