#pragma once

#include <map>
#include <string>
#include <vector>

#include "diffcap/core/common.hpp"
#include "diffcap/text/vocab.hpp"

namespace diffcap {
namespace detail {

// N-gram key: tokens joined with an unprintable separator so distinct token
// sequences can never collide.
inline std::string gram_key(const std::vector<std::string>& toks, std::size_t start, int n) {
  std::string key;
  for (int k = 0; k < n; ++k) {
    if (k) key.push_back('\x1f');
    key += toks[start + static_cast<std::size_t>(k)];
  }
  return key;
}

inline std::map<std::string, int> ngram_counts(const std::vector<std::string>& toks, int n) {
  std::map<std::string, int> out;
  if (static_cast<int>(toks.size()) < n) return out;
  for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= toks.size(); ++i) ++out[gram_key(toks, i, n)];
  return out;
}

inline void check_eval_inputs(const std::vector<std::string>& hyps,
                              const std::vector<std::vector<std::string>>& refs, const char* metric) {
  check(!hyps.empty(), ErrorKind::eval, std::string(metric) + ": no hypotheses");
  check(hyps.size() == refs.size(), ErrorKind::eval,
        std::string(metric) + ": " + std::to_string(hyps.size()) + " hypotheses vs " +
            std::to_string(refs.size()) + " reference sets");
  for (const auto& r : refs)
    check(!r.empty(), ErrorKind::eval, std::string(metric) + ": empty reference set");
}

}  // namespace detail
}  // namespace diffcap
