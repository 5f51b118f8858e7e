#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <string>
#include <vector>

#include "diffcap/metrics/ngram.hpp"

namespace diffcap {

// Corpus-level BLEU with n-grams up to `max_n`, uniform weights, no smoothing.
// Per hypothesis, n-gram matches are clipped to the maximum count of that
// n-gram across the references; the brevity penalty uses the reference length
// closest to the hypothesis length (ties resolve toward the shorter one).
// Any order with zero matches (or zero candidates) makes the score 0.
inline double bleu_n(const std::vector<std::string>& hyps,
                     const std::vector<std::vector<std::string>>& refs, int max_n) {
  detail::check_eval_inputs(hyps, refs, "bleu");
  check(max_n >= 1, ErrorKind::eval, "bleu: max_n must be positive");

  std::vector<long long> matched(static_cast<std::size_t>(max_n), 0);
  std::vector<long long> total(static_cast<std::size_t>(max_n), 0);
  long long hyp_len = 0;
  long long ref_len = 0;

  for (std::size_t i = 0; i < hyps.size(); ++i) {
    const std::vector<std::string> h = tokenize(hyps[i]);
    std::vector<std::vector<std::string>> r;
    r.reserve(refs[i].size());
    for (const auto& s : refs[i]) r.push_back(tokenize(s));

    hyp_len += static_cast<long long>(h.size());
    long long best = static_cast<long long>(r[0].size());
    for (const auto& rt : r) {
      const long long len = static_cast<long long>(rt.size());
      const long long d_new = std::llabs(len - static_cast<long long>(h.size()));
      const long long d_old = std::llabs(best - static_cast<long long>(h.size()));
      if (d_new < d_old || (d_new == d_old && len < best)) best = len;
    }
    ref_len += best;

    for (int n = 1; n <= max_n; ++n) {
      const auto hc = detail::ngram_counts(h, n);
      std::map<std::string, int> cap;
      for (const auto& rt : r)
        for (const auto& [g, c] : detail::ngram_counts(rt, n)) cap[g] = std::max(cap[g], c);
      long long m = 0;
      long long t = 0;
      for (const auto& [g, c] : hc) {
        t += c;
        auto it = cap.find(g);
        if (it != cap.end()) m += std::min(c, it->second);
      }
      matched[static_cast<std::size_t>(n - 1)] += m;
      total[static_cast<std::size_t>(n - 1)] += t;
    }
  }

  for (int n = 0; n < max_n; ++n)
    if (matched[static_cast<std::size_t>(n)] == 0 || total[static_cast<std::size_t>(n)] == 0)
      return 0.0;

  double log_prec = 0.0;
  for (int n = 0; n < max_n; ++n)
    log_prec += std::log(static_cast<double>(matched[static_cast<std::size_t>(n)]) /
                         static_cast<double>(total[static_cast<std::size_t>(n)]));
  log_prec /= static_cast<double>(max_n);

  const double bp =
      hyp_len >= ref_len
          ? 1.0
          : std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(hyp_len));
  return bp * std::exp(log_prec);
}

inline double bleu4(const std::vector<std::string>& hyps,
                    const std::vector<std::vector<std::string>>& refs) {
  return bleu_n(hyps, refs, 4);
}

}  // namespace diffcap
