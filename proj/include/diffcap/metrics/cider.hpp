#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "diffcap/metrics/ngram.hpp"

namespace diffcap {

// Width of the gaussian penalty on hypothesis/reference length difference.
inline constexpr double kCiderSigma = 6.0;

// CIDEr-D over n-grams 1..4, scaled by 10. Term frequencies are raw counts,
// document frequency counts the items whose reference set contains the n-gram,
// idf = log(#items) - log(max(1, df)). Per reference,
//   sim_n = sum_g min(tf_hyp, tf_ref) * tf_ref * idf^2 / (|hyp_n| * |ref_n|)
// damped by exp(-(len_h - len_r)^2 / (2 sigma^2)); reference scores are
// averaged, then averaged over n, then over items. Needs at least two items
// for the idf statistics to be meaningful.
inline double cider_d(const std::vector<std::string>& hyps,
                      const std::vector<std::vector<std::string>>& refs) {
  detail::check_eval_inputs(hyps, refs, "cider");
  check(hyps.size() >= 2, ErrorKind::eval,
        "cider: needs at least 2 items, got " + std::to_string(hyps.size()));
  constexpr int kMaxN = 4;
  const std::size_t n_items = hyps.size();
  const double log_items = std::log(static_cast<double>(n_items));

  // Document frequency per n-gram order, over reference sets.
  std::vector<std::map<std::string, int>> df(kMaxN);
  std::vector<std::vector<std::vector<std::string>>> ref_toks(n_items);
  std::vector<std::vector<std::string>> hyp_toks(n_items);
  for (std::size_t i = 0; i < n_items; ++i) {
    hyp_toks[i] = tokenize(hyps[i]);
    ref_toks[i].reserve(refs[i].size());
    for (const auto& s : refs[i]) ref_toks[i].push_back(tokenize(s));
    for (int n = 1; n <= kMaxN; ++n) {
      std::set<std::string> seen;
      for (const auto& rt : ref_toks[i])
        for (const auto& [g, c] : detail::ngram_counts(rt, n)) seen.insert(g);
      for (const auto& g : seen) ++df[static_cast<std::size_t>(n - 1)][g];
    }
  }

  const auto idf = [&](int n, const std::string& g) {
    const auto& m = df[static_cast<std::size_t>(n - 1)];
    auto it = m.find(g);
    const int d = it == m.end() ? 0 : it->second;
    return log_items - std::log(static_cast<double>(std::max(1, d)));
  };
  // tf-idf vector norm for one token sequence at one n-gram order.
  const auto norm = [&](const std::vector<std::string>& toks, int n) {
    double s = 0.0;
    for (const auto& [g, c] : detail::ngram_counts(toks, n)) {
      const double w = static_cast<double>(c) * idf(n, g);
      s += w * w;
    }
    return std::sqrt(s);
  };

  double corpus = 0.0;
  for (std::size_t i = 0; i < n_items; ++i) {
    double item = 0.0;
    for (int n = 1; n <= kMaxN; ++n) {
      const auto hc = detail::ngram_counts(hyp_toks[i], n);
      const double hn = norm(hyp_toks[i], n);
      double over_refs = 0.0;
      for (const auto& rt : ref_toks[i]) {
        const auto rc = detail::ngram_counts(rt, n);
        const double rn = norm(rt, n);
        if (hn == 0.0 || rn == 0.0) continue;
        double dot = 0.0;
        for (const auto& [g, c] : hc) {
          auto it = rc.find(g);
          if (it == rc.end()) continue;
          const double w = idf(n, g);
          dot += static_cast<double>(std::min(c, it->second)) * static_cast<double>(it->second) *
                 w * w;
        }
        const double dl =
            static_cast<double>(hyp_toks[i].size()) - static_cast<double>(rt.size());
        over_refs += dot / (hn * rn) * std::exp(-dl * dl / (2.0 * kCiderSigma * kCiderSigma));
      }
      item += over_refs / static_cast<double>(ref_toks[i].size());
    }
    corpus += 10.0 * item / static_cast<double>(kMaxN);
  }
  return corpus / static_cast<double>(n_items);
}

}  // namespace diffcap
