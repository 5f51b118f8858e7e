#pragma once

#include <string>
#include <vector>

#include "diffcap/metrics/ngram.hpp"

namespace diffcap {

// Weight on recall in the ROUGE-L F-measure.
inline constexpr double kRougeBeta = 1.2;

namespace detail {

inline int lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  if (a.empty() || b.empty()) return 0;
  std::vector<int> prev(b.size() + 1, 0);
  std::vector<int> cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = (a[i - 1] == b[j - 1]) ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

}  // namespace detail

// ROUGE-L: longest-common-subsequence F-measure with recall weight beta.
// Per hypothesis the best score across its references is kept; the corpus
// score is the mean over hypotheses.
inline double rouge_l(const std::vector<std::string>& hyps,
                      const std::vector<std::vector<std::string>>& refs) {
  detail::check_eval_inputs(hyps, refs, "rouge");
  const double b2 = kRougeBeta * kRougeBeta;
  double sum = 0.0;
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    const std::vector<std::string> h = tokenize(hyps[i]);
    double best = 0.0;
    for (const auto& s : refs[i]) {
      const std::vector<std::string> r = tokenize(s);
      const int lcs = detail::lcs_length(h, r);
      if (lcs == 0 || h.empty() || r.empty()) continue;
      const double prec = static_cast<double>(lcs) / static_cast<double>(h.size());
      const double rec = static_cast<double>(lcs) / static_cast<double>(r.size());
      const double f = (1.0 + b2) * prec * rec / (rec + b2 * prec);
      best = std::max(best, f);
    }
    sum += best;
  }
  return sum / static_cast<double>(hyps.size());
}

}  // namespace diffcap
