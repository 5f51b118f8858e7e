#pragma once

#include <map>
#include <string>
#include <vector>

#include "diffcap/data/dataset.hpp"
#include "diffcap/metrics/bleu.hpp"
#include "diffcap/metrics/cider.hpp"
#include "diffcap/metrics/rouge.hpp"

namespace diffcap {

struct MetricScores {
  double bleu4 = 0.0;
  double rouge_l = 0.0;
  double cider_d = 0.0;
};

// All three caption metrics for one hypothesis per item against multi-reference
// sets. CIDEr-D needs at least two items; with fewer it is reported as 0.
inline MetricScores evaluate_captions(const std::vector<std::string>& hyps,
                                      const std::vector<std::vector<std::string>>& refs) {
  MetricScores s;
  s.bleu4 = bleu4(hyps, refs);
  s.rouge_l = rouge_l(hyps, refs);
  s.cider_d = hyps.size() >= 2 ? cider_d(hyps, refs) : 0.0;
  return s;
}

// Reference set per dataset example: every caption that shares the example's
// video id (including its own). Lets multi-caption corpora score fairly.
template <class T>
std::vector<std::vector<std::string>> reference_sets(const Dataset<T>& data) {
  std::map<std::string, std::vector<std::string>> by_video;
  for (const auto& ex : data.items) by_video[ex.video_id].push_back(ex.caption);
  std::vector<std::vector<std::string>> out;
  out.reserve(data.items.size());
  for (const auto& ex : data.items) out.push_back(by_video.at(ex.video_id));
  return out;
}

}  // namespace diffcap
