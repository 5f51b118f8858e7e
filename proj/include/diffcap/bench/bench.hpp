#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "diffcap/metrics/bleu.hpp"
#include "diffcap/model/ar.hpp"
#include "diffcap/pipeline/generate.hpp"

namespace diffcap {

struct BenchRow {
  std::string mode;  // "nar" or "ar"
  int length = 0;    // AR forced minimum emission length; canvas width is fixed for both
  double median_ms = 0.0;
  double p90_ms = 0.0;
  double bleu4 = 0.0;
};

inline std::string bench_csv_header() { return "mode,length,median_ms,p90_ms,bleu4"; }

inline std::string bench_csv_line(const BenchRow& r) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%s,%d,%.6f,%.6f,%.6f", r.mode.c_str(), r.length, r.median_ms,
                r.p90_ms, r.bleu4);
  return std::string(buf);
}

// Linear-interpolation percentile of the sample set, p in [0, 1].
inline double percentile(std::vector<double> v, double p) {
  check(!v.empty(), ErrorKind::eval, "percentile: empty sample set");
  check(0.0 <= p && p <= 1.0, ErrorKind::eval, "percentile: p outside [0, 1]");
  std::sort(v.begin(), v.end());
  const double pos = p * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  const double frac = pos - static_cast<double>(lo);
  if (lo + 1 >= v.size()) return v.back();
  return v[lo] * (1.0 - frac) + v[lo + 1] * frac;
}

// Slope of the least-squares line through (xs, ys).
inline double least_squares_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  check(xs.size() == ys.size() && xs.size() >= 2, ErrorKind::eval,
        "slope: need matching sample vectors with at least 2 points");
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(xs.size());
  my /= static_cast<double>(xs.size());
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    num += (xs[i] - mx) * (ys[i] - my);
    den += (xs[i] - mx) * (xs[i] - mx);
  }
  check(den > 0.0, ErrorKind::eval, "slope: degenerate x values");
  return num / den;
}

// Per-length slope extraction for one mode from finished rows.
inline double mode_slope(const std::vector<BenchRow>& rows, const std::string& mode) {
  std::vector<double> xs;
  std::vector<double> ys;
  for (const auto& r : rows) {
    if (r.mode != mode) continue;
    xs.push_back(static_cast<double>(r.length));
    ys.push_back(r.median_ms);
  }
  return least_squares_slope(xs, ys);
}

// Speed/quality comparison across target caption lengths. For each length l:
// the one-shot generator runs its fixed-size canvas (its cost cannot depend on
// l), while the sequential baseline is forced to emit at least l tokens before
// it may terminate, so its cost grows with l. Every (item, repeat) pair
// contributes one wall-time sample; captions come from the first repeat and
// are scored with corpus BLEU@4 against the reference sets. Calls run one at
// a time on the calling thread so timings are single-threaded by construction.
template <class T>
std::vector<BenchRow> run_bench(const NarModel<T>& nar, const VarianceSchedule& sched,
                                const DdimPlan& plan, const ArModel<T>& ar,
                                const std::vector<Tensor<T>>& feats,
                                const std::vector<std::vector<std::string>>& refs,
                                const Vocabulary& vocab, const std::vector<int>& lengths,
                                int repeats, std::uint64_t seed) {
  check(!feats.empty(), ErrorKind::eval, "bench: no feature matrices");
  check(feats.size() == refs.size(), ErrorKind::eval, "bench: features/references count mismatch");
  check(repeats >= 1, ErrorKind::eval, "bench: repeats must be positive");
  const int n_v = nar.denoiser.n_v;
  for (int l : lengths)
    check(1 <= l && l <= n_v, ErrorKind::config,
          "bench: target length " + std::to_string(l) + " outside [1, " + std::to_string(n_v) + "]");

  const Rng master(seed);
  std::vector<BenchRow> rows;
  for (int l : lengths) {
    BenchRow nrow{"nar", l, 0.0, 0.0, 0.0};
    BenchRow arow{"ar", l, 0.0, 0.0, 0.0};
    std::vector<double> nar_ms;
    std::vector<double> ar_ms;
    std::vector<std::string> nar_hyps;
    std::vector<std::string> ar_hyps;
    for (int rep = 0; rep < repeats; ++rep) {
      for (std::size_t i = 0; i < feats.size(); ++i) {
        {
          Rng rng = master.split(i);  // same stream each repeat: identical work
          const auto t0 = std::chrono::steady_clock::now();
          TokenSeq seq = generate(feats[i], nar, sched, plan, vocab, rng);
          const auto t1 = std::chrono::steady_clock::now();
          nar_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
          if (rep == 0) nar_hyps.push_back(caption_text(seq, vocab));
        }
        {
          const auto t0 = std::chrono::steady_clock::now();
          std::vector<int> emitted = ar.greedy_decode(feats[i], n_v, l);
          const auto t1 = std::chrono::steady_clock::now();
          ar_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
          if (rep == 0) ar_hyps.push_back(caption_text(postprocess_ids(emitted), vocab));
        }
      }
    }
    nrow.median_ms = percentile(nar_ms, 0.5);
    nrow.p90_ms = percentile(nar_ms, 0.9);
    nrow.bleu4 = bleu4(nar_hyps, refs);
    arow.median_ms = percentile(ar_ms, 0.5);
    arow.p90_ms = percentile(ar_ms, 0.9);
    arow.bleu4 = bleu4(ar_hyps, refs);
    rows.push_back(nrow);
    rows.push_back(arow);
  }
  return rows;
}

}  // namespace diffcap
