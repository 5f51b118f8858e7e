#pragma once

#include <cmath>

#include "diffcap/core/ops.hpp"
#include "diffcap/model/params.hpp"

namespace diffcap {

// Fixed sinusoidal code book with one row per timestep 0..T. Row t holds
// interleaved sin/cos pairs over geometrically spaced frequencies, so every
// timestep in range maps to a distinct vector. Rebuilt from the config on
// load; never serialized.
template <class T>
Tensor<T> sinusoid_table(int t_max, int d) {
  check(t_max >= 1, ErrorKind::config, "sinusoid_table: t_max must be >= 1");
  check(d >= 2 && d % 2 == 0, ErrorKind::config, "sinusoid_table: width must be even and >= 2");
  Tensor<T> table({t_max + 1, d});
  const int half = d / 2;
  for (int t = 0; t <= t_max; ++t) {
    for (int i = 0; i < half; ++i) {
      const double freq = std::pow(10000.0, -2.0 * i / static_cast<double>(d));
      const double angle = static_cast<double>(t) * freq;
      table.at(t, 2 * i) = static_cast<T>(std::sin(angle));
      table.at(t, 2 * i + 1) = static_cast<T>(std::cos(angle));
    }
  }
  return table;
}

// Timestep conditioning: the fixed sinusoid row for t is refined by a learned
// two-layer perceptron into the vector added to every token before each
// block's first normalization.
template <class T>
struct TimestepEmbedding {
  Tensor<T> table;  // (T+1) x d, constant
  Tensor<T> w1, b1, w2, b2;
  int t_max = 0;

  static TimestepEmbedding init(int t_max, int d, Rng& rng) {
    TimestepEmbedding e;
    e.t_max = t_max;
    e.table = sinusoid_table<T>(t_max, d);
    const double std = 1.0 / std::sqrt(static_cast<double>(d));
    e.w1 = randn<T>({d, d}, rng, std);
    e.b1 = Tensor<T>({d});
    e.w2 = randn<T>({d, d}, rng, std);
    e.b2 = Tensor<T>({d});
    return e;
  }

  // 1 x d row for timestep t.
  Tensor<T> forward(int t) const {
    check(0 <= t && t <= t_max, ErrorKind::range,
          "timestep embedding: t=" + std::to_string(t) + " outside [0, " + std::to_string(t_max) + "]");
    Tensor<T> row = lookup_rows(table, {t});
    return linear(gelu(linear(row, w1, b1)), w2, b2);
  }

  void collect(const std::string& prefix, NamedParams<T>& out) const {
    // The sinusoid table is derived from the config, so only the perceptron
    // is registered for optimization and serialization.
    out.add(prefix + ".w1", w1);
    out.add(prefix + ".b1", b1);
    out.add(prefix + ".w2", w2);
    out.add(prefix + ".b2", b2);
  }
};

}  // namespace diffcap
