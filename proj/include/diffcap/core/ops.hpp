#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "diffcap/core/rng.hpp"
#include "diffcap/core/tensor.hpp"

namespace diffcap {

// ---------------------------------------------------------------------------
// GEMM kernels. All accumulate into C so backward passes can reuse them for
// gradient accumulation. Loop orders are fixed and reduction trees explicit:
// results are bit-identical across builds of the same binary and independent
// of thread count (callers parallelize across whole calls, never within one).
// ---------------------------------------------------------------------------

// C[M×N] += A[M×K] · B[K×N]
template <class T>
void gemm_nn_acc(const T* a, const T* b, T* c, int M, int K, int N) {
  for (int i = 0; i < M; ++i) {
    const T* arow = a + static_cast<std::size_t>(i) * K;
    T* crow = c + static_cast<std::size_t>(i) * N;
    for (int k = 0; k < K; ++k) {
      const T aik = arow[k];
      if (aik == T(0)) continue;
      const T* brow = b + static_cast<std::size_t>(k) * N;
      for (int j = 0; j < N; ++j) crow[j] += aik * brow[j];
    }
  }
}

// C[M×N] += A[M×K] · B[N×K]ᵀ  (rows of A dotted with rows of B)
template <class T>
void gemm_nt_acc(const T* a, const T* b, T* c, int M, int K, int N) {
  for (int i = 0; i < M; ++i) {
    const T* arow = a + static_cast<std::size_t>(i) * K;
    T* crow = c + static_cast<std::size_t>(i) * N;
    for (int j = 0; j < N; ++j) {
      const T* brow = b + static_cast<std::size_t>(j) * K;
      // Eight independent partial sums so the loop vectorizes without any
      // reassociation license; the combine order below is fixed.
      T acc[8] = {T(0), T(0), T(0), T(0), T(0), T(0), T(0), T(0)};
      int k = 0;
      for (; k + 8 <= K; k += 8)
        for (int l = 0; l < 8; ++l) acc[l] += arow[k + l] * brow[k + l];
      T tail = T(0);
      for (; k < K; ++k) tail += arow[k] * brow[k];
      T s = ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
      crow[j] += s + tail;
    }
  }
}

// C[K×N] += A[M×K]ᵀ · B[M×N]
template <class T>
void gemm_tn_acc(const T* a, const T* b, T* c, int M, int K, int N) {
  for (int i = 0; i < M; ++i) {
    const T* arow = a + static_cast<std::size_t>(i) * K;
    const T* brow = b + static_cast<std::size_t>(i) * N;
    for (int k = 0; k < K; ++k) {
      const T aik = arow[k];
      if (aik == T(0)) continue;
      T* crow = c + static_cast<std::size_t>(k) * N;
      for (int j = 0; j < N; ++j) crow[j] += aik * brow[j];
    }
  }
}

// ---------------------------------------------------------------------------
// Random fills (RNG produces doubles; storage rounds to T).
// ---------------------------------------------------------------------------

template <class T>
void fill_randn(Tensor<T>& t, Rng& rng, double stddev = 1.0, double mean = 0.0) {
  for (auto& v : t.vec()) v = static_cast<T>(mean + stddev * rng.gaussian());
}

template <class T>
Tensor<T> randn(Shape shape, Rng& rng, double stddev = 1.0, double mean = 0.0) {
  Tensor<T> t(std::move(shape));
  fill_randn(t, rng, stddev, mean);
  return t;
}

// ---------------------------------------------------------------------------
// Autodiff ops. Every op allocates a fresh output; when grad tracking is on
// and some input requires grad, the op attaches a backward lambda that adds
// into the inputs' grad buffers (allocated lazily by the backward driver).
// ---------------------------------------------------------------------------

namespace detail {
template <class T, class... Ts>
bool track(const Ts&... parents) {
  return grad_mode() && (... || parents.requires_grad());
}
}  // namespace detail

template <class T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  check_same_shape(a, b, "add");
  Tensor<T> out(a.shape());
  const T* pa = a.data();
  const T* pb = b.data();
  T* po = out.data();
  for (std::int64_t i = 0; i < out.numel(); ++i) po[i] = pa[i] + pb[i];
  if (detail::track<T>(a, b)) {
    out.set_requires_grad(true);
    out.set_edge({a, b}, [a, b](TensorImpl<T>& o) mutable {
      for (std::size_t i = 0; i < o.grad.size(); ++i) {
        if (a.requires_grad()) a.grad()[i] += o.grad[i];
        if (b.requires_grad()) b.grad()[i] += o.grad[i];
      }
    });
  }
  return out;
}

template <class T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  check_same_shape(a, b, "sub");
  Tensor<T> out(a.shape());
  const T* pa = a.data();
  const T* pb = b.data();
  T* po = out.data();
  for (std::int64_t i = 0; i < out.numel(); ++i) po[i] = pa[i] - pb[i];
  if (detail::track<T>(a, b)) {
    out.set_requires_grad(true);
    out.set_edge({a, b}, [a, b](TensorImpl<T>& o) mutable {
      for (std::size_t i = 0; i < o.grad.size(); ++i) {
        if (a.requires_grad()) a.grad()[i] += o.grad[i];
        if (b.requires_grad()) b.grad()[i] -= o.grad[i];
      }
    });
  }
  return out;
}

template <class T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  check_same_shape(a, b, "mul");
  Tensor<T> out(a.shape());
  const T* pa = a.data();
  const T* pb = b.data();
  T* po = out.data();
  for (std::int64_t i = 0; i < out.numel(); ++i) po[i] = pa[i] * pb[i];
  if (detail::track<T>(a, b)) {
    out.set_requires_grad(true);
    out.set_edge({a, b}, [a, b](TensorImpl<T>& o) mutable {
      for (std::size_t i = 0; i < o.grad.size(); ++i) {
        if (a.requires_grad()) a.grad()[i] += o.grad[i] * b.data()[i];
        if (b.requires_grad()) b.grad()[i] += o.grad[i] * a.data()[i];
      }
    });
  }
  return out;
}

template <class T>
Tensor<T> scale(const Tensor<T>& a, T c) {
  Tensor<T> out(a.shape());
  const T* pa = a.data();
  T* po = out.data();
  for (std::int64_t i = 0; i < out.numel(); ++i) po[i] = pa[i] * c;
  if (detail::track<T>(a)) {
    out.set_requires_grad(true);
    out.set_edge({a}, [a, c](TensorImpl<T>& o) mutable {
      for (std::size_t i = 0; i < o.grad.size(); ++i) a.grad()[i] += o.grad[i] * c;
    });
  }
  return out;
}

// ca·a + cb·b with constant coefficients (residual mixes, schedule algebra).
template <class T>
Tensor<T> lincomb(T ca, const Tensor<T>& a, T cb, const Tensor<T>& b) {
  check_same_shape(a, b, "lincomb");
  Tensor<T> out(a.shape());
  const T* pa = a.data();
  const T* pb = b.data();
  T* po = out.data();
  for (std::int64_t i = 0; i < out.numel(); ++i) po[i] = ca * pa[i] + cb * pb[i];
  if (detail::track<T>(a, b)) {
    out.set_requires_grad(true);
    out.set_edge({a, b}, [a, b, ca, cb](TensorImpl<T>& o) mutable {
      for (std::size_t i = 0; i < o.grad.size(); ++i) {
        if (a.requires_grad()) a.grad()[i] += o.grad[i] * ca;
        if (b.requires_grad()) b.grad()[i] += o.grad[i] * cb;
      }
    });
  }
  return out;
}

// Broadcast-add a length-N row vector to every row of a M×N matrix.
template <class T>
Tensor<T> add_rowvec(const Tensor<T>& a, const Tensor<T>& v) {
  check(a.rank() == 2, ErrorKind::shape, "add_rowvec: matrix input required");
  check(v.numel() == a.dim(1), ErrorKind::shape,
        "add_rowvec: vector length " + std::to_string(v.numel()) + " vs row width " + std::to_string(a.dim(1)));
  Tensor<T> out(a.shape());
  const int m = a.dim(0), n = a.dim(1);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) out.at(i, j) = a.at(i, j) + v.at(j);
  if (detail::track<T>(a, v)) {
    out.set_requires_grad(true);
    out.set_edge({a, v}, [a, v, m, n](TensorImpl<T>& o) mutable {
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
          T g = o.grad[static_cast<std::size_t>(i) * n + j];
          if (a.requires_grad()) a.grad()[static_cast<std::size_t>(i) * n + j] += g;
          if (v.requires_grad()) v.grad()[j] += g;
        }
    });
  }
  return out;
}

template <class T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  check(a.rank() == 2 && b.rank() == 2, ErrorKind::shape, "matmul: rank-2 inputs required");
  check(a.dim(1) == b.dim(0), ErrorKind::shape,
        "matmul: inner extents differ, " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  const int M = a.dim(0), K = a.dim(1), N = b.dim(1);
  Tensor<T> out({M, N});
  gemm_nn_acc(a.data(), b.data(), out.data(), M, K, N);
  if (detail::track<T>(a, b)) {
    out.set_requires_grad(true);
    out.set_edge({a, b}, [a, b, M, K, N](TensorImpl<T>& o) mutable {
      if (a.requires_grad()) gemm_nt_acc(o.grad.data(), b.data(), a.grad(), M, N, K);  // dA += dY·Bᵀ
      if (b.requires_grad()) gemm_tn_acc(a.data(), o.grad.data(), b.grad(), M, K, N);  // dB += Aᵀ·dY
    });
  }
  return out;
}

// a[M×K] · b[N×K]ᵀ — attention scores (queries against keys) without
// materializing a transpose.
template <class T>
Tensor<T> matmul_nt(const Tensor<T>& a, const Tensor<T>& b) {
  check(a.rank() == 2 && b.rank() == 2, ErrorKind::shape, "matmul_nt: rank-2 inputs required");
  check(a.dim(1) == b.dim(1), ErrorKind::shape,
        "matmul_nt: inner extents differ, " + shape_str(a.shape()) + " x " + shape_str(b.shape()) + " transposed");
  const int M = a.dim(0), K = a.dim(1), N = b.dim(0);
  Tensor<T> out({M, N});
  gemm_nt_acc(a.data(), b.data(), out.data(), M, K, N);
  if (detail::track<T>(a, b)) {
    out.set_requires_grad(true);
    out.set_edge({a, b}, [a, b, M, K, N](TensorImpl<T>& o) mutable {
      if (a.requires_grad()) gemm_nn_acc(o.grad.data(), b.data(), a.grad(), M, N, K);  // dA += dY·B
      if (b.requires_grad()) gemm_tn_acc(o.grad.data(), a.data(), b.grad(), M, N, K);  // dB += dYᵀ·A
    });
  }
  return out;
}

// Row gather from an embedding-style table. Gradients scatter back into the
// gathered rows; `frozen_id` (if ≥ 0) names one id whose row never receives
// gradient — used to pin the padding row at zero.
template <class T>
Tensor<T> lookup_rows(const Tensor<T>& table, const std::vector<int>& ids, int frozen_id = -1) {
  check(table.rank() == 2, ErrorKind::shape, "lookup_rows: table must be rank-2");
  const int rows = table.dim(0), width = table.dim(1);
  for (int id : ids)
    check(id >= 0 && id < rows, ErrorKind::codec, "lookup_rows: id " + std::to_string(id) + " outside table");
  Tensor<T> out({static_cast<int>(ids.size()), width});
  for (std::size_t i = 0; i < ids.size(); ++i)
    std::copy_n(table.data() + static_cast<std::size_t>(ids[i]) * width, width, out.data() + i * width);
  if (detail::track<T>(table)) {
    out.set_requires_grad(true);
    out.set_edge({table}, [table, ids, width, frozen_id](TensorImpl<T>& o) mutable {
      for (std::size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] == frozen_id) continue;
        T* dst = table.grad() + static_cast<std::size_t>(ids[i]) * width;
        const T* src = o.grad.data() + i * width;
        for (int j = 0; j < width; ++j) dst[j] += src[j];
      }
    });
  }
  return out;
}

// Column slice [c0, c1) of a matrix — splits fused projections into heads.
template <class T>
Tensor<T> slice_cols(const Tensor<T>& x, int c0, int c1) {
  check(x.rank() == 2, ErrorKind::shape, "slice_cols: matrix input required");
  check(0 <= c0 && c0 < c1 && c1 <= x.dim(1), ErrorKind::shape, "slice_cols: bad column range");
  const int m = x.dim(0), n = x.dim(1), w = c1 - c0;
  Tensor<T> out({m, w});
  for (int i = 0; i < m; ++i)
    std::copy_n(x.data() + static_cast<std::size_t>(i) * n + c0, w, out.data() + static_cast<std::size_t>(i) * w);
  if (detail::track<T>(x)) {
    out.set_requires_grad(true);
    out.set_edge({x}, [x, c0, m, n, w](TensorImpl<T>& o) mutable {
      for (int i = 0; i < m; ++i) {
        T* dst = x.grad() + static_cast<std::size_t>(i) * n + c0;
        const T* src = o.grad.data() + static_cast<std::size_t>(i) * w;
        for (int j = 0; j < w; ++j) dst[j] += src[j];
      }
    });
  }
  return out;
}

// Concatenate matrices with equal row counts along columns (head merge).
template <class T>
Tensor<T> concat_cols(const std::vector<Tensor<T>>& parts) {
  check(!parts.empty(), ErrorKind::shape, "concat_cols: no inputs");
  const int m = parts[0].dim(0);
  int n = 0;
  for (const auto& p : parts) {
    check(p.rank() == 2 && p.dim(0) == m, ErrorKind::shape, "concat_cols: row counts differ");
    n += p.dim(1);
  }
  Tensor<T> out({m, n});
  int off = 0;
  for (const auto& p : parts) {
    const int w = p.dim(1);
    for (int i = 0; i < m; ++i)
      std::copy_n(p.data() + static_cast<std::size_t>(i) * w, w, out.data() + static_cast<std::size_t>(i) * n + off);
    off += w;
  }
  bool needs = false;
  for (const auto& p : parts) needs = needs || p.requires_grad();
  if (grad_mode() && needs) {
    out.set_requires_grad(true);
    auto parents = parts;
    out.set_edge(std::vector<Tensor<T>>(parts.begin(), parts.end()), [parents, m, n](TensorImpl<T>& o) mutable {
      int off = 0;
      for (auto& p : parents) {
        const int w = p.dim(1);
        if (p.requires_grad())
          for (int i = 0; i < m; ++i) {
            const T* src = o.grad.data() + static_cast<std::size_t>(i) * n + off;
            T* dst = p.grad() + static_cast<std::size_t>(i) * w;
            for (int j = 0; j < w; ++j) dst[j] += src[j];
          }
        off += w;
      }
    });
  }
  return out;
}

// Row-stochastic softmax with max-subtraction; axis 1 normalizes rows,
// axis 0 columns.
template <class T>
Tensor<T> softmax(const Tensor<T>& x, int axis = 1) {
  check(x.rank() == 2, ErrorKind::shape, "softmax: matrix input required");
  check(axis == 0 || axis == 1, ErrorKind::shape, "softmax: axis must be 0 or 1");
  const int m = x.dim(0), n = x.dim(1);
  Tensor<T> out(x.shape());
  const int outer = axis == 1 ? m : n;
  const int inner = axis == 1 ? n : m;
  auto idx = [axis, n](int o, int i) {
    return axis == 1 ? static_cast<std::size_t>(o) * n + i : static_cast<std::size_t>(i) * n + o;
  };
  for (int o = 0; o < outer; ++o) {
    T mx = x.data()[idx(o, 0)];
    for (int i = 1; i < inner; ++i) mx = std::max(mx, x.data()[idx(o, i)]);
    double denom = 0.0;
    for (int i = 0; i < inner; ++i) {
      T e = std::exp(x.data()[idx(o, i)] - mx);
      out.data()[idx(o, i)] = e;
      denom += static_cast<double>(e);
    }
    for (int i = 0; i < inner; ++i) out.data()[idx(o, i)] = static_cast<T>(out.data()[idx(o, i)] / denom);
  }
  if (detail::track<T>(x)) {
    out.set_requires_grad(true);
    // Read forward outputs through the node itself; capturing the output
    // tensor here would make the node own itself and leak every graph.
    out.set_edge({x}, [x, outer, inner, idx](TensorImpl<T>& o) mutable {
      for (int r = 0; r < outer; ++r) {
        double dot = 0.0;
        for (int i = 0; i < inner; ++i)
          dot += static_cast<double>(o.grad[idx(r, i)]) * static_cast<double>(o.data[idx(r, i)]);
        for (int i = 0; i < inner; ++i) {
          std::size_t p = idx(r, i);
          x.grad()[p] += o.data[p] * (o.grad[p] - static_cast<T>(dot));
        }
      }
    });
  }
  return out;
}

// Last-axis layer normalization: per-row standardization then affine.
template <class T>
Tensor<T> layernorm(const Tensor<T>& x, const Tensor<T>& gain, const Tensor<T>& bias, T eps = T(1e-5)) {
  check(x.rank() == 2, ErrorKind::shape, "layernorm: matrix input required");
  const int m = x.dim(0), n = x.dim(1);
  check(gain.numel() == n && bias.numel() == n, ErrorKind::shape, "layernorm: affine params must match row width");
  Tensor<T> out(x.shape());
  Tensor<T> xhat({m, n});
  std::vector<T> inv_std(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    double mean = 0.0;
    for (int j = 0; j < n; ++j) mean += static_cast<double>(x.at(i, j));
    mean /= n;
    double var = 0.0;
    for (int j = 0; j < n; ++j) {
      double d = static_cast<double>(x.at(i, j)) - mean;
      var += d * d;
    }
    var /= n;
    double is = 1.0 / std::sqrt(var + static_cast<double>(eps));
    inv_std[static_cast<std::size_t>(i)] = static_cast<T>(is);
    for (int j = 0; j < n; ++j) {
      T xh = static_cast<T>((static_cast<double>(x.at(i, j)) - mean) * is);
      xhat.at(i, j) = xh;
      out.at(i, j) = xh * gain.at(j) + bias.at(j);
    }
  }
  if (detail::track<T>(x, gain, bias)) {
    out.set_requires_grad(true);
    out.set_edge({x, gain, bias}, [x, gain, bias, xhat, inv_std, m, n](TensorImpl<T>& o) mutable {
      for (int i = 0; i < m; ++i) {
        double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
        for (int j = 0; j < n; ++j) {
          std::size_t p = static_cast<std::size_t>(i) * n + j;
          double dxhat = static_cast<double>(o.grad[p]) * static_cast<double>(gain.at(j));
          sum_dxhat += dxhat;
          sum_dxhat_xhat += dxhat * static_cast<double>(xhat.at(i, j));
          if (gain.requires_grad()) gain.grad()[j] += o.grad[p] * xhat.at(i, j);
          if (bias.requires_grad()) bias.grad()[j] += o.grad[p];
        }
        if (x.requires_grad()) {
          double is = static_cast<double>(inv_std[static_cast<std::size_t>(i)]);
          for (int j = 0; j < n; ++j) {
            std::size_t p = static_cast<std::size_t>(i) * n + j;
            double dxhat = static_cast<double>(o.grad[p]) * static_cast<double>(gain.at(j));
            double dx = (dxhat - sum_dxhat / n - static_cast<double>(xhat.at(i, j)) * sum_dxhat_xhat / n) * is;
            x.grad()[p] += static_cast<T>(dx);
          }
        }
      }
    });
  }
  return out;
}

// Exact Gaussian-error-linear unit: x·Φ(x).
template <class T>
Tensor<T> gelu(const Tensor<T>& x) {
  Tensor<T> out(x.shape());
  const T* px = x.data();
  T* po = out.data();
  for (std::int64_t i = 0; i < out.numel(); ++i) {
    double v = static_cast<double>(px[i]);
    po[i] = static_cast<T>(v * 0.5 * (1.0 + std::erf(v * 0.70710678118654752440)));
  }
  if (detail::track<T>(x)) {
    out.set_requires_grad(true);
    out.set_edge({x}, [x](TensorImpl<T>& o) mutable {
      for (std::size_t i = 0; i < o.grad.size(); ++i) {
        double v = static_cast<double>(x.data()[i]);
        double cdf = 0.5 * (1.0 + std::erf(v * 0.70710678118654752440));
        double pdf = std::exp(-0.5 * v * v) * 0.39894228040143267794;
        x.grad()[i] += o.grad[i] * static_cast<T>(cdf + v * pdf);
      }
    });
  }
  return out;
}

// Stochastic depth over one sample's residual branch: during training the
// whole branch is kept (scaled by 1/(1−rate)) or zeroed by a single Bernoulli
// draw; outside training it is the identity.
template <class T>
Tensor<T> droppath(const Tensor<T>& x, double rate, bool training, Rng& rng) {
  check(rate >= 0.0 && rate < 1.0, ErrorKind::config, "droppath: rate must lie in [0, 1)");
  if (!training || rate == 0.0) {
    // Identity, but still a node so gradient flows untouched.
    return scale(x, T(1));
  }
  const bool keep = rng.uniform() >= rate;
  const T factor = keep ? static_cast<T>(1.0 / (1.0 - rate)) : T(0);
  return scale(x, factor);
}

// Additive causal mask: positions j > i get a large negative constant so a
// following row softmax ignores them. Gradient passes through unchanged
// (the mask is an additive constant).
template <class T>
Tensor<T> add_causal_mask(const Tensor<T>& scores) {
  check(scores.rank() == 2 && scores.dim(0) == scores.dim(1), ErrorKind::shape,
        "add_causal_mask: square score matrix required");
  const int n = scores.dim(0);
  Tensor<T> out(scores.shape());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out.at(i, j) = j <= i ? scores.at(i, j) : scores.at(i, j) - T(1e9);
  if (detail::track<T>(scores)) {
    out.set_requires_grad(true);
    out.set_edge({scores}, [scores](TensorImpl<T>& o) mutable {
      for (std::size_t i = 0; i < o.grad.size(); ++i) scores.grad()[i] += o.grad[i];
    });
  }
  return out;
}

template <class T>
Tensor<T> sum(const Tensor<T>& x) {
  double acc = 0.0;
  for (std::int64_t i = 0; i < x.numel(); ++i) acc += static_cast<double>(x.data()[i]);
  Tensor<T> out({1});
  out.at(0) = static_cast<T>(acc);
  if (detail::track<T>(x)) {
    out.set_requires_grad(true);
    out.set_edge({x}, [x](TensorImpl<T>& o) mutable {
      for (std::int64_t i = 0; i < static_cast<std::int64_t>(x.vec().size()); ++i) x.grad()[i] += o.grad[0];
    });
  }
  return out;
}

template <class T>
Tensor<T> mean_all(const Tensor<T>& x) {
  const T inv = static_cast<T>(1.0 / static_cast<double>(x.numel()));
  return scale(sum(x), inv);
}

// Mean squared difference over all coordinates.
template <class T>
Tensor<T> mse_loss(const Tensor<T>& pred, const Tensor<T>& target) {
  check_same_shape(pred, target, "mse_loss");
  const std::int64_t count = pred.numel();
  double acc = 0.0;
  for (std::int64_t i = 0; i < count; ++i) {
    double d = static_cast<double>(pred.data()[i]) - static_cast<double>(target.data()[i]);
    acc += d * d;
  }
  Tensor<T> out({1});
  out.at(0) = static_cast<T>(acc / static_cast<double>(count));
  if (detail::track<T>(pred, target)) {
    out.set_requires_grad(true);
    out.set_edge({pred, target}, [pred, target, count](TensorImpl<T>& o) mutable {
      const T c = static_cast<T>(2.0 / static_cast<double>(count));
      for (std::int64_t i = 0; i < count; ++i) {
        T d = (pred.data()[i] - target.data()[i]) * c * o.grad[0];
        if (pred.requires_grad()) pred.grad()[i] += d;
        if (target.requires_grad()) target.grad()[i] -= d;
      }
    });
  }
  return out;
}

// Mean negative log-probability of the target id per supervised row.
// `probs` rows are probability distributions; rows whose target equals
// `ignore_id` are excluded from the mean.
template <class T>
Tensor<T> nll_rows(const Tensor<T>& probs, const std::vector<int>& targets, int ignore_id = -1) {
  check(probs.rank() == 2, ErrorKind::shape, "nll_rows: matrix input required");
  check(static_cast<int>(targets.size()) == probs.dim(0), ErrorKind::shape,
        "nll_rows: one target per row required");
  const int n = probs.dim(1);
  std::int64_t supervised = 0;
  double acc = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (targets[i] == ignore_id) continue;
    check(targets[i] >= 0 && targets[i] < n, ErrorKind::range, "nll_rows: target id outside distribution");
    ++supervised;
    acc -= std::log(static_cast<double>(probs.at(static_cast<int>(i), targets[i])));
  }
  check(supervised > 0, ErrorKind::range, "nll_rows: no supervised positions");
  Tensor<T> out({1});
  out.at(0) = static_cast<T>(acc / static_cast<double>(supervised));
  if (detail::track<T>(probs)) {
    out.set_requires_grad(true);
    out.set_edge({probs}, [probs, targets, ignore_id, supervised, n](TensorImpl<T>& o) mutable {
      for (std::size_t i = 0; i < targets.size(); ++i) {
        if (targets[i] == ignore_id) continue;
        std::size_t p = i * static_cast<std::size_t>(n) + static_cast<std::size_t>(targets[i]);
        probs.grad()[p] -= o.grad[0] / (static_cast<T>(supervised) * probs.data()[p]);
      }
    });
  }
  return out;
}

// y = x·W + b convenience wrapper.
template <class T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
  return add_rowvec(matmul(x, w), b);
}

}  // namespace diffcap
