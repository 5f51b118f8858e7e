#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "diffcap/core/grad_check.hpp"
#include "diffcap/core/ops.hpp"
#include "diffcap/core/rng.hpp"

using diffcap::Error;
using diffcap::grad_check;
using diffcap::Rng;
using diffcap::Tensor;

namespace {
Tensor<double> random_matrix(int m, int n, Rng& rng) { return diffcap::randn<double>({m, n}, rng); }
}  // namespace

TEST_CASE("matmul hand cases") {
  auto eye = Tensor<double>::from({2, 2}, {1, 0, 0, 1});
  auto m = Tensor<double>::from({2, 2}, {3.5, -1, 2, 0.25});
  auto prod = diffcap::matmul(eye, m);
  for (int i = 0; i < 4; ++i) REQUIRE(prod.at(i) == m.at(i));

  auto a = Tensor<double>::from({2, 2}, {1, 2, 3, 4});
  auto ones = Tensor<double>::from({2, 1}, {1, 1});
  auto y = diffcap::matmul(a, ones);
  REQUIRE(y.at(0, 0) == 3.0);
  REQUIRE(y.at(1, 0) == 7.0);

  REQUIRE_THROWS_AS(diffcap::matmul(a, Tensor<double>({3, 2})), Error);
}

TEST_CASE("matmul gradient vs finite differences on random 5x7 · 7x3") {
  Rng rng(42);
  auto a = random_matrix(5, 7, rng);
  auto b = random_matrix(7, 3, rng);
  b.set_requires_grad(true);
  auto fa = [&] { return diffcap::sum(diffcap::mul(diffcap::matmul(a, b), diffcap::matmul(a, b))); };
  REQUIRE(grad_check<double>(fa, a, 1e-5) < 1e-4);
  auto fb = [&] { return diffcap::sum(diffcap::mul(diffcap::matmul(a, b), diffcap::matmul(a, b))); };
  REQUIRE(grad_check<double>(fb, b, 1e-5) < 1e-4);
}

TEST_CASE("matmul_nt equals matmul against transposed operand") {
  Rng rng(9);
  auto a = random_matrix(4, 6, rng);
  auto b = random_matrix(5, 6, rng);
  auto bt = Tensor<double>({6, 5});
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 6; ++j) bt.at(j, i) = b.at(i, j);
  auto y1 = diffcap::matmul_nt(a, b);
  auto y2 = diffcap::matmul(a, bt);
  for (int i = 0; i < y1.numel(); ++i) REQUIRE(y1.at(i) == Catch::Approx(y2.at(i)).epsilon(1e-12));

  auto f = [&] { return diffcap::sum(diffcap::mul(diffcap::matmul_nt(a, b), diffcap::matmul_nt(a, b))); };
  REQUIRE(grad_check<double>(f, a, 1e-5) < 1e-4);
  REQUIRE(grad_check<double>(f, b, 1e-5) < 1e-4);
}

TEST_CASE("softmax hand cases and row-sum invariant") {
  auto z = Tensor<double>::from({1, 3}, {0, 0, 0});
  auto s = diffcap::softmax(z);
  for (int j = 0; j < 3; ++j) REQUIRE(s.at(0, j) == Catch::Approx(1.0 / 3).epsilon(1e-12));

  auto big = Tensor<double>::from({1, 3}, {1000, 0, 0});
  auto sb = diffcap::softmax(big);
  REQUIRE(sb.at(0, 0) == Catch::Approx(1.0).margin(1e-12));
  REQUIRE(sb.at(0, 1) == Catch::Approx(0.0).margin(1e-12));
  REQUIRE(sb.at(0, 2) == Catch::Approx(0.0).margin(1e-12));

  Rng rng(5);
  auto x = random_matrix(8, 13, rng);
  auto sm = diffcap::softmax(x);
  for (int i = 0; i < 8; ++i) {
    double rowsum = 0.0;
    for (int j = 0; j < 13; ++j) rowsum += sm.at(i, j);
    REQUIRE(std::abs(rowsum - 1.0) < 1e-9);
  }

  // column axis
  auto sc = diffcap::softmax(x, 0);
  for (int j = 0; j < 13; ++j) {
    double colsum = 0.0;
    for (int i = 0; i < 8; ++i) colsum += sc.at(i, j);
    REQUIRE(std::abs(colsum - 1.0) < 1e-9);
  }
}

TEST_CASE("softmax gradient vs finite differences") {
  Rng rng(6);
  auto x = random_matrix(3, 5, rng);
  auto w = random_matrix(3, 5, rng);  // fixed projection so the scalar depends on all outputs
  auto f = [&] { return diffcap::sum(diffcap::mul(diffcap::softmax(x), w)); };
  REQUIRE(grad_check<double>(f, x, 1e-5) < 1e-4);
}

TEST_CASE("layernorm hand cases") {
  auto gain = Tensor<double>::from({4}, {1, 1, 1, 1});
  auto bias = Tensor<double>({4});
  auto constant = Tensor<double>::from({1, 4}, {2.5, 2.5, 2.5, 2.5});
  auto yc = diffcap::layernorm(constant, gain, bias);
  for (int j = 0; j < 4; ++j) REQUIRE(yc.at(0, j) == Catch::Approx(0.0).margin(1e-9));

  auto two = Tensor<double>::from({1, 2}, {1, 3});
  auto g2 = Tensor<double>::from({2}, {1, 1});
  auto b2 = Tensor<double>({2});
  auto y2 = diffcap::layernorm(two, g2, b2, 1e-12);
  REQUIRE(y2.at(0, 0) == Catch::Approx(-1.0).epsilon(1e-5));
  REQUIRE(y2.at(0, 1) == Catch::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("layernorm output rows have near-zero mean pre-affine") {
  Rng rng(17);
  auto x = random_matrix(6, 9, rng);
  auto gain = Tensor<double>::from({9}, std::vector<double>(9, 1.0));
  auto bias = Tensor<double>({9});
  auto y = diffcap::layernorm(x, gain, bias, 1e-5);
  for (int i = 0; i < 6; ++i) {
    double mean = 0.0;
    for (int j = 0; j < 9; ++j) mean += y.at(i, j);
    mean /= 9;
    REQUIRE(std::abs(mean) < 1e-7);
  }
}

TEST_CASE("layernorm gradient vs finite differences") {
  Rng rng(18);
  auto x = random_matrix(3, 6, rng);
  auto gain = diffcap::randn<double>({6}, rng, 0.5, 1.0);
  auto bias = diffcap::randn<double>({6}, rng, 0.1);
  auto w = random_matrix(3, 6, rng);
  auto f = [&] { return diffcap::sum(diffcap::mul(diffcap::layernorm(x, gain, bias), w)); };
  REQUIRE(grad_check<double>(f, x, 1e-5) < 1e-4);
  REQUIRE(grad_check<double>(f, gain, 1e-5) < 1e-4);
  REQUIRE(grad_check<double>(f, bias, 1e-5) < 1e-4);
}

TEST_CASE("elementwise op gradients") {
  Rng rng(21);
  auto a = random_matrix(4, 4, rng);
  auto b = random_matrix(4, 4, rng);
  auto v = diffcap::randn<double>({4}, rng);
  auto w = random_matrix(4, 4, rng);

  auto f_add = [&] { return diffcap::sum(diffcap::mul(diffcap::add(a, b), w)); };
  REQUIRE(grad_check<double>(f_add, a, 1e-5) < 1e-4);
  REQUIRE(grad_check<double>(f_add, b, 1e-5) < 1e-4);

  auto f_sub = [&] { return diffcap::sum(diffcap::mul(diffcap::sub(a, b), w)); };
  REQUIRE(grad_check<double>(f_sub, b, 1e-5) < 1e-4);

  auto f_mul = [&] { return diffcap::sum(diffcap::mul(diffcap::mul(a, b), w)); };
  REQUIRE(grad_check<double>(f_mul, a, 1e-5) < 1e-4);

  auto f_lin = [&] { return diffcap::sum(diffcap::mul(diffcap::lincomb(0.3, a, -1.7, b), w)); };
  REQUIRE(grad_check<double>(f_lin, a, 1e-5) < 1e-4);
  REQUIRE(grad_check<double>(f_lin, b, 1e-5) < 1e-4);

  auto f_row = [&] { return diffcap::sum(diffcap::mul(diffcap::add_rowvec(a, v), w)); };
  REQUIRE(grad_check<double>(f_row, a, 1e-5) < 1e-4);
  REQUIRE(grad_check<double>(f_row, v, 1e-5) < 1e-4);

  auto f_gelu = [&] { return diffcap::sum(diffcap::mul(diffcap::gelu(a), w)); };
  REQUIRE(grad_check<double>(f_gelu, a, 1e-5) < 1e-4);
}

TEST_CASE("grad_check trivial oracles") {
  auto x = Tensor<double>::from({2}, {1.0, 2.0});
  auto f_sq = [&] { return diffcap::sum(diffcap::mul(x, x)); };
  REQUIRE(grad_check<double>(f_sq, x, 1e-5) < 1e-8);
  {
    // analytic gradient of sum(x²) is [2, 4]
    x.set_requires_grad(true);
    x.ensure_grad();
    x.zero_grad();
    auto y = f_sq();
    y.backward();
    REQUIRE(x.grad()[0] == Catch::Approx(2.0));
    REQUIRE(x.grad()[1] == Catch::Approx(4.0));
    x.set_requires_grad(false);
  }
  auto f_lin = [&] { return diffcap::sum(x); };
  REQUIRE(grad_check<double>(f_lin, x, 1e-5) < 1e-10);
}

TEST_CASE("lookup_rows gathers and scatters correctly") {
  auto table = Tensor<double>::from({4, 2}, {0, 0, 10, 11, 20, 21, 30, 31});
  table.set_requires_grad(true);
  auto out = diffcap::lookup_rows(table, {2, 2, 0}, /*frozen_id=*/0);
  REQUIRE(out.at(0, 0) == 20.0);
  REQUIRE(out.at(1, 1) == 21.0);
  REQUIRE(out.at(2, 0) == 0.0);
  auto y = diffcap::sum(out);
  y.backward();
  // row 2 looked up twice; rows 1 and 3 untouched; row 0 frozen
  REQUIRE(table.grad()[2 * 2 + 0] == Catch::Approx(2.0));
  REQUIRE(table.grad()[2 * 2 + 1] == Catch::Approx(2.0));
  REQUIRE(table.grad()[1 * 2 + 0] == 0.0);
  REQUIRE(table.grad()[3 * 2 + 1] == 0.0);
  REQUIRE(table.grad()[0] == 0.0);
  REQUIRE(table.grad()[1] == 0.0);

  REQUIRE_THROWS_AS(diffcap::lookup_rows(table, {4}), Error);
}

TEST_CASE("slice and concat round-trip with gradients") {
  Rng rng(30);
  auto x = random_matrix(3, 8, rng);
  auto left = diffcap::slice_cols(x, 0, 3);
  auto right = diffcap::slice_cols(x, 3, 8);
  auto back = diffcap::concat_cols<double>({left, right});
  for (int i = 0; i < x.numel(); ++i) REQUIRE(back.at(i) == x.at(i));

  auto w = random_matrix(3, 8, rng);
  auto f = [&] {
    auto l = diffcap::slice_cols(x, 0, 3);
    auto r = diffcap::slice_cols(x, 3, 8);
    return diffcap::sum(diffcap::mul(diffcap::concat_cols<double>({l, r}), w));
  };
  REQUIRE(grad_check<double>(f, x, 1e-5) < 1e-8);
}

TEST_CASE("mse loss values and gradient") {
  Rng rng(33);
  auto a = random_matrix(3, 4, rng);
  REQUIRE(diffcap::mse_loss(a, a).item() == 0.0);

  auto shifted = a.clone();
  for (int i = 0; i < shifted.numel(); ++i) shifted.at(i) += 0.75;
  REQUIRE(diffcap::mse_loss(shifted, a).item() == Catch::Approx(0.75 * 0.75).epsilon(1e-10));

  auto target = random_matrix(3, 4, rng);
  auto f = [&] { return diffcap::mse_loss(a, target); };
  REQUIRE(grad_check<double>(f, a, 1e-5) < 1e-6);
}

TEST_CASE("per-row negative log-likelihood") {
  // one-hot rows on the target → zero loss
  auto onehot = Tensor<double>::from({2, 3}, {1, 0, 0, 0, 0, 1});
  REQUIRE(diffcap::nll_rows(onehot, {0, 2}).item() == Catch::Approx(0.0).margin(1e-12));

  // uniform over 4 classes → ln 4 per position
  auto uni = Tensor<double>::from({2, 4}, {0.25, 0.25, 0.25, 0.25, 0.25, 0.25, 0.25, 0.25});
  REQUIRE(diffcap::nll_rows(uni, {1, 3}).item() == Catch::Approx(std::log(4.0)).epsilon(1e-12));

  // hand case: −(log 0.5 + log 0.25)/2
  auto p = Tensor<double>::from({2, 2}, {0.5, 0.5, 0.75, 0.25});
  REQUIRE(diffcap::nll_rows(p, {0, 1}).item() ==
          Catch::Approx(-(std::log(0.5) + std::log(0.25)) / 2).epsilon(1e-12));

  // ignored rows drop out of the mean
  REQUIRE(diffcap::nll_rows(p, {0, -7}, -7).item() == Catch::Approx(-std::log(0.5)).epsilon(1e-12));

  // gradient through softmax → nll
  Rng rng(40);
  auto z = random_matrix(3, 5, rng);
  auto f = [&] { return diffcap::nll_rows(diffcap::softmax(z), {1, 4, 0}); };
  REQUIRE(grad_check<double>(f, z, 1e-5) < 1e-4);
}

TEST_CASE("droppath semantics") {
  Rng rng(50);
  auto x = diffcap::randn<double>({4, 3}, rng);

  auto id1 = diffcap::droppath(x, 0.0, true, rng);
  for (int i = 0; i < x.numel(); ++i) REQUIRE(id1.at(i) == x.at(i));

  auto id2 = diffcap::droppath(x, 0.9, false, rng);
  for (int i = 0; i < x.numel(); ++i) REQUIRE(id2.at(i) == x.at(i));

  REQUIRE_THROWS_AS(diffcap::droppath(x, 1.0, true, rng), Error);
  REQUIRE_THROWS_AS(diffcap::droppath(x, -0.1, true, rng), Error);

  // Monte Carlo keep fraction at rate 0.5 over 10⁴ draws
  int kept = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    auto y = diffcap::droppath(x, 0.5, true, rng);
    if (y.at(0) != 0.0) ++kept;
  }
  double frac = static_cast<double>(kept) / n;
  REQUIRE(frac > 0.48);
  REQUIRE(frac < 0.52);

  // kept samples are scaled by 1/(1−rate)
  Rng fixed(1);
  Tensor<double> y;
  do {
    y = diffcap::droppath(x, 0.5, true, fixed);
  } while (y.at(0) == 0.0);
  REQUIRE(y.at(0) == Catch::Approx(2.0 * x.at(0)).epsilon(1e-12));
}

TEST_CASE("causal mask blocks attention to the future") {
  auto s = Tensor<double>::from({3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9});
  auto masked = diffcap::add_causal_mask(s);
  auto attn = diffcap::softmax(masked);
  REQUIRE(attn.at(0, 0) == Catch::Approx(1.0).margin(1e-12));
  REQUIRE(attn.at(0, 1) == Catch::Approx(0.0).margin(1e-12));
  REQUIRE(attn.at(0, 2) == Catch::Approx(0.0).margin(1e-12));
  REQUIRE(attn.at(1, 2) == Catch::Approx(0.0).margin(1e-12));
  double row1 = attn.at(1, 0) + attn.at(1, 1);
  REQUIRE(row1 == Catch::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("float path keeps looser row-sum contract") {
  Rng rng(60);
  auto x = diffcap::randn<float>({16, 32}, rng);
  auto s = diffcap::softmax(x);
  for (int i = 0; i < 16; ++i) {
    double rowsum = 0.0;
    for (int j = 0; j < 32; ++j) rowsum += static_cast<double>(s.at(i, j));
    REQUIRE(std::abs(rowsum - 1.0) < 1e-6);
  }
}
