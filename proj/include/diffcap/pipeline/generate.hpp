#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "diffcap/core/threading.hpp"
#include "diffcap/diffusion/ddim.hpp"
#include "diffcap/model/nar.hpp"
#include "diffcap/text/codec.hpp"

namespace diffcap {

// Caption a single feature matrix: draw the latent at the plan's largest
// timestep from a standard gaussian, walk the plan backwards with
// deterministic (or eta-noised) reverse jumps, hand the final clean-sequence
// prediction to the sentence head, and read the canvas out greedily. The
// denoiser runs exactly once per plan entry; with eta = 0 the only randomness
// is the initial draw, so a fixed stream gives a fixed caption.
template <class T>
TokenSeq generate(const Tensor<T>& feats, const NarModel<T>& model, const VarianceSchedule& sched,
                  const DdimPlan& plan, const Vocabulary& vocab, Rng& rng,
                  int* denoiser_calls = nullptr) {
  NoGradGuard eval_only;
  check(!plan.tau.empty(), ErrorKind::config, "generate: empty reverse plan");
  check(plan.tau.back() == sched.T(), ErrorKind::config,
        "generate: plan must start from the terminal timestep " + std::to_string(sched.T()));

  Tensor<T> shape_ref({model.denoiser.n_v, model.denoiser.d_v});
  LatentSeq<T> x{gaussian_like(shape_ref, rng), plan.tau.back()};

  int calls = 0;
  Tensor<T> x0_hat;
  for (std::size_t k = plan.tau.size(); k >= 1; --k) {
    const int t = plan.tau[k - 1];
    x0_hat = model.denoiser.forward(x.x, feats, t, /*training=*/false, rng);
    ++calls;
    if (k > 1) x = ddim_step(x, x0_hat, t, plan.tau[k - 2], sched, plan, rng);
  }
  if (denoiser_calls != nullptr) *denoiser_calls = calls;

  for (const T v : x0_hat.vec())
    check(std::isfinite(static_cast<double>(v)), ErrorKind::generation,
          "generate: non-finite clean-sequence prediction (corrupt or diverged parameters)");

  const Tensor<T> probs = model.lm.forward(x0_hat, /*training=*/false, rng);
  return postprocess_ids(decode(probs, vocab).ids);
}

template <class T>
struct BatchGeneration {
  std::vector<TokenSeq> tokens;
  std::vector<double> wall_ms;  // per-item monotonic wall time
};

// Caption many feature matrices, one independent RNG stream per item so the
// result is a pure function of (parameters, features, seed) regardless of how
// the items are scheduled across workers. Each worker writes only its own
// output slot.
template <class T>
BatchGeneration<T> generate_batch(const std::vector<Tensor<T>>& feats, const NarModel<T>& model,
                                  const VarianceSchedule& sched, const DdimPlan& plan,
                                  const Vocabulary& vocab, const std::vector<std::uint64_t>& seeds) {
  check(feats.size() == seeds.size(), ErrorKind::shape,
        "generate_batch: " + std::to_string(feats.size()) + " feature matrices vs " +
            std::to_string(seeds.size()) + " seeds");
  BatchGeneration<T> out;
  out.tokens.resize(feats.size());
  out.wall_ms.resize(feats.size());
  parallel_for(static_cast<std::int64_t>(feats.size()), [&](std::int64_t i) {
    const auto idx = static_cast<std::size_t>(i);
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(seeds[idx]);
    out.tokens[idx] = generate(feats[idx], model, sched, plan, vocab, rng);
    const auto t1 = std::chrono::steady_clock::now();
    out.wall_ms[idx] = std::chrono::duration<double, std::milli>(t1 - t0).count();
  });
  return out;
}

}  // namespace diffcap
