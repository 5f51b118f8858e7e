#pragma once

#include <set>
#include <string>

#include <json.hpp>

#include "diffcap/core/common.hpp"

namespace diffcap {

// Production scalar width. Oracle tests instantiate the templates with
// double where tighter numeric contracts are asserted.
using real = float;

// Every tunable knob of the artifact, loadable from one JSON object with
// full-default fallback. Unknown keys are rejected so typos surface as
// usage errors instead of silently training the wrong model.
struct Config {
  std::string model = "nar";  // "nar" (diffusion + parallel decode) or "ar" (greedy baseline)

  // optimization
  int epochs = 80;
  double lr = 1e-4;
  int batch_size = 8;
  std::uint64_t seed = 0;
  double grad_clip = 1.0;     // global-norm clip; 0 disables
  double w_mse = 1.0;         // weight of the reconstruction term
  double w_ce = 1.0;          // weight of the caption likelihood term
  double early_stop_loss = 0.0;  // stop when smoothed total loss dips below; 0 disables

  // diffusion
  int T = 1000;
  std::string schedule = "linear";
  double beta_start = 1e-4;
  double beta_end = 0.02;

  // architecture
  int n_denoiser_blocks = 12;
  int n_lm_blocks = 6;
  int n_heads = 4;
  int d_v = 32;    // latent width per token
  int ffn_mult = 4;
  int N_v = 20;    // fixed caption canvas length
  int d_f = 32;    // visual feature width (checked against the data at load)
  double drop_path = 0.0;
  bool residual_first_layer = false;  // restores the conventional first-layer residual

  // inference
  int n_steps = 20;
  double eta = 0.0;

  void validate() const {
    check(model == "nar" || model == "ar", ErrorKind::config, "config: model must be 'nar' or 'ar'");
    check(epochs >= 1, ErrorKind::config, "config: epochs must be >= 1");
    check(lr > 0.0, ErrorKind::config, "config: lr must be positive");
    check(batch_size >= 1, ErrorKind::config, "config: batch_size must be >= 1");
    check(grad_clip >= 0.0, ErrorKind::config, "config: grad_clip must be >= 0");
    check(w_mse >= 0.0 && w_ce >= 0.0, ErrorKind::config, "config: loss weights must be >= 0");
    check(T >= 1, ErrorKind::config, "config: T must be >= 1");
    check(0.0 < beta_start && beta_start <= beta_end && beta_end < 1.0, ErrorKind::config,
          "config: need 0 < beta_start <= beta_end < 1");
    check(n_denoiser_blocks >= 1 && n_lm_blocks >= 1, ErrorKind::config, "config: block counts must be >= 1");
    check(n_heads >= 1 && d_v >= n_heads && d_v % n_heads == 0, ErrorKind::config,
          "config: d_v must be a positive multiple of n_heads");
    check(ffn_mult >= 1, ErrorKind::config, "config: ffn_mult must be >= 1");
    check(N_v >= 2, ErrorKind::config, "config: N_v must be >= 2");
    check(d_f >= 1, ErrorKind::config, "config: d_f must be >= 1");
    check(0.0 <= drop_path && drop_path < 1.0, ErrorKind::config, "config: drop_path must lie in [0, 1)");
    check(1 <= n_steps && n_steps <= T, ErrorKind::config, "config: n_steps must lie in [1, T]");
    check(eta >= 0.0, ErrorKind::config, "config: eta must be >= 0");
    check(early_stop_loss >= 0.0, ErrorKind::config, "config: early_stop_loss must be >= 0");
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["model"] = model;
    j["epochs"] = epochs;
    j["lr"] = lr;
    j["batch_size"] = batch_size;
    j["seed"] = seed;
    j["grad_clip"] = grad_clip;
    j["w_mse"] = w_mse;
    j["w_ce"] = w_ce;
    j["early_stop_loss"] = early_stop_loss;
    j["T"] = T;
    j["schedule"] = schedule;
    j["beta_start"] = beta_start;
    j["beta_end"] = beta_end;
    j["n_denoiser_blocks"] = n_denoiser_blocks;
    j["n_lm_blocks"] = n_lm_blocks;
    j["n_heads"] = n_heads;
    j["d_v"] = d_v;
    j["ffn_mult"] = ffn_mult;
    j["N_v"] = N_v;
    j["d_f"] = d_f;
    j["drop_path"] = drop_path;
    j["residual_first_layer"] = residual_first_layer;
    j["n_steps"] = n_steps;
    j["eta"] = eta;
    return j;
  }

  static Config from_json(const nlohmann::json& j) {
    Config c;
    const std::set<std::string> known = {
        "model",      "epochs",   "lr",        "batch_size", "seed",
        "grad_clip",  "w_mse",    "w_ce",      "early_stop_loss", "T",
        "schedule",   "beta_start", "beta_end", "n_denoiser_blocks", "n_lm_blocks",
        "n_heads",    "d_v",      "ffn_mult",  "N_v",        "d_f",
        "drop_path",  "residual_first_layer",  "n_steps",    "eta"};
    for (auto it = j.begin(); it != j.end(); ++it)
      check(known.count(it.key()) > 0, ErrorKind::config, "config: unknown key '" + it.key() + "'");
    c.model = j.value("model", c.model);
    c.epochs = j.value("epochs", c.epochs);
    c.lr = j.value("lr", c.lr);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.seed = j.value("seed", c.seed);
    c.grad_clip = j.value("grad_clip", c.grad_clip);
    c.w_mse = j.value("w_mse", c.w_mse);
    c.w_ce = j.value("w_ce", c.w_ce);
    c.early_stop_loss = j.value("early_stop_loss", c.early_stop_loss);
    c.T = j.value("T", c.T);
    c.schedule = j.value("schedule", c.schedule);
    c.beta_start = j.value("beta_start", c.beta_start);
    c.beta_end = j.value("beta_end", c.beta_end);
    c.n_denoiser_blocks = j.value("n_denoiser_blocks", c.n_denoiser_blocks);
    c.n_lm_blocks = j.value("n_lm_blocks", c.n_lm_blocks);
    c.n_heads = j.value("n_heads", c.n_heads);
    c.d_v = j.value("d_v", c.d_v);
    c.ffn_mult = j.value("ffn_mult", c.ffn_mult);
    c.N_v = j.value("N_v", c.N_v);
    c.d_f = j.value("d_f", c.d_f);
    c.drop_path = j.value("drop_path", c.drop_path);
    c.residual_first_layer = j.value("residual_first_layer", c.residual_first_layer);
    c.n_steps = j.value("n_steps", c.n_steps);
    c.eta = j.value("eta", c.eta);
    c.validate();
    return c;
  }
};

}  // namespace diffcap
