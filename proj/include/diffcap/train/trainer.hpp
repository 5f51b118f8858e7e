#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "diffcap/data/dataset.hpp"
#include "diffcap/diffusion/forward.hpp"
#include "diffcap/diffusion/schedule.hpp"
#include "diffcap/model/ar.hpp"
#include "diffcap/model/nar.hpp"
#include "diffcap/train/adam.hpp"
#include "diffcap/train/checkpoint.hpp"

namespace diffcap {

struct StepStats {
  double total = 0.0, mse = 0.0, ce = 0.0;
};

struct TrainLogRow {
  int epoch = 0;
  std::int64_t step = 0;
  double total = 0.0, mse = 0.0, ce = 0.0, lr = 0.0, wall_ms = 0.0;
};

inline std::string train_log_header() { return "epoch,step,loss_total,loss_mse,loss_ce,lr,wall_ms"; }

inline std::string train_log_line(const TrainLogRow& r) {
  char buf[192];
  std::snprintf(buf, sizeof(buf), "%d,%lld,%.8f,%.8f,%.8f,%.8g,%.3f", r.epoch,
                static_cast<long long>(r.step), r.total, r.mse, r.ce, r.lr, r.wall_ms);
  return buf;
}

struct TrainOptions {
  std::string log_path;       // CSV stream; empty disables
  std::string checkpoint_dir; // per-epoch checkpoints; empty disables
  bool verbose = false;       // per-epoch line on stderr
};

struct TrainOutcome {
  int epochs_run = 0;
  double final_total = 0.0;
  bool early_stopped = false;
  std::string last_checkpoint;
};

// Joint training driver. One instance drives either objective, chosen by
// cfg.model: the diffusion path optimizes reconstruction + caption likelihood
// end to end, the baseline path optimizes teacher-forced likelihood only.
// Per-example gradients accumulate sequentially in a fixed order, so a given
// seed yields a bit-identical run regardless of thread settings.
template <class T>
class Trainer {
 public:
  Trainer(const Config& cfg, const Dataset<T>& data) : cfg_(cfg), data_(&data), opt_(cfg.lr, cfg.grad_clip) {
    cfg_.validate();
    validate_data();
    sched_ = VarianceSchedule::make(cfg_.T, cfg_.schedule, cfg_.beta_start, cfg_.beta_end);
    Rng master(cfg_.seed);
    Rng init_rng = master.split(1);
    rng_ = master.split(2);
    if (is_nar()) {
      nar_ = NarModel<T>::init(cfg_, data.vocab.size(), init_rng);
      nar_.collect(params_);
    } else {
      ar_ = ArModel<T>::init(cfg_, data.vocab.size(), init_rng);
      ar_.collect(params_);
    }
  }

  // Rebuild a trainer from a checkpoint and keep training on `data`. The
  // dataset must reproduce the checkpoint's vocabulary. Optimizer moments are
  // restored when the checkpoint carries them (training checkpoints do), so
  // the continued run follows the exact trajectory of an uninterrupted one.
  Trainer(const LoadedCheckpoint<T>& ck, const Dataset<T>& data)
      : cfg_(ck.cfg), data_(&data), rng_(ck.rng), epoch_(ck.epoch), opt_(ck.cfg.lr, ck.cfg.grad_clip) {
    check(data.vocab == ck.vocab, ErrorKind::config,
          "resume: dataset vocabulary differs from the checkpoint's");
    validate_data();
    sched_ = VarianceSchedule::make(cfg_.T, cfg_.schedule, cfg_.beta_start, cfg_.beta_end);
    Rng unused_init(0);
    if (is_nar()) {
      nar_ = NarModel<T>::init(cfg_, data.vocab.size(), unused_init);
      nar_.collect(params_);
    } else {
      ar_ = ArModel<T>::init(cfg_, data.vocab.size(), unused_init);
      ar_.collect(params_);
    }
    assign_params(ck, params_);
    if (ck.has_opt) opt_.restore(ck.opt_steps, ck.opt_m, ck.opt_v, params_);
  }

  bool is_nar() const { return cfg_.model == "nar"; }
  const Config& config() const { return cfg_; }
  const NamedParams<T>& params() const { return params_; }
  const NarModel<T>& nar() const { return nar_; }
  const ArModel<T>& ar() const { return ar_; }
  const VarianceSchedule& schedule() const { return sched_; }
  const Rng& rng() const { return rng_; }
  int epoch() const { return epoch_; }
  const std::vector<TrainLogRow>& log() const { return log_; }

  // One optimizer step over the given example indices.
  StepStats train_step(const std::vector<int>& batch) {
    check(!batch.empty(), ErrorKind::config, "train_step: empty batch");
    params_.zero_grads();
    Tensor<T> total_sum;
    double mse_sum = 0.0, ce_sum = 0.0;
    std::vector<int> drawn_t;
    for (int idx : batch) {
      check(0 <= idx && idx < static_cast<int>(data_->items.size()), ErrorKind::range,
            "train_step: example index out of range");
      const Example<T>& ex = data_->items[static_cast<std::size_t>(idx)];
      Tensor<T> item_total;
      double item_mse = 0.0, item_ce = 0.0;
      if (is_nar()) {
        const int t = static_cast<int>(rng_.uniform_int(1, cfg_.T));
        drawn_t.push_back(t);
        Tensor<T> x0 = nar_.emb.embed(ex.canvas);
        LatentSeq<T> noisy = q_sample(LatentSeq<T>{x0, 0}, t, sched_, rng_);
        Tensor<T> x0_hat = nar_.denoiser.forward(noisy.x, ex.feats, t, /*training=*/true, rng_);
        Tensor<T> s = nar_.lm.forward(x0_hat, /*training=*/true, rng_);
        Tensor<T> l_mse = mse_loss(x0_hat, x0);
        Tensor<T> l_ce = nll_rows(s, ex.canvas.ids);  // every canvas position is supervised
        item_mse = static_cast<double>(l_mse.item());
        item_ce = static_cast<double>(l_ce.item());
        item_total = add(scale(l_mse, static_cast<T>(cfg_.w_mse)), scale(l_ce, static_cast<T>(cfg_.w_ce)));
      } else {
        auto [inputs, targets] = ar_teacher_pair(ex.canvas);
        Tensor<T> logits = ar_.forward_logits(inputs, ex.feats, /*training=*/true, rng_);
        Tensor<T> l_ce = nll_rows(softmax(logits, 1), targets, /*ignore_id=*/kPadId);
        item_ce = static_cast<double>(l_ce.item());
        item_total = l_ce;
      }
      mse_sum += item_mse;
      ce_sum += item_ce;
      total_sum = total_sum.defined() ? add(total_sum, item_total) : item_total;
    }
    const T inv_b = static_cast<T>(1.0 / static_cast<double>(batch.size()));
    Tensor<T> loss = scale(total_sum, inv_b);

    const double loss_v = static_cast<double>(loss.item());
    if (!std::isfinite(loss_v)) abort_non_finite(loss_v, mse_sum, ce_sum, batch, drawn_t);

    loss.backward();
    opt_.step(params_);

    StepStats st;
    st.total = loss_v;
    st.mse = mse_sum / static_cast<double>(batch.size());
    st.ce = ce_sum / static_cast<double>(batch.size());
    return st;
  }

  // Full loop: per-epoch reshuffle, sequential batches, CSV streaming,
  // per-epoch checkpoints, optional early stop on the epoch's mean loss.
  TrainOutcome train(const TrainOptions& opts) {
    namespace fs = std::filesystem;
    std::ofstream log_file;
    if (!opts.log_path.empty()) {
      log_file.open(opts.log_path, std::ios::trunc);
      check(log_file.good(), ErrorKind::io, "cannot open training log '" + opts.log_path + "'");
      log_file << train_log_header() << '\n';
    }
    if (!opts.checkpoint_dir.empty()) fs::create_directories(opts.checkpoint_dir);

    TrainOutcome out;
    const int n = static_cast<int>(data_->items.size());
    const int start_epoch = epoch_;
    for (int e = start_epoch; e < cfg_.epochs; ++e) {
      const std::vector<int> order = shuffled_indices(n, rng_);
      double epoch_total = 0.0;
      int epoch_steps = 0;
      for (int b0 = 0; b0 < n; b0 += cfg_.batch_size) {
        const int b1 = std::min(n, b0 + cfg_.batch_size);
        std::vector<int> batch(order.begin() + b0, order.begin() + b1);
        const auto t0 = std::chrono::steady_clock::now();
        StepStats st = train_step(batch);
        const double wall_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        ++global_step_;
        ++epoch_steps;
        epoch_total += st.total;
        TrainLogRow row{e + 1, global_step_, st.total, st.mse, st.ce, cfg_.lr, wall_ms};
        log_.push_back(row);
        if (log_file.is_open()) log_file << train_log_line(row) << '\n' << std::flush;
      }
      epoch_ = e + 1;
      const double epoch_mean = epoch_total / std::max(1, epoch_steps);
      out.final_total = epoch_mean;
      out.epochs_run = epoch_ - start_epoch;
      if (opts.verbose)
        std::cerr << "epoch " << epoch_ << "/" << cfg_.epochs << " mean loss " << epoch_mean << "\n";
      if (!opts.checkpoint_dir.empty()) {
        char name[32];
        std::snprintf(name, sizeof(name), "epoch_%04d.dfvc", epoch_);
        const std::string path = (fs::path(opts.checkpoint_dir) / name).string();
        save(path);
        out.last_checkpoint = path;
      }
      if (cfg_.early_stop_loss > 0.0 && epoch_mean < cfg_.early_stop_loss) {
        out.early_stopped = true;
        break;
      }
    }
    return out;
  }

  void save(const std::string& path) const {
    write_checkpoint(path, cfg_, data_->vocab, params_, rng_, epoch_, opt_.steps(), opt_.moments_m(),
                     opt_.moments_v());
  }

 private:
  void validate_data() {
    check(!data_->items.empty(), ErrorKind::ingest, "trainer: dataset is empty");
    check(data_->d_f == cfg_.d_f, ErrorKind::config,
          "trainer: dataset feature width " + std::to_string(data_->d_f) + " does not match config d_f " +
              std::to_string(cfg_.d_f));
    for (const auto& ex : data_->items)
      check(static_cast<int>(ex.canvas.ids.size()) == cfg_.N_v, ErrorKind::config,
            "trainer: canvas length mismatch for video '" + ex.video_id + "'");
  }

  [[noreturn]] void abort_non_finite(double loss_v, double mse_sum, double ce_sum,
                                     const std::vector<int>& batch, const std::vector<int>& drawn_t) {
    std::ostringstream os;
    os << "training aborted: non-finite loss " << loss_v << " at step " << (global_step_ + 1)
       << " (sum mse " << mse_sum << ", sum ce " << ce_sum << "; examples";
    for (int idx : batch) os << ' ' << idx;
    os << "; timesteps";
    if (drawn_t.empty())
      os << " n/a";
    else
      for (int t : drawn_t) os << ' ' << t;
    os << ")";
    fail(ErrorKind::numeric, os.str());
  }

  Config cfg_;
  const Dataset<T>* data_;
  VarianceSchedule sched_{};
  NarModel<T> nar_;
  ArModel<T> ar_;
  NamedParams<T> params_;
  Rng rng_{0};
  int epoch_ = 0;
  std::int64_t global_step_ = 0;
  Adam<T> opt_;
  std::vector<TrainLogRow> log_;
};

}  // namespace diffcap
