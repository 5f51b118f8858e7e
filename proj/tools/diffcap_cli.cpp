// Command-line front end: train / generate / eval / bench / synth / schedule.
// Exit codes: 0 success, 2 usage or input problem, 3 numeric failure.
#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "diffcap/bench/bench.hpp"
#include "diffcap/data/dataset.hpp"
#include "diffcap/data/synthetic.hpp"
#include "diffcap/metrics/eval.hpp"
#include "diffcap/pipeline/generate.hpp"
#include "diffcap/train/restore.hpp"
#include "diffcap/train/trainer.hpp"

namespace fs = std::filesystem;
using diffcap::real;

namespace {

int exit_code_for(const diffcap::Error& e) {
  const auto k = e.kind();
  return (k == diffcap::ErrorKind::numeric || k == diffcap::ErrorKind::generation) ? 3 : 2;
}

diffcap::Config load_config_file(const std::string& path) {
  const std::string text = diffcap::read_text_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    diffcap::fail(diffcap::ErrorKind::config, path + ": not valid JSON: " + e.what());
  }
  return diffcap::Config::from_json(j);
}

// Sorted .dfvf paths so output order never depends on directory enumeration.
std::vector<std::string> feature_files(const std::string& dir) {
  diffcap::check(fs::is_directory(dir), diffcap::ErrorKind::ingest,
                 dir + ": not a directory of feature files");
  std::vector<std::string> out;
  for (const auto& ent : fs::directory_iterator(dir))
    if (ent.is_regular_file() && ent.path().extension() == ".dfvf") out.push_back(ent.path().string());
  std::sort(out.begin(), out.end());
  diffcap::check(!out.empty(), diffcap::ErrorKind::ingest, dir + ": no .dfvf feature files");
  return out;
}

struct TrainArgs {
  std::string config_path, captions, features, out_dir, resume;
  int epochs = -1, batch_size = -1;
  double lr = -1.0, early_stop = -1.0;
  std::int64_t seed = -1;
  std::string model;
  bool verbose = false;
};

int cmd_train(const TrainArgs& a) {
  fs::create_directories(a.out_dir);
  diffcap::TrainOptions opts;
  opts.log_path = (fs::path(a.out_dir) / "train_log.csv").string();
  opts.checkpoint_dir = a.out_dir;
  opts.verbose = a.verbose;

  diffcap::TrainOutcome outcome;
  if (a.resume.empty()) {
    diffcap::check(!a.config_path.empty(), diffcap::ErrorKind::config,
                   "--config is required unless --resume is given");
    diffcap::Config cfg = load_config_file(a.config_path);
    if (a.epochs >= 0) cfg.epochs = a.epochs;
    if (a.batch_size >= 0) cfg.batch_size = a.batch_size;
    if (a.lr >= 0.0) cfg.lr = a.lr;
    if (a.early_stop >= 0.0) cfg.early_stop_loss = a.early_stop;
    if (a.seed >= 0) cfg.seed = static_cast<std::uint64_t>(a.seed);
    if (!a.model.empty()) cfg.model = a.model;
    cfg.validate();
    const auto data = diffcap::load_dataset<real>(a.captions, a.features, cfg.N_v);
    diffcap::Trainer<real> trainer(cfg, data);
    outcome = trainer.train(opts);
  } else {
    diffcap::check(a.config_path.empty(), diffcap::ErrorKind::config,
                   "--resume takes its config from the checkpoint; drop --config");
    diffcap::check(a.model.empty() && a.seed < 0, diffcap::ErrorKind::config,
                   "--resume keeps the checkpoint's model and seed; only epochs, batch size, lr and "
                   "early-stop may be overridden");
    auto ck = diffcap::read_checkpoint<real>(a.resume);
    if (a.epochs >= 0) ck.cfg.epochs = a.epochs;
    if (a.batch_size >= 0) ck.cfg.batch_size = a.batch_size;
    if (a.lr >= 0.0) ck.cfg.lr = a.lr;
    if (a.early_stop >= 0.0) ck.cfg.early_stop_loss = a.early_stop;
    ck.cfg.validate();
    const auto data = diffcap::load_dataset<real>(a.captions, a.features, ck.cfg.N_v);
    diffcap::Trainer<real> trainer(ck, data);
    outcome = trainer.train(opts);
  }
  std::cout << "trained " << outcome.epochs_run << " epoch(s), final mean loss " << outcome.final_total
            << (outcome.early_stopped ? " (early stop)" : "") << "\n";
  if (!outcome.last_checkpoint.empty()) std::cout << "checkpoint: " << outcome.last_checkpoint << "\n";
  std::cout << "log: " << opts.log_path << "\n";
  return 0;
}

struct GenerateArgs {
  std::string checkpoint, features, out_path;
  int steps = 0;  // 0: keep the checkpoint's configured step count
  double eta = -1.0;
  std::uint64_t seed = 0;
};

int cmd_generate(const GenerateArgs& a) {
  const auto ck = diffcap::read_checkpoint<real>(a.checkpoint);
  const auto nar = diffcap::restore_nar(ck);
  const int steps = a.steps > 0 ? a.steps : nar.cfg.n_steps;
  const double eta = a.eta >= 0.0 ? a.eta : nar.cfg.eta;
  const auto sched =
      diffcap::VarianceSchedule::make(nar.cfg.T, nar.cfg.schedule, nar.cfg.beta_start, nar.cfg.beta_end);
  const auto plan = diffcap::make_plan(steps, nar.cfg.T, eta);

  std::vector<std::string> ids;
  std::vector<diffcap::Tensor<real>> feats;
  std::vector<std::uint64_t> seeds;
  for (const auto& path : feature_files(a.features)) {
    auto file = diffcap::read_features<real>(path);
    diffcap::check(file.rows.dim(1) == nar.cfg.d_f, diffcap::ErrorKind::ingest,
                   path + ": feature width " + std::to_string(file.rows.dim(1)) +
                       " does not match the model's " + std::to_string(nar.cfg.d_f));
    seeds.push_back(a.seed + static_cast<std::uint64_t>(ids.size()));
    ids.push_back(file.video_id);
    feats.push_back(std::move(file.rows));
  }

  const auto batch = diffcap::generate_batch(feats, nar.model, sched, plan, nar.vocab, seeds);
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    nlohmann::ordered_json j;
    j["video_id"] = ids[i];
    j["caption"] = diffcap::caption_text(batch.tokens[i], nar.vocab);
    out += j.dump();
    out += '\n';
  }
  diffcap::write_text_file(a.out_path, out);
  std::cout << "wrote " << ids.size() << " caption(s) to " << a.out_path << "\n";
  return 0;
}

int cmd_eval(const std::string& hyp_path, const std::string& ref_path) {
  const auto hyp_lines = diffcap::parse_caption_lines(diffcap::read_text_file(hyp_path), hyp_path);
  const auto ref_lines = diffcap::parse_caption_lines(diffcap::read_text_file(ref_path), ref_path);

  std::map<std::string, std::vector<std::string>> ref_by_id;
  for (const auto& [id, cap] : ref_lines) ref_by_id[id].push_back(cap);

  std::vector<std::string> hyps;
  std::vector<std::vector<std::string>> refs;
  std::set<std::string> hyp_ids;
  std::string missing;
  for (const auto& [id, cap] : hyp_lines) {
    diffcap::check(hyp_ids.insert(id).second, diffcap::ErrorKind::eval,
                   hyp_path + ": duplicate hypothesis for id '" + id + "'");
    auto it = ref_by_id.find(id);
    if (it == ref_by_id.end()) {
      missing += missing.empty() ? id : ", " + id;
      continue;
    }
    hyps.push_back(cap);
    refs.push_back(it->second);
  }
  diffcap::check(missing.empty(), diffcap::ErrorKind::eval,
                 "ids with no reference: " + missing);
  for (const auto& [id, caps] : ref_by_id)
    if (hyp_ids.find(id) == hyp_ids.end()) missing += missing.empty() ? id : ", " + id;
  diffcap::check(missing.empty(), diffcap::ErrorKind::eval,
                 "ids with no hypothesis: " + missing);

  const diffcap::MetricScores s = diffcap::evaluate_captions(hyps, refs);
  nlohmann::ordered_json j;
  j["n"] = hyps.size();
  j["bleu4"] = s.bleu4;
  j["rouge_l"] = s.rouge_l;
  j["cider_d"] = s.cider_d;
  std::cout << j.dump() << "\n";
  return 0;
}

struct BenchArgs {
  std::string nar_checkpoint, ar_checkpoint, captions, features, out_path;
  std::vector<int> lengths = {5, 10, 15, 20};
  int repeats = 5;
  std::uint64_t seed = 0;
};

int cmd_bench(const BenchArgs& a) {
  // Timing fairness: everything below runs one call at a time on this thread.
  const auto nar_ck = diffcap::read_checkpoint<real>(a.nar_checkpoint);
  const auto nar = diffcap::restore_nar(nar_ck);
  const auto ar_ck = diffcap::read_checkpoint<real>(a.ar_checkpoint);
  const auto ar = diffcap::restore_ar(ar_ck);
  const auto sched =
      diffcap::VarianceSchedule::make(nar.cfg.T, nar.cfg.schedule, nar.cfg.beta_start, nar.cfg.beta_end);
  const auto plan = diffcap::make_plan(nar.cfg.n_steps, nar.cfg.T, nar.cfg.eta);

  const auto data = diffcap::load_dataset<real>(a.captions, a.features, nar.cfg.N_v);
  std::map<std::string, std::vector<std::string>> caps_by_id;
  for (const auto& ex : data.items) caps_by_id[ex.video_id].push_back(ex.caption);
  std::vector<diffcap::Tensor<real>> feats;
  std::vector<std::vector<std::string>> refs;
  std::set<std::string> seen;
  for (const auto& ex : data.items) {
    if (!seen.insert(ex.video_id).second) continue;  // one bench item per video
    feats.push_back(ex.feats);
    refs.push_back(caps_by_id.at(ex.video_id));
  }

  const auto rows =
      diffcap::run_bench(nar.model, sched, plan, ar.model, feats, refs, data.vocab, a.lengths, a.repeats, a.seed);
  std::string csv = diffcap::bench_csv_header() + "\n";
  for (const auto& r : rows) csv += diffcap::bench_csv_line(r) + "\n";
  if (a.out_path.empty()) {
    std::cout << csv;
  } else {
    diffcap::write_text_file(a.out_path, csv);
    std::cout << "wrote " << rows.size() << " row(s) to " << a.out_path << "\n";
  }
  return 0;
}

struct SynthArgs {
  std::string out_dir;
  diffcap::SyntheticSpec spec;
};

int cmd_synth(const SynthArgs& a) {
  a.spec.validate();
  diffcap::write_synthetic<real>(a.spec, a.out_dir);
  const auto data = diffcap::make_synthetic<real>(a.spec);
  std::cout << "wrote " << data.ids.size() << " example(s) under " << a.out_dir << "\n";
  std::cout << "captions: " << (fs::path(a.out_dir) / "captions.jsonl").string() << "\n";
  std::cout << "features: " << (fs::path(a.out_dir) / "features").string() << "\n";
  return 0;
}

int cmd_schedule(const std::string& config_path, const std::string& out_path) {
  const diffcap::Config cfg = load_config_file(config_path);
  const auto sched = diffcap::VarianceSchedule::make(cfg.T, cfg.schedule, cfg.beta_start, cfg.beta_end);
  const std::string text = sched.to_json().dump();
  if (out_path.empty()) {
    std::cout << text << "\n";
  } else {
    diffcap::write_text_file(out_path, text + "\n");
    std::cout << "wrote schedule snapshot to " << out_path << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conditional-diffusion video captioner"};
  app.require_subcommand(1);

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "Train a model and write per-epoch checkpoints");
  train->add_option("--config", ta.config_path, "JSON config file (fresh runs; --resume reads the checkpoint's)");
  train->add_option("--captions", ta.captions, "JSONL caption file")->required();
  train->add_option("--features", ta.features, "directory of .dfvf feature files")->required();
  train->add_option("--out", ta.out_dir, "output directory for checkpoints and the CSV log")->required();
  train->add_option("--resume", ta.resume, "checkpoint to continue from");
  train->add_option("--epochs", ta.epochs, "override config epochs");
  train->add_option("--batch-size", ta.batch_size, "override config batch size");
  train->add_option("--lr", ta.lr, "override config learning rate");
  train->add_option("--early-stop", ta.early_stop, "override early-stop mean-loss threshold");
  train->add_option("--seed", ta.seed, "override config seed");
  train->add_option("--model", ta.model, "override config model (nar|ar)");
  train->add_flag("--verbose", ta.verbose, "per-epoch progress on stderr");

  GenerateArgs ga;
  auto* gen = app.add_subcommand("generate", "Caption every feature file in a directory");
  gen->add_option("--checkpoint", ga.checkpoint, "trained diffusion checkpoint")->required();
  gen->add_option("--features", ga.features, "directory of .dfvf feature files")->required();
  gen->add_option("--out", ga.out_path, "output JSONL path")->required();
  gen->add_option("--steps", ga.steps, "reverse steps (default: checkpoint config)");
  gen->add_option("--eta", ga.eta, "stochasticity (default: checkpoint config)");
  gen->add_option("--seed", ga.seed, "base seed; item i uses seed + i");

  std::string hyp_path, ref_path;
  auto* ev = app.add_subcommand("eval", "Score hypothesis captions against references");
  ev->add_option("--hyp", hyp_path, "hypothesis JSONL (one caption per id)")->required();
  ev->add_option("--ref", ref_path, "reference JSONL (one or more captions per id)")->required();

  BenchArgs ba;
  auto* bench = app.add_subcommand("bench", "Latency/quality comparison across target lengths");
  bench->add_option("--checkpoint", ba.nar_checkpoint, "diffusion checkpoint")->required();
  bench->add_option("--ar-checkpoint", ba.ar_checkpoint, "sequential-baseline checkpoint")->required();
  bench->add_option("--captions", ba.captions, "JSONL caption file (references)")->required();
  bench->add_option("--features", ba.features, "directory of .dfvf feature files")->required();
  bench->add_option("--lengths", ba.lengths, "target lengths")->delimiter(',');
  bench->add_option("--repeats", ba.repeats, "timing repeats per item");
  bench->add_option("--seed", ba.seed, "seed for the diffusion draws");
  bench->add_option("--out", ba.out_path, "CSV path (default: stdout)");

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "Write a synthetic corpus with known ground truth");
  synth->add_option("--out", sa.out_dir, "output directory")->required();
  synth->add_option("--examples", sa.spec.n_examples, "number of examples");
  synth->add_option("--objects", sa.spec.n_objects, "object concepts");
  synth->add_option("--actions", sa.spec.n_actions, "action concepts");
  synth->add_option("--scenes", sa.spec.n_scenes, "scene concepts");
  synth->add_option("--feature-dim", sa.spec.d_f, "feature width");
  synth->add_option("--noise", sa.spec.noise_std, "feature noise std");
  synth->add_option("--seed", sa.spec.seed, "generator seed");

  std::string sched_config, sched_out;
  auto* sched = app.add_subcommand("schedule", "Dump the variance schedule as JSON");
  sched->add_option("--config", sched_config, "JSON config file")->required();
  sched->add_option("--out", sched_out, "output path (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*train) return cmd_train(ta);
    if (*gen) return cmd_generate(ga);
    if (*ev) return cmd_eval(hyp_path, ref_path);
    if (*bench) return cmd_bench(ba);
    if (*synth) return cmd_synth(sa);
    if (*sched) return cmd_schedule(sched_config, sched_out);
  } catch (const diffcap::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
