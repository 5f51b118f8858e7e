#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <sstream>

#include "diffcap/data/synthetic.hpp"
#include "diffcap/train/adam.hpp"
#include "diffcap/train/checkpoint.hpp"
#include "diffcap/train/trainer.hpp"

using namespace diffcap;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& tag) {
  fs::path p = fs::temp_directory_path() / ("diffcap_train_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// Small corpus + matching config for fast end-to-end training tests.
struct TinySetup {
  fs::path dir;
  Dataset<double> data;
  Config cfg;
};

TinySetup tiny_setup(const std::string& tag, int n_examples = 4) {
  TinySetup s;
  s.dir = fresh_dir(tag);
  SyntheticSpec spec;
  spec.n_objects = 3;
  spec.n_actions = 3;
  spec.n_scenes = 3;
  spec.n_examples = n_examples;
  spec.d_f = 8;
  write_synthetic<double>(spec, s.dir.string());
  s.cfg = Config();
  s.cfg.T = 10;
  s.cfg.n_steps = 5;
  s.cfg.n_denoiser_blocks = 2;
  s.cfg.n_lm_blocks = 1;
  s.cfg.n_heads = 2;
  s.cfg.d_v = 8;
  s.cfg.ffn_mult = 2;
  s.cfg.N_v = 10;
  s.cfg.d_f = 8;
  s.cfg.batch_size = 2;
  s.cfg.lr = 3e-3;
  s.cfg.epochs = 2;
  s.cfg.seed = 7;
  s.data = load_dataset<double>((s.dir / "captions.jsonl").string(), (s.dir / "features").string(), s.cfg.N_v);
  return s;
}

}  // namespace

TEST_CASE("adam: two hand-computed steps with constant gradient") {
  // One scalar parameter p=1 with fixed gradient 2, lr 0.1, no clipping.
  // Step 1: m̂=2, v̂=4 → p = 1 − 0.1·2/(2+1e-8).
  // Step 2: the bias corrections cancel again → p ≈ 0.8.
  NamedParams<double> params;
  Tensor<double> p({1}, 1.0);
  params.add("p", p);
  Adam<double> opt(0.1, /*clip=*/0.0);

  p.ensure_grad();
  p.grad()[0] = 2.0;
  opt.step(params);
  REQUIRE(p.at(0) == Catch::Approx(1.0 - 0.1 * 2.0 / (2.0 + 1e-8)).epsilon(1e-12));
  REQUIRE(opt.last_grad_norm() == Catch::Approx(2.0));

  p.grad()[0] = 2.0;
  opt.step(params);
  // m2 = 0.9·0.2 + 0.1·2 = 0.38, m̂ = 0.38/0.19 = 2; v̂ = 4 likewise.
  const double step1 = 0.1 * 2.0 / (2.0 + 1e-8);
  const double m2 = 0.9 * 0.2 + 0.1 * 2.0, v2 = 0.999 * 0.004 + 0.001 * 4.0;
  const double mhat = m2 / (1.0 - 0.81), vhat = v2 / (1.0 - 0.999 * 0.999);
  REQUIRE(p.at(0) == Catch::Approx(1.0 - step1 - 0.1 * mhat / (std::sqrt(vhat) + 1e-8)).epsilon(1e-12));
  REQUIRE(opt.steps() == 2);
}

TEST_CASE("adam: global-norm clipping rescales the whole gradient vector") {
  // Gradients (3,4) have norm 5; clip 1 scales them to (0.6, 0.8). The second
  // step then uses moments that remember the clipped values.
  NamedParams<double> params;
  Tensor<double> p = Tensor<double>::from({2}, {1.0, 1.0});
  params.add("p", p);
  Adam<double> opt(0.1, /*clip=*/1.0);
  p.ensure_grad();
  p.grad()[0] = 3.0;
  p.grad()[1] = 4.0;
  opt.step(params);
  REQUIRE(opt.last_grad_norm() == Catch::Approx(5.0));
  double m0 = 0.1 * 0.6, v0 = 0.001 * 0.36;
  double expect0 = 1.0 - 0.1 * (m0 / 0.1) / (std::sqrt(v0 / 0.001) + 1e-8);
  double m1 = 0.1 * 0.8, v1 = 0.001 * 0.64;
  double expect1 = 1.0 - 0.1 * (m1 / 0.1) / (std::sqrt(v1 / 0.001) + 1e-8);
  REQUIRE(p.at(0) == Catch::Approx(expect0).epsilon(1e-12));
  REQUIRE(p.at(1) == Catch::Approx(expect1).epsilon(1e-12));

  // Below the clip threshold nothing is rescaled.
  p.grad()[0] = 0.3;
  p.grad()[1] = 0.4;
  opt.step(params);
  REQUIRE(opt.last_grad_norm() == Catch::Approx(0.5));
}

TEST_CASE("adam: a never-touched parameter stays exactly put") {
  NamedParams<double> params;
  Tensor<double> p({2}, 1.5);
  params.add("p", p);
  Adam<double> opt(0.1);
  opt.step(params);  // no grad buffer yet -> treated as zero
  REQUIRE(p.at(0) == 1.5);
  REQUIRE(p.at(1) == 1.5);
  REQUIRE(opt.last_grad_norm() == 0.0);
}

TEST_CASE("checkpoint: byte round trip and header introspection") {
  TinySetup s = tiny_setup("ckpt");
  Trainer<double> tr(s.cfg, s.data);
  Rng state(42);
  std::string bytes = encode_checkpoint(s.cfg, s.data.vocab, tr.params(), state, 3);

  LoadedCheckpoint<double> ck = decode_checkpoint<double>(bytes, "mem");
  REQUIRE(ck.epoch == 3);
  REQUIRE(ck.cfg.to_json() == s.cfg.to_json());
  REQUIRE(ck.vocab == s.data.vocab);
  REQUIRE(ck.rng == state);
  REQUIRE(ck.tensors.size() == tr.params().size());

  // Re-encoding the loaded state reproduces the file byte for byte.
  NamedParams<double> loaded;
  for (auto& [name, t] : ck.tensors) loaded.add(name, t);
  REQUIRE(encode_checkpoint(ck.cfg, ck.vocab, loaded, ck.rng, ck.epoch) == bytes);
}

TEST_CASE("checkpoint: corrupt inputs are rejected") {
  TinySetup s = tiny_setup("ckptbad");
  Trainer<double> tr(s.cfg, s.data);
  Rng state(1);
  std::string bytes = encode_checkpoint(s.cfg, s.data.vocab, tr.params(), state, 0);

  std::string bad_magic = bytes;
  bad_magic[2] = 'X';
  REQUIRE_THROWS_AS(decode_checkpoint<double>(bad_magic, "mem"), Error);

  std::string truncated = bytes.substr(0, bytes.size() - 5);
  REQUIRE_THROWS_MATCHES(decode_checkpoint<double>(truncated, "mem"), Error,
                         Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("truncated")));

  std::string trailing = bytes + "x";
  REQUIRE_THROWS_MATCHES(decode_checkpoint<double>(trailing, "mem"), Error,
                         Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("trailing")));
}

TEST_CASE("checkpoint: assignment refuses name and shape mismatches") {
  TinySetup s = tiny_setup("ckptmis");
  Trainer<double> tr(s.cfg, s.data);
  Rng state(1);
  LoadedCheckpoint<double> ck =
      decode_checkpoint<double>(encode_checkpoint(s.cfg, s.data.vocab, tr.params(), state, 0), "mem");

  NamedParams<double> wrong_count;
  Tensor<double> t({1});
  wrong_count.add("only", t);
  REQUIRE_THROWS_AS(assign_params(ck, wrong_count), Error);

  LoadedCheckpoint<double> renamed = ck;
  renamed.tensors[0].first = "not.the.name";
  REQUIRE_THROWS_MATCHES(assign_params(renamed, tr.params()), Error,
                         Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("not.the.name")));

  LoadedCheckpoint<double> reshaped = ck;
  reshaped.tensors[0].second = Tensor<double>({1, 1});
  REQUIRE_THROWS_AS(assign_params(reshaped, tr.params()), Error);
}

TEST_CASE("training: loss decreases while memorizing a tiny corpus") {
  TinySetup s = tiny_setup("memorize");
  Trainer<double> tr(s.cfg, s.data);
  std::vector<int> batch = {0, 1, 2, 3};
  double first = 0.0, last = 0.0;
  for (int step = 0; step < 50; ++step) {
    StepStats st = tr.train_step(batch);
    if (step == 0) first = st.total;
    last = st.total;
    REQUIRE(std::isfinite(st.total));
  }
  INFO("first " << first << " last " << last);
  REQUIRE(last < first);
  REQUIRE(last < 0.7 * first);
}

TEST_CASE("training: baseline objective also learns") {
  TinySetup s = tiny_setup("armemo");
  s.cfg.model = "ar";
  Trainer<double> tr(s.cfg, s.data);
  std::vector<int> batch = {0, 1, 2, 3};
  double first = 0.0, last = 0.0;
  for (int step = 0; step < 40; ++step) {
    StepStats st = tr.train_step(batch);
    REQUIRE(st.mse == 0.0);
    if (step == 0) first = st.total;
    last = st.total;
  }
  REQUIRE(last < first);
}

TEST_CASE("training: identical seeds give bitwise-identical runs") {
  TinySetup s1 = tiny_setup("det1");
  TinySetup s2 = tiny_setup("det2");
  Trainer<double> a(s1.cfg, s1.data);
  Trainer<double> b(s2.cfg, s2.data);
  for (int step = 0; step < 5; ++step) {
    StepStats sa = a.train_step({0, 1});
    StepStats sb = b.train_step({0, 1});
    REQUIRE(sa.total == sb.total);
  }
  for (std::size_t i = 0; i < a.params().size(); ++i)
    REQUIRE(a.params().items[i].second.vec() == b.params().items[i].second.vec());
}

TEST_CASE("training: full loop writes log, checkpoints, and stops early when asked") {
  TinySetup s = tiny_setup("loop");
  s.cfg.epochs = 3;
  fs::path out = fresh_dir("loop_out");
  TrainOptions opts;
  opts.log_path = (out / "train.csv").string();
  opts.checkpoint_dir = (out / "ckpt").string();

  Trainer<double> tr(s.cfg, s.data);
  TrainOutcome res = tr.train(opts);
  REQUIRE(res.epochs_run == 3);
  REQUIRE_FALSE(res.early_stopped);
  REQUIRE(fs::exists(out / "ckpt" / "epoch_0001.dfvc"));
  REQUIRE(fs::exists(out / "ckpt" / "epoch_0003.dfvc"));
  REQUIRE(res.last_checkpoint == (out / "ckpt" / "epoch_0003.dfvc").string());

  // Log: header + one row per step; 4 examples, batch 2 -> 2 steps/epoch.
  std::istringstream log(read_text_file(opts.log_path));
  std::string line;
  REQUIRE(std::getline(log, line));
  REQUIRE(line == train_log_header());
  int rows = 0;
  while (std::getline(log, line)) {
    if (line.empty()) continue;
    ++rows;
    REQUIRE(std::count(line.begin(), line.end(), ',') == 6);
  }
  REQUIRE(rows == 6);
  REQUIRE(tr.log().size() == 6);
  REQUIRE(tr.log().front().epoch == 1);
  REQUIRE(tr.log().back().epoch == 3);
  REQUIRE(tr.log().back().step == 6);

  // An absurdly generous loss target stops after the first epoch.
  TinySetup s2 = tiny_setup("loopstop");
  s2.cfg.epochs = 50;
  s2.cfg.early_stop_loss = 1e6;
  Trainer<double> tr2(s2.cfg, s2.data);
  TrainOutcome res2 = tr2.train(TrainOptions{});
  REQUIRE(res2.early_stopped);
  REQUIRE(res2.epochs_run == 1);
}

TEST_CASE("training: resume from a checkpoint continues the same stream") {
  TinySetup s = tiny_setup("resume");
  s.cfg.epochs = 1;
  fs::path out = fresh_dir("resume_out");
  TrainOptions opts;
  opts.checkpoint_dir = out.string();
  Trainer<double> tr(s.cfg, s.data);
  TrainOutcome res = tr.train(opts);
  REQUIRE(res.epochs_run == 1);

  LoadedCheckpoint<double> ck = read_checkpoint<double>(res.last_checkpoint);
  REQUIRE(ck.epoch == 1);
  ck.cfg.epochs = 2;
  Trainer<double> resumed(ck, s.data);
  REQUIRE(resumed.epoch() == 1);
  // Parameters came back exactly (float32 payload, so compare after the
  // same round trip).
  for (std::size_t i = 0; i < tr.params().size(); ++i) {
    const auto& orig = tr.params().items[i].second;
    const auto& back = resumed.params().items[i].second;
    for (std::int64_t j = 0; j < orig.numel(); ++j)
      REQUIRE(static_cast<float>(orig.at(static_cast<int>(j))) ==
              static_cast<float>(back.at(static_cast<int>(j))));
  }
  REQUIRE(resumed.rng() == tr.rng());
  TrainOutcome res2 = resumed.train(TrainOptions{});
  REQUIRE(res2.epochs_run == 1);  // only the remaining epoch

  // A dataset with a different vocabulary is refused.
  TinySetup other = tiny_setup("resume_other", 6);
  REQUIRE_THROWS_AS(Trainer<double>(ck, other.data), Error);
}

TEST_CASE("training: non-finite loss aborts with a numeric diagnosis") {
  TinySetup s = tiny_setup("nan");
  Trainer<double> tr(s.cfg, s.data);
  // Poison one weight so the forward pass blows up.
  tr.params().find("denoiser.head.w").at(0, 0) = std::numeric_limits<double>::infinity();
  try {
    tr.train_step({0, 1});
    FAIL("expected a numeric abort");
  } catch (const Error& e) {
    REQUIRE(e.kind() == ErrorKind::numeric);
    REQUIRE_THAT(e.what(), Catch::Matchers::ContainsSubstring("non-finite"));
    REQUIRE_THAT(e.what(), Catch::Matchers::ContainsSubstring("timesteps"));
  }
}

TEST_CASE("training: config/data mismatches are rejected up front") {
  TinySetup s = tiny_setup("mismatch");
  Config bad = s.cfg;
  bad.d_f = s.cfg.d_f + 1;
  REQUIRE_THROWS_MATCHES(Trainer<double>(bad, s.data), Error,
                         Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("feature width")));
}

TEST_CASE("training: checkpoints carry optimizer moments that round-trip") {
  TinySetup s = tiny_setup("moments");
  s.cfg.epochs = 1;
  Trainer<double> tr(s.cfg, s.data);
  fs::path out = fresh_dir("moments_out");
  TrainOptions opts;
  opts.checkpoint_dir = out.string();
  TrainOutcome res = tr.train(opts);

  LoadedCheckpoint<double> ck = read_checkpoint<double>(res.last_checkpoint);
  REQUIRE(ck.has_opt);
  REQUIRE(ck.opt_steps == 2);  // 4 examples / batch 2
  REQUIRE(ck.opt_m.size() == tr.params().size());
  REQUIRE(ck.opt_v.size() == tr.params().size());
  // Doubles survive the file exactly.
  for (std::size_t i = 0; i < ck.opt_m.size(); ++i)
    for (std::size_t j = 0; j < ck.opt_m[i].size(); ++j) {
      REQUIRE(std::isfinite(ck.opt_m[i][j]));
      REQUIRE(ck.opt_v[i][j] >= 0.0);  // second moments are squares
    }

  // save -> load -> save is byte-identical, moments included.
  NamedParams<double> loaded;
  for (auto& [name, t] : ck.tensors) loaded.add(name, t);
  const std::string bytes = read_file_bytes(res.last_checkpoint);
  REQUIRE(encode_checkpoint(ck.cfg, ck.vocab, loaded, ck.rng, ck.epoch, ck.opt_steps, ck.opt_m,
                            ck.opt_v) == bytes);

  // Checkpoints written outside training carry no optimizer section.
  const std::string plain = encode_checkpoint(ck.cfg, ck.vocab, loaded, ck.rng, ck.epoch);
  LoadedCheckpoint<double> ck2 = decode_checkpoint<double>(plain, "mem");
  REQUIRE_FALSE(ck2.has_opt);
  REQUIRE(ck2.opt_m.empty());
}

TEST_CASE("training: interrupted-and-resumed run matches an uninterrupted one") {
  // float32 parameter storage makes the checkpoint round trip exact at this
  // scalar width, so with RNG state and optimizer moments both restored the
  // two trajectories must agree byte for byte.
  fs::path dir = fresh_dir("resume_exact");
  SyntheticSpec spec;
  spec.n_objects = 3;
  spec.n_actions = 3;
  spec.n_scenes = 3;
  spec.n_examples = 4;
  spec.d_f = 8;
  write_synthetic<float>(spec, dir.string());
  Config cfg;
  cfg.T = 10;
  cfg.n_steps = 5;
  cfg.n_denoiser_blocks = 2;
  cfg.n_lm_blocks = 1;
  cfg.n_heads = 2;
  cfg.d_v = 8;
  cfg.ffn_mult = 2;
  cfg.N_v = 10;
  cfg.d_f = 8;
  cfg.batch_size = 2;
  cfg.lr = 3e-3;
  cfg.seed = 7;
  Dataset<float> data =
      load_dataset<float>((dir / "captions.jsonl").string(), (dir / "features").string(), cfg.N_v);

  cfg.epochs = 2;
  Trainer<float> straight(cfg, data);
  TrainOptions opts_a;
  opts_a.checkpoint_dir = fresh_dir("resume_exact_a").string();
  TrainOutcome res_a = straight.train(opts_a);
  REQUIRE(res_a.epochs_run == 2);

  Config cfg1 = cfg;
  cfg1.epochs = 1;
  Trainer<float> first(cfg1, data);
  TrainOptions opts_b1;
  opts_b1.checkpoint_dir = fresh_dir("resume_exact_b1").string();
  TrainOutcome res_b1 = first.train(opts_b1);
  LoadedCheckpoint<float> ck = read_checkpoint<float>(res_b1.last_checkpoint);
  ck.cfg.epochs = 2;
  Trainer<float> resumed(ck, data);
  TrainOptions opts_b2;
  opts_b2.checkpoint_dir = fresh_dir("resume_exact_b2").string();
  TrainOutcome res_b2 = resumed.train(opts_b2);
  REQUIRE(res_b2.epochs_run == 1);

  REQUIRE(read_file_bytes(res_a.last_checkpoint) == read_file_bytes(res_b2.last_checkpoint));
}
