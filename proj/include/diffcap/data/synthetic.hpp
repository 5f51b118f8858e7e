#pragma once

#include <array>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "diffcap/core/ops.hpp"
#include "diffcap/core/rng.hpp"
#include "diffcap/data/dataset.hpp"
#include "diffcap/data/features.hpp"

namespace diffcap {

// Concept word lists for the synthetic corpus. Disjoint by construction, so
// the vocabulary size is exactly 4 reserved + 4 template words
// ("a", "is", "in", "the") + the distinct concept words in use.
inline constexpr std::array<const char*, 16> kSyntheticObjects = {
    "dog",   "cat",    "bird",   "car",  "boat", "horse", "robot", "child",
    "train", "plane",  "monkey", "turtle", "dancer", "chef", "diver", "clown"};
inline constexpr std::array<const char*, 16> kSyntheticActions = {
    "running", "jumping",  "sleeping", "spinning", "diving",  "singing",  "walking", "flying",
    "racing",  "rolling",  "climbing", "skating",  "cooking", "painting", "drifting", "bouncing"};
inline constexpr std::array<const char*, 16> kSyntheticScenes = {
    "park",   "kitchen", "street", "forest", "beach", "garage", "river", "stadium",
    "desert", "museum",  "yard",   "harbor", "attic", "meadow", "tunnel", "market"};

struct SyntheticSpec {
  int n_objects = 8;
  int n_actions = 8;
  int n_scenes = 8;
  int n_examples = 500;
  int d_f = 32;
  double noise_std = 0.0;
  std::uint64_t seed = 123;

  void validate() const {
    check(1 <= n_objects && n_objects <= static_cast<int>(kSyntheticObjects.size()), ErrorKind::config,
          "synthetic: n_objects must lie in [1, " + std::to_string(kSyntheticObjects.size()) + "]");
    check(1 <= n_actions && n_actions <= static_cast<int>(kSyntheticActions.size()), ErrorKind::config,
          "synthetic: n_actions must lie in [1, " + std::to_string(kSyntheticActions.size()) + "]");
    check(1 <= n_scenes && n_scenes <= static_cast<int>(kSyntheticScenes.size()), ErrorKind::config,
          "synthetic: n_scenes must lie in [1, " + std::to_string(kSyntheticScenes.size()) + "]");
    const long long total = 1LL * n_objects * n_actions * n_scenes;
    check(1 <= n_examples && n_examples <= total, ErrorKind::config,
          "synthetic: n_examples must lie in [1, " + std::to_string(total) + "] (distinct concept triples)");
    check(d_f >= 1, ErrorKind::config, "synthetic: d_f must be >= 1");
    check(noise_std >= 0.0, ErrorKind::config, "synthetic: noise_std must be >= 0");
  }
};

// One generated example: caption from the fixed template plus one feature row
// per concept (object, action, scene), each the concept's code vector plus
// optional white noise.
template <class T>
struct SyntheticData {
  SyntheticSpec spec;
  Tensor<T> object_codes, action_codes, scene_codes;  // codebooks, one row per concept
  std::vector<std::string> ids;
  std::vector<std::string> captions;
  std::vector<Tensor<T>> feats;                // one N_f x d_f matrix per example (N_f = 3)
  std::vector<std::array<int, 3>> triples;     // ground-truth concept indices
};

template <class T>
SyntheticData<T> make_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  SyntheticData<T> out;
  out.spec = spec;

  // Codebooks first, then the shuffle, then per-example noise: a fixed draw
  // order makes regeneration byte-identical for a given spec.
  Rng rng(spec.seed);
  // Unit-scale code coordinates, matching the token-embedding scale the
  // denoiser's cross-attention mixes them with.
  const double code_std = 1.0;
  out.object_codes = randn<T>({spec.n_objects, spec.d_f}, rng, code_std);
  out.action_codes = randn<T>({spec.n_actions, spec.d_f}, rng, code_std);
  out.scene_codes = randn<T>({spec.n_scenes, spec.d_f}, rng, code_std);

  const int total = spec.n_objects * spec.n_actions * spec.n_scenes;
  std::vector<int> order = shuffled_indices(total, rng);

  out.ids.reserve(static_cast<std::size_t>(spec.n_examples));
  out.captions.reserve(static_cast<std::size_t>(spec.n_examples));
  out.feats.reserve(static_cast<std::size_t>(spec.n_examples));
  out.triples.reserve(static_cast<std::size_t>(spec.n_examples));
  for (int e = 0; e < spec.n_examples; ++e) {
    const int flat = order[static_cast<std::size_t>(e)];
    const int obj = flat / (spec.n_actions * spec.n_scenes);
    const int act = (flat / spec.n_scenes) % spec.n_actions;
    const int scn = flat % spec.n_scenes;

    char buf[16];
    std::snprintf(buf, sizeof(buf), "vid%04d", e);
    out.ids.emplace_back(buf);

    std::string caption = std::string("a ") + kSyntheticObjects[static_cast<std::size_t>(obj)] + " is " +
                          kSyntheticActions[static_cast<std::size_t>(act)] + " in the " +
                          kSyntheticScenes[static_cast<std::size_t>(scn)];
    out.captions.push_back(std::move(caption));

    Tensor<T> f({3, spec.d_f});
    const Tensor<T>* codes[3] = {&out.object_codes, &out.action_codes, &out.scene_codes};
    const int rows[3] = {obj, act, scn};
    for (int r = 0; r < 3; ++r)
      for (int j = 0; j < spec.d_f; ++j) {
        double v = static_cast<double>(codes[r]->at(rows[r], j));
        if (spec.noise_std > 0.0) v += spec.noise_std * rng.gaussian();
        f.at(r, j) = static_cast<T>(v);
      }
    out.feats.push_back(std::move(f));
    out.triples.push_back({obj, act, scn});
  }
  return out;
}

// Nearest-code classifier: maps each feature row back to the index of the
// closest codebook row (squared L2). With zero noise this inverts the
// generator exactly; it is the reference oracle for recovery tests.
template <class T>
std::array<int, 3> recover_triple(const SyntheticData<T>& data, const Tensor<T>& feats) {
  check(feats.rank() == 2 && feats.dim(0) == 3 && feats.dim(1) == data.spec.d_f, ErrorKind::shape,
        "recover_triple: expected 3x" + std::to_string(data.spec.d_f) + " features");
  const Tensor<T>* codes[3] = {&data.object_codes, &data.action_codes, &data.scene_codes};
  std::array<int, 3> out{};
  for (int r = 0; r < 3; ++r) {
    double best = 0.0;
    int best_i = -1;
    for (int i = 0; i < codes[r]->dim(0); ++i) {
      double d2 = 0.0;
      for (int j = 0; j < data.spec.d_f; ++j) {
        const double d = static_cast<double>(feats.at(r, j)) - static_cast<double>(codes[r]->at(i, j));
        d2 += d * d;
      }
      if (best_i < 0 || d2 < best) {
        best = d2;
        best_i = i;
      }
    }
    out[static_cast<std::size_t>(r)] = best_i;
  }
  return out;
}

inline std::string synthetic_caption_of(const std::array<int, 3>& triple) {
  return std::string("a ") + kSyntheticObjects[static_cast<std::size_t>(triple[0])] + " is " +
         kSyntheticActions[static_cast<std::size_t>(triple[1])] + " in the " +
         kSyntheticScenes[static_cast<std::size_t>(triple[2])];
}

// Materialize the corpus on disk: <dir>/captions.jsonl plus one feature file
// per example under <dir>/features/. Regeneration with the same spec writes
// byte-identical files.
template <class T>
void write_synthetic(const SyntheticSpec& spec, const std::string& dir) {
  SyntheticData<T> data = make_synthetic<T>(spec);
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(dir) / "features");
  std::string captions;
  for (std::size_t e = 0; e < data.ids.size(); ++e) {
    nlohmann::ordered_json j;
    j["video_id"] = data.ids[e];
    j["caption"] = data.captions[e];
    captions += j.dump();
    captions += '\n';
    const std::string path = (fs::path(dir) / "features" / (data.ids[e] + ".dfvf")).string();
    write_features(path, data.ids[e], data.feats[e]);
  }
  write_text_file((fs::path(dir) / "captions.jsonl").string(), captions);
}

}  // namespace diffcap
