#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <set>
#include <string>

#include "diffcap/data/dataset.hpp"
#include "diffcap/data/features.hpp"
#include "diffcap/data/synthetic.hpp"

using namespace diffcap;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& tag) {
  fs::path p = fs::temp_directory_path() / ("diffcap_data_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("feature files: byte round trip preserves everything") {
  Rng rng(5);
  Tensor<float> rows = randn<float>({4, 6}, rng);
  std::string bytes = encode_features("clip42", rows);
  FeatureFile<float> back = decode_features<float>(bytes, "mem");
  REQUIRE(back.video_id == "clip42");
  REQUIRE(back.rows.shape() == Shape{4, 6});
  REQUIRE(back.rows.vec() == rows.vec());
  REQUIRE(encode_features(back.video_id, back.rows) == bytes);
}

TEST_CASE("feature files: corrupted inputs are rejected with io errors") {
  Rng rng(5);
  Tensor<float> rows = randn<float>({2, 3}, rng);
  std::string bytes = encode_features("x", rows);

  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  REQUIRE_THROWS_MATCHES(decode_features<float>(bad_magic, "mem"), Error,
                         Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("magic")));

  std::string truncated = bytes.substr(0, bytes.size() - 2);
  REQUIRE_THROWS_MATCHES(decode_features<float>(truncated, "mem"), Error,
                         Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("truncated")));

  std::string trailing = bytes + "zz";
  REQUIRE_THROWS_MATCHES(decode_features<float>(trailing, "mem"), Error,
                         Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("trailing")));

  std::string bad_version = bytes;
  bad_version[4] = 9;
  REQUIRE_THROWS_MATCHES(decode_features<float>(bad_version, "mem"), Error,
                         Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("version")));
}

TEST_CASE("feature files: disk round trip") {
  fs::path dir = fresh_dir("feat");
  Rng rng(7);
  Tensor<float> rows = randn<float>({3, 5}, rng);
  const std::string path = (dir / "v.dfvf").string();
  write_features(path, "v", rows);
  FeatureFile<float> back = read_features<float>(path);
  REQUIRE(back.video_id == "v");
  REQUIRE(back.rows.vec() == rows.vec());
}

TEST_CASE("dataset: every caption pairs with its video and shared features load once") {
  fs::path dir = fresh_dir("pairing");
  fs::create_directories(dir / "features");
  Rng rng(11);
  Tensor<float> fa = randn<float>({2, 4}, rng);
  Tensor<float> fb = randn<float>({3, 4}, rng);
  write_features((dir / "features" / "vidA.dfvf").string(), "vidA", fa);
  write_features((dir / "features" / "vidB.dfvf").string(), "vidB", fb);
  // Two videos x two captions each -> four examples.
  write_text_file((dir / "captions.jsonl").string(),
                  "{\"video_id\":\"vidA\",\"caption\":\"a dog is running in the park\"}\n"
                  "{\"video_id\":\"vidA\",\"caption\":\"a dog is jumping in the park\"}\n"
                  "{\"video_id\":\"vidB\",\"caption\":\"a cat is sleeping in the kitchen\"}\n"
                  "\n"
                  "{\"video_id\":\"vidB\",\"caption\":\"a cat is walking in the kitchen\"}\n");

  Dataset<float> ds = load_dataset<float>((dir / "captions.jsonl").string(), (dir / "features").string(), 12);
  REQUIRE(ds.items.size() == 4);
  REQUIRE(ds.d_f == 4);
  REQUIRE(ds.items[0].video_id == "vidA");
  REQUIRE(ds.items[1].video_id == "vidA");
  REQUIRE(ds.items[0].feats.vec() == ds.items[1].feats.vec());
  REQUIRE(ds.items[2].feats.shape() == Shape{3, 4});
  // Canvas: words + terminator + fill.
  REQUIRE(ds.items[0].canvas.ids.size() == 12);
  REQUIRE(ds.items[0].canvas.ids[7] == kEosId);
  REQUIRE(ds.items[0].canvas.length == 7);
  // Caption text survives for metric references.
  REQUIRE(ds.items[3].caption == "a cat is walking in the kitchen");
}

TEST_CASE("dataset: a missing feature file is reported by video id") {
  fs::path dir = fresh_dir("missing");
  fs::create_directories(dir / "features");
  write_text_file((dir / "captions.jsonl").string(), "{\"video_id\":\"ghost\",\"caption\":\"a dog is running\"}\n");
  REQUIRE_THROWS_MATCHES(load_dataset<float>((dir / "captions.jsonl").string(), (dir / "features").string(), 12),
                         Error, Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("ghost")));
}

TEST_CASE("dataset: inconsistent feature widths are rejected") {
  fs::path dir = fresh_dir("width");
  fs::create_directories(dir / "features");
  Rng rng(13);
  write_features((dir / "features" / "a.dfvf").string(), "a", randn<float>({2, 4}, rng));
  write_features((dir / "features" / "b.dfvf").string(), "b", randn<float>({2, 5}, rng));
  write_text_file((dir / "captions.jsonl").string(),
                  "{\"video_id\":\"a\",\"caption\":\"a dog is running\"}\n"
                  "{\"video_id\":\"b\",\"caption\":\"a cat is sleeping\"}\n");
  REQUIRE_THROWS_MATCHES(load_dataset<float>((dir / "captions.jsonl").string(), (dir / "features").string(), 12),
                         Error, Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("width mismatch")));
}

TEST_CASE("dataset: malformed caption lines are rejected with the line number") {
  fs::path dir = fresh_dir("badjson");
  write_text_file((dir / "captions.jsonl").string(),
                  "{\"video_id\":\"a\",\"caption\":\"a dog is running\"}\n"
                  "{\"video_id\":\"a\"}\n");
  REQUIRE_THROWS_MATCHES(parse_caption_lines(read_text_file((dir / "captions.jsonl").string()), "captions.jsonl"),
                         Error, Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring(":2")));
  REQUIRE_THROWS_AS(parse_caption_lines("", "captions.jsonl"), Error);
  REQUIRE_THROWS_AS(parse_caption_lines("not json\n", "captions.jsonl"), Error);
}

TEST_CASE("shuffled indices: permutation, determinism, seed sensitivity") {
  Rng a(3), b(3), c(4);
  auto p1 = shuffled_indices(50, a);
  auto p2 = shuffled_indices(50, b);
  auto p3 = shuffled_indices(50, c);
  REQUIRE(p1 == p2);
  REQUIRE(p1 != p3);
  std::set<int> seen(p1.begin(), p1.end());
  REQUIRE(seen.size() == 50);
  REQUIRE(*seen.begin() == 0);
  REQUIRE(*seen.rbegin() == 49);
}

TEST_CASE("synthetic: spec validation") {
  SyntheticSpec s;
  s.validate();
  s.n_examples = 513;  // exceeds 8*8*8 distinct triples
  REQUIRE_THROWS_AS(s.validate(), Error);
  s = SyntheticSpec{};
  s.n_objects = 20;
  REQUIRE_THROWS_AS(s.validate(), Error);
  s = SyntheticSpec{};
  s.noise_std = -0.1;
  REQUIRE_THROWS_AS(s.validate(), Error);
}

TEST_CASE("synthetic: captions follow the template and triples are distinct") {
  SyntheticSpec spec;
  spec.n_examples = 100;
  spec.d_f = 8;
  SyntheticData<float> data = make_synthetic<float>(spec);
  REQUIRE(data.ids.size() == 100);
  std::set<std::array<int, 3>> distinct;
  for (std::size_t e = 0; e < data.ids.size(); ++e) {
    REQUIRE(data.captions[e] == synthetic_caption_of(data.triples[e]));
    auto toks = tokenize(data.captions[e]);
    REQUIRE(toks.size() == 7);
    REQUIRE(toks[0] == "a");
    REQUIRE(toks[2] == "is");
    REQUIRE(toks[4] == "in");
    REQUIRE(toks[5] == "the");
    distinct.insert(data.triples[e]);
  }
  REQUIRE(distinct.size() == 100);  // sampling without replacement
}

TEST_CASE("synthetic: vocabulary size is exactly reserved + template + concepts") {
  SyntheticSpec spec;
  spec.n_examples = 512;  // full cube so every concept appears
  spec.d_f = 4;
  SyntheticData<float> data = make_synthetic<float>(spec);
  Vocabulary v = Vocabulary::build(data.captions, 1);
  REQUIRE(v.size() == 4 + 4 + 8 + 8 + 8);
}

TEST_CASE("synthetic: noiseless features are inverted exactly by the nearest-code oracle") {
  SyntheticSpec spec;
  spec.n_examples = 200;
  spec.d_f = 16;
  spec.noise_std = 0.0;
  SyntheticData<float> data = make_synthetic<float>(spec);
  for (std::size_t e = 0; e < data.ids.size(); ++e) {
    REQUIRE(recover_triple(data, data.feats[e]) == data.triples[e]);
  }
}

TEST_CASE("synthetic: mild noise still recovers every concept for this seed") {
  SyntheticSpec spec;
  spec.n_examples = 200;
  spec.d_f = 16;
  spec.noise_std = 0.05;
  spec.seed = 2024;
  SyntheticData<float> data = make_synthetic<float>(spec);
  int hits = 0;
  for (std::size_t e = 0; e < data.ids.size(); ++e)
    if (recover_triple(data, data.feats[e]) == data.triples[e]) ++hits;
  REQUIRE(hits == 200);
  // And the noise actually moved the rows off the codebook.
  const auto& t0 = data.triples[0];
  double diff = 0.0;
  for (int j = 0; j < spec.d_f; ++j)
    diff = std::max(diff, std::abs(static_cast<double>(data.feats[0].at(0, j)) -
                                   static_cast<double>(data.object_codes.at(t0[0], j))));
  REQUIRE(diff > 0.0);
}

TEST_CASE("synthetic: regeneration writes byte-identical files") {
  SyntheticSpec spec;
  spec.n_examples = 12;
  spec.d_f = 6;
  spec.noise_std = 0.02;
  fs::path d1 = fresh_dir("regen1");
  fs::path d2 = fresh_dir("regen2");
  write_synthetic<float>(spec, d1.string());
  write_synthetic<float>(spec, d2.string());

  REQUIRE(read_file_bytes((d1 / "captions.jsonl").string()) == read_file_bytes((d2 / "captions.jsonl").string()));
  for (int e = 0; e < spec.n_examples; ++e) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "vid%04d", e);
    const std::string name = std::string(buf) + ".dfvf";
    REQUIRE(read_file_bytes((d1 / "features" / name).string()) ==
            read_file_bytes((d2 / "features" / name).string()));
  }

  // And the written corpus loads back as a coherent dataset.
  Dataset<float> ds = load_dataset<float>((d1 / "captions.jsonl").string(), (d1 / "features").string(), 20);
  REQUIRE(ds.items.size() == 12);
  REQUIRE(ds.d_f == 6);
  for (const auto& ex : ds.items) REQUIRE(ex.canvas.length == 7);
}

TEST_CASE("synthetic: different seeds give different codebooks") {
  SyntheticSpec a;
  a.n_examples = 5;
  a.d_f = 8;
  SyntheticSpec b = a;
  b.seed = a.seed + 1;
  auto da = make_synthetic<float>(a);
  auto db = make_synthetic<float>(b);
  REQUIRE(da.object_codes.vec() != db.object_codes.vec());
}
