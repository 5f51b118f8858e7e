#pragma once

#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "diffcap/core/rng.hpp"
#include "diffcap/data/features.hpp"
#include "diffcap/text/codec.hpp"
#include "diffcap/text/vocab.hpp"

namespace diffcap {

template <class T>
struct Example {
  std::string video_id;
  std::string caption;   // raw reference text
  TokenSeq canvas;       // encoded onto the fixed-length canvas
  Tensor<T> feats;       // N_f x d_f visual rows (shared across captions of one video)
};

template <class T>
struct Dataset {
  std::vector<Example<T>> items;
  Vocabulary vocab;
  int d_f = 0;
};

// One caption record per line: {"video_id": ..., "caption": ...}.
inline std::vector<std::pair<std::string, std::string>> parse_caption_lines(const std::string& text,
                                                                            const std::string& origin) {
  std::vector<std::pair<std::string, std::string>> out;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    check(!j.is_discarded() && j.is_object(), ErrorKind::ingest,
          origin + ":" + std::to_string(line_no) + ": malformed caption record");
    check(j.contains("video_id") && j["video_id"].is_string() && j.contains("caption") && j["caption"].is_string(),
          ErrorKind::ingest, origin + ":" + std::to_string(line_no) + ": caption record needs string video_id and caption");
    out.emplace_back(j["video_id"].get<std::string>(), j["caption"].get<std::string>());
  }
  check(!out.empty(), ErrorKind::ingest, origin + ": no caption records");
  return out;
}

// Pair every caption line with its video's feature file (several captions may
// share one video), build the vocabulary from the caption texts, and encode
// each caption onto the canvas. Feature files live at <features_dir>/<id>.dfvf.
template <class T>
Dataset<T> load_dataset(const std::string& captions_path, const std::string& features_dir, int n_positions,
                        int min_freq = 1) {
  const auto records = parse_caption_lines(read_text_file(captions_path), captions_path);

  Dataset<T> ds;
  std::vector<std::string> corpus;
  corpus.reserve(records.size());
  for (const auto& r : records) corpus.push_back(r.second);
  ds.vocab = Vocabulary::build(corpus, min_freq);

  std::map<std::string, Tensor<T>> feature_cache;
  for (const auto& [video_id, caption] : records) {
    auto it = feature_cache.find(video_id);
    if (it == feature_cache.end()) {
      const std::string path = features_dir + "/" + video_id + ".dfvf";
      FeatureFile<T> f;
      try {
        f = read_features<T>(path);
      } catch (const Error& e) {
        fail(ErrorKind::ingest, "dataset: cannot load features for video '" + video_id + "': " + e.what());
      }
      check(f.video_id == video_id, ErrorKind::ingest,
            "dataset: feature file " + path + " carries id '" + f.video_id + "'");
      it = feature_cache.emplace(video_id, f.rows).first;
    }
    const Tensor<T>& rows = it->second;
    if (ds.d_f == 0)
      ds.d_f = rows.dim(1);
    else
      check(rows.dim(1) == ds.d_f, ErrorKind::ingest,
            "dataset: feature width mismatch for video '" + video_id + "': got " + std::to_string(rows.dim(1)) +
                ", expected " + std::to_string(ds.d_f));
    Example<T> ex;
    ex.video_id = video_id;
    ex.caption = caption;
    ex.canvas = encode_caption(caption, ds.vocab, n_positions);
    ex.feats = rows;
    ds.items.push_back(std::move(ex));
  }
  return ds;
}

// Seeded Fisher-Yates over index order; the examples themselves stay put.
inline std::vector<int> shuffled_indices(int n, Rng& rng) {
  std::vector<int> idx(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.uniform_int(0, i));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  return idx;
}

}  // namespace diffcap
