#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "diffcap/core/common.hpp"

namespace diffcap {

// Reserved ids, stable across save/load.
inline constexpr int kPadId = 0;   // batching filler, never supervised
inline constexpr int kMaskId = 1;  // canvas filler after the end of a caption
inline constexpr int kEosId = 2;   // end of caption
inline constexpr int kUnkId = 3;   // out-of-vocabulary word

// Lowercase, split on whitespace, strip ASCII punctuation inside tokens.
inline std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  };
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      flush();
    } else if (std::ispunct(c)) {
      continue;
    } else {
      cur.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  flush();
  return out;
}

class Vocabulary {
 public:
  Vocabulary() {
    for (const char* t : {"<pad>", "<mask>", "<eos>", "<unk>"}) push(t);
  }

  // Ids are assigned by (frequency descending, token lexicographic) so a
  // rebuild over the same corpus is always identical.
  static Vocabulary build(const std::vector<std::string>& corpus, int min_freq) {
    check(!corpus.empty(), ErrorKind::ingest, "vocabulary: empty corpus");
    std::map<std::string, std::int64_t> freq;
    for (const auto& line : corpus)
      for (const auto& tok : tokenize(line)) ++freq[tok];
    std::vector<std::pair<std::string, std::int64_t>> order(freq.begin(), freq.end());
    std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    Vocabulary v;
    v.min_freq_ = min_freq;
    for (const auto& [tok, n] : order)
      if (n >= min_freq) v.push(tok);
    return v;
  }

  int size() const { return static_cast<int>(id_to_token_.size()); }
  int min_freq() const { return min_freq_; }

  int id_of(const std::string& token) const {
    auto it = token_to_id_.find(token);
    return it == token_to_id_.end() ? kUnkId : it->second;
  }
  bool contains(const std::string& token) const { return token_to_id_.count(token) > 0; }

  const std::string& token_of(int id) const {
    check(0 <= id && id < size(), ErrorKind::codec, "vocabulary: id " + std::to_string(id) + " out of range");
    return id_to_token_[static_cast<std::size_t>(id)];
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["tokens"] = id_to_token_;
    j["min_freq"] = min_freq_;
    return j;
  }

  static Vocabulary from_json(const nlohmann::json& j) {
    auto tokens = j.at("tokens").get<std::vector<std::string>>();
    check(tokens.size() >= 4, ErrorKind::codec, "vocabulary json: missing reserved tokens");
    const char* reserved[4] = {"<pad>", "<mask>", "<eos>", "<unk>"};
    for (int i = 0; i < 4; ++i)
      check(tokens[static_cast<std::size_t>(i)] == reserved[i], ErrorKind::codec,
            "vocabulary json: reserved id " + std::to_string(i) + " altered");
    Vocabulary v;
    v.min_freq_ = j.value("min_freq", 1);
    for (std::size_t i = 4; i < tokens.size(); ++i) v.push(tokens[i]);
    return v;
  }

  bool operator==(const Vocabulary& o) const {
    return id_to_token_ == o.id_to_token_ && min_freq_ == o.min_freq_;
  }

 private:
  void push(const std::string& token) {
    check(!token_to_id_.count(token), ErrorKind::codec, "vocabulary: duplicate token '" + token + "'");
    token_to_id_[token] = size();
    id_to_token_.push_back(token);
  }

  std::unordered_map<std::string, int> token_to_id_;
  std::vector<std::string> id_to_token_;
  int min_freq_ = 1;
};

}  // namespace diffcap
