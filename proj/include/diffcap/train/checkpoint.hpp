#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "diffcap/core/binio.hpp"
#include "diffcap/core/rng.hpp"
#include "diffcap/model/config.hpp"
#include "diffcap/model/params.hpp"
#include "diffcap/text/vocab.hpp"

namespace diffcap {

// Checkpoint file:
//
//   bytes 0..3   magic "DFVC"
//   u32          format version (currently 2)
//   u64          header length in bytes
//   ...          header JSON (utf-8)
//   ...          one float32 little-endian payload per tensor, row-major,
//                in the exact order of the header's "params" array
//   ...          optimizer moments, when the header's "opt" is an object:
//                first moments then second moments, each one float64
//                little-endian run per tensor in the same order
//
// The header carries everything needed to rebuild the model before loading
// weights: {"config", "vocab", "epoch", "rng", "params": [{"name","shape"}],
// "opt": {"steps": n} | null}. The training generator state and optimizer
// moments are stored so a resumed run continues the exact same trajectory;
// "opt" is null for checkpoints written outside training (and in legacy
// version-1 files, which load with a fresh optimizer).

inline constexpr char kCheckpointMagic[4] = {'D', 'F', 'V', 'C'};
inline constexpr std::uint32_t kCheckpointVersion = 2;

template <class T>
struct LoadedCheckpoint {
  Config cfg;
  Vocabulary vocab;
  int epoch = 0;
  Rng rng{0};
  std::vector<std::pair<std::string, Tensor<T>>> tensors;
  bool has_opt = false;
  std::int64_t opt_steps = 0;
  std::vector<std::vector<double>> opt_m, opt_v;
};

template <class T>
std::string encode_checkpoint(const Config& cfg, const Vocabulary& vocab, const NamedParams<T>& params,
                              const Rng& rng, int epoch, std::int64_t opt_steps,
                              const std::vector<std::vector<double>>& opt_m,
                              const std::vector<std::vector<double>>& opt_v) {
  const bool with_opt = !opt_m.empty() || !opt_v.empty();
  if (with_opt) {
    check(opt_m.size() == params.size() && opt_v.size() == params.size(), ErrorKind::io,
          "checkpoint: optimizer moment count does not match parameter count");
    for (std::size_t i = 0; i < params.size(); ++i) {
      const auto want = static_cast<std::size_t>(params.items[i].second.numel());
      check(opt_m[i].size() == want && opt_v[i].size() == want, ErrorKind::io,
            "checkpoint: optimizer moments for '" + params.items[i].first + "' have the wrong length");
    }
  }

  nlohmann::ordered_json header;
  header["config"] = cfg.to_json();
  header["vocab"] = vocab.to_json();
  header["epoch"] = epoch;
  header["rng"] = rng.to_json();
  nlohmann::ordered_json plist = nlohmann::ordered_json::array();
  for (const auto& it : params.items) {
    nlohmann::ordered_json p;
    p["name"] = it.first;
    p["shape"] = it.second.shape();
    plist.push_back(std::move(p));
  }
  header["params"] = std::move(plist);
  if (with_opt)
    header["opt"] = nlohmann::ordered_json{{"steps", opt_steps}};
  else
    header["opt"] = nullptr;
  const std::string header_bytes = header.dump();

  std::string out;
  out.append(kCheckpointMagic, 4);
  put_u32_le(out, kCheckpointVersion);
  put_u64_le(out, header_bytes.size());
  out += header_bytes;
  for (const auto& it : params.items)
    for (std::int64_t j = 0; j < it.second.numel(); ++j)
      put_f32_le(out, static_cast<float>(it.second.at(static_cast<int>(j))));
  if (with_opt) {
    for (const auto& run : opt_m)
      for (double v : run) put_f64_le(out, v);
    for (const auto& run : opt_v)
      for (double v : run) put_f64_le(out, v);
  }
  return out;
}

template <class T>
std::string encode_checkpoint(const Config& cfg, const Vocabulary& vocab, const NamedParams<T>& params,
                              const Rng& rng, int epoch) {
  return encode_checkpoint(cfg, vocab, params, rng, epoch, 0, {}, {});
}

template <class T>
void write_checkpoint(const std::string& path, const Config& cfg, const Vocabulary& vocab,
                      const NamedParams<T>& params, const Rng& rng, int epoch, std::int64_t opt_steps,
                      const std::vector<std::vector<double>>& opt_m,
                      const std::vector<std::vector<double>>& opt_v) {
  write_file_bytes(path, encode_checkpoint(cfg, vocab, params, rng, epoch, opt_steps, opt_m, opt_v));
}

template <class T>
void write_checkpoint(const std::string& path, const Config& cfg, const Vocabulary& vocab,
                      const NamedParams<T>& params, const Rng& rng, int epoch) {
  write_file_bytes(path, encode_checkpoint(cfg, vocab, params, rng, epoch));
}

template <class T>
LoadedCheckpoint<T> decode_checkpoint(const std::string& bytes, const std::string& origin) {
  ByteReader r(bytes, origin);
  check(r.raw(4) == std::string(kCheckpointMagic, 4), ErrorKind::io,
        origin + ": not a checkpoint (bad magic)");
  const std::uint32_t version = r.u32();
  check(version == 1 || version == kCheckpointVersion, ErrorKind::io,
        origin + ": unsupported checkpoint version " + std::to_string(version));
  const std::uint64_t header_len = r.u64();
  const std::string header_bytes = r.raw(header_len);
  nlohmann::json header = nlohmann::json::parse(header_bytes, nullptr, false);
  check(!header.is_discarded(), ErrorKind::io, origin + ": corrupt checkpoint header");
  for (const char* key : {"config", "vocab", "epoch", "rng", "params"})
    check(header.contains(key), ErrorKind::io, origin + ": checkpoint header lacks '" + std::string(key) + "'");
  if (version >= 2)
    check(header.contains("opt"), ErrorKind::io, origin + ": checkpoint header lacks 'opt'");

  LoadedCheckpoint<T> ck;
  ck.cfg = Config::from_json(header["config"]);
  ck.vocab = Vocabulary::from_json(header["vocab"]);
  ck.epoch = header["epoch"].get<int>();
  ck.rng = Rng::from_json(header["rng"]);
  for (const auto& p : header["params"]) {
    check(p.contains("name") && p.contains("shape"), ErrorKind::io, origin + ": malformed params entry");
    const std::string name = p["name"].get<std::string>();
    const Shape shape = p["shape"].get<Shape>();
    Tensor<T> t(shape);
    for (std::int64_t j = 0; j < t.numel(); ++j) t.at(static_cast<int>(j)) = static_cast<T>(r.f32());
    ck.tensors.emplace_back(name, std::move(t));
  }
  if (version >= 2 && header["opt"].is_object()) {
    check(header["opt"].contains("steps"), ErrorKind::io, origin + ": checkpoint 'opt' lacks 'steps'");
    ck.has_opt = true;
    ck.opt_steps = header["opt"]["steps"].get<std::int64_t>();
    check(ck.opt_steps >= 0, ErrorKind::io, origin + ": negative optimizer step count");
    for (auto* dst : {&ck.opt_m, &ck.opt_v}) {
      dst->reserve(ck.tensors.size());
      for (const auto& [name, t] : ck.tensors) {
        std::vector<double> run(static_cast<std::size_t>(t.numel()));
        for (double& v : run) v = r.f64();
        dst->push_back(std::move(run));
      }
    }
  }
  check(r.at_end(), ErrorKind::io, origin + ": trailing bytes after checkpoint payload");
  return ck;
}

template <class T>
LoadedCheckpoint<T> read_checkpoint(const std::string& path) {
  return decode_checkpoint<T>(read_file_bytes(path), path);
}

// Copy loaded tensors into a freshly collected parameter set. Order, names,
// and shapes must agree exactly — anything else means the checkpoint belongs
// to a different architecture.
template <class T>
void assign_params(const LoadedCheckpoint<T>& ck, const NamedParams<T>& dst) {
  check(ck.tensors.size() == dst.size(), ErrorKind::io,
        "checkpoint: expected " + std::to_string(dst.size()) + " tensors, found " +
            std::to_string(ck.tensors.size()));
  for (std::size_t i = 0; i < dst.size(); ++i) {
    const auto& [name, src] = ck.tensors[i];
    const auto& [want_name, dst_t] = dst.items[i];
    check(name == want_name, ErrorKind::io,
          "checkpoint: tensor " + std::to_string(i) + " is '" + name + "', expected '" + want_name + "'");
    check(src.shape() == dst_t.shape(), ErrorKind::io,
          "checkpoint: tensor '" + name + "' has shape " + shape_str(src.shape()) + ", expected " +
              shape_str(dst_t.shape()));
    dst_t.vec() = src.vec();
  }
}

}  // namespace diffcap
