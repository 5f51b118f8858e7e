#pragma once

#include <string>

#include "diffcap/core/binio.hpp"
#include "diffcap/core/tensor.hpp"

namespace diffcap {

// Visual feature file: a fixed header followed by the feature rows.
//
//   bytes 0..3   magic "DFVF"
//   u32          format version (currently 1)
//   u32          length of the video id in bytes
//   ...          video id (utf-8, no terminator)
//   u32          N_f  number of feature rows
//   u32          d_f  feature width
//   ...          N_f * d_f float32 values, little-endian, row-major
//
// All integers are little-endian.

inline constexpr char kFeatureMagic[4] = {'D', 'F', 'V', 'F'};
inline constexpr std::uint32_t kFeatureVersion = 1;

template <class T>
struct FeatureFile {
  std::string video_id;
  Tensor<T> rows;  // N_f x d_f
};

template <class T>
std::string encode_features(const std::string& video_id, const Tensor<T>& rows) {
  check(rows.rank() == 2, ErrorKind::io, "features: rank-2 row matrix required");
  std::string out;
  out.append(kFeatureMagic, 4);
  put_u32_le(out, kFeatureVersion);
  put_u32_le(out, static_cast<std::uint32_t>(video_id.size()));
  out += video_id;
  put_u32_le(out, static_cast<std::uint32_t>(rows.dim(0)));
  put_u32_le(out, static_cast<std::uint32_t>(rows.dim(1)));
  for (std::int64_t i = 0; i < rows.numel(); ++i)
    put_f32_le(out, static_cast<float>(rows.at(static_cast<int>(i))));
  return out;
}

template <class T>
void write_features(const std::string& path, const std::string& video_id, const Tensor<T>& rows) {
  write_file_bytes(path, encode_features(video_id, rows));
}

template <class T>
FeatureFile<T> decode_features(const std::string& bytes, const std::string& origin) {
  ByteReader r(bytes, origin);
  const std::string magic = r.raw(4);
  check(std::string(kFeatureMagic, 4) == magic, ErrorKind::io, origin + ": not a feature file (bad magic)");
  const std::uint32_t version = r.u32();
  check(version == kFeatureVersion, ErrorKind::io,
        origin + ": unsupported feature file version " + std::to_string(version));
  FeatureFile<T> f;
  f.video_id = r.raw(r.u32());
  const std::uint32_t n_f = r.u32();
  const std::uint32_t d_f = r.u32();
  check(n_f > 0 && d_f > 0, ErrorKind::io, origin + ": empty feature matrix");
  f.rows = Tensor<T>({static_cast<int>(n_f), static_cast<int>(d_f)});
  for (std::int64_t i = 0; i < f.rows.numel(); ++i) f.rows.at(static_cast<int>(i)) = static_cast<T>(r.f32());
  check(r.at_end(), ErrorKind::io, origin + ": trailing bytes after feature payload");
  return f;
}

template <class T>
FeatureFile<T> read_features(const std::string& path) {
  return decode_features<T>(read_file_bytes(path), path);
}

}  // namespace diffcap
