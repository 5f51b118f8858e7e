#pragma once

#include <array>
#include <cmath>
#include <cstdint>

#include <json.hpp>

#include "diffcap/core/common.hpp"

namespace diffcap {

// Counter-based PRNG (Philox, 4x32 words, 10 rounds). Counter-based means the
// stream is a pure function of (key, counter): cheap to fork into independent
// substreams and to serialize mid-stream for bit-exact resume.
class Rng {
 public:
  static constexpr const char* kAlgorithm = "philox4x32-10";

  Rng() : Rng(0) {}

  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) {
    key_[0] = static_cast<std::uint32_t>(seed);
    key_[1] = static_cast<std::uint32_t>(seed >> 32);
    ctr_ = {0, 0, static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    idx_ = 4;  // force a fresh block on first draw
    have_spare_ = false;
    spare_ = 0.0;
  }

  // Derive an independent substream. The child keeps the key and gets a stream
  // id mixed from (parent stream, salt) through one Philox block, so nested
  // splits land on distinct counters with overwhelming probability.
  Rng split(std::uint64_t salt) const {
    std::array<std::uint32_t, 4> c = {static_cast<std::uint32_t>(salt), static_cast<std::uint32_t>(salt >> 32),
                                      ctr_[2], ctr_[3]};
    std::array<std::uint32_t, 2> k = {key_[0] ^ 0x243F6A88u, key_[1] ^ 0x85A308D3u};
    std::array<std::uint32_t, 4> out = block(c, k);
    std::uint64_t stream = (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
    std::uint64_t seed = (static_cast<std::uint64_t>(key_[1]) << 32) | key_[0];
    return Rng(seed, stream);
  }

  std::uint32_t next_u32() {
    if (idx_ >= 4) {
      buf_ = block(ctr_, key_);
      bump_counter();
      idx_ = 0;
    }
    return buf_[idx_++];
  }

  std::uint64_t next_u64() {
    std::uint64_t lo = next_u32();
    std::uint64_t hi = next_u32();
    return (hi << 32) | lo;
  }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform integer in [lo, hi] inclusive, unbiased via rejection.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    check(lo <= hi, ErrorKind::range, "uniform_int: empty range");
    std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    if (span == 0) return static_cast<std::int64_t>(next_u64());  // full 2^64 range
    std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return lo + static_cast<std::int64_t>(x % span);
  }

  // Standard normal via Box-Muller; the second variate of each pair is cached.
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    // u1 in (0,1] so log() is finite.
    double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["algorithm"] = kAlgorithm;
    j["key"] = {key_[0], key_[1]};
    j["counter"] = {ctr_[0], ctr_[1], ctr_[2], ctr_[3]};
    j["buffer_index"] = idx_;
    j["have_spare"] = have_spare_;
    j["spare"] = spare_;
    return j;
  }

  static Rng from_json(const nlohmann::json& j) {
    check(j.at("algorithm").get<std::string>() == kAlgorithm, ErrorKind::codec,
          "rng state: unsupported algorithm");
    Rng r;
    auto key = j.at("key");
    auto ctr = j.at("counter");
    check(key.size() == 2 && ctr.size() == 4, ErrorKind::codec, "rng state: malformed key/counter");
    r.key_ = {key[0].get<std::uint32_t>(), key[1].get<std::uint32_t>()};
    r.ctr_ = {ctr[0].get<std::uint32_t>(), ctr[1].get<std::uint32_t>(), ctr[2].get<std::uint32_t>(),
              ctr[3].get<std::uint32_t>()};
    r.idx_ = j.at("buffer_index").get<int>();
    r.have_spare_ = j.at("have_spare").get<bool>();
    r.spare_ = j.at("spare").get<double>();
    check(r.idx_ >= 0 && r.idx_ <= 4, ErrorKind::codec, "rng state: buffer index out of range");
    if (r.idx_ < 4) {
      // Rebuild the in-flight block: it was produced from the counter value
      // one step behind the stored (already bumped) one.
      std::array<std::uint32_t, 4> prev = r.ctr_;
      if (prev[0]-- == 0)
        if (prev[1]-- == 0)
          if (prev[2]-- == 0) --prev[3];
      r.buf_ = block(prev, r.key_);
    }
    return r;
  }

  bool operator==(const Rng& o) const {
    return key_ == o.key_ && ctr_ == o.ctr_ && idx_ == o.idx_ && have_spare_ == o.have_spare_ &&
           (!have_spare_ || spare_ == o.spare_);
  }

 private:
  static std::pair<std::uint32_t, std::uint32_t> mulhilo(std::uint32_t a, std::uint32_t b) {
    std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    return {static_cast<std::uint32_t>(p >> 32), static_cast<std::uint32_t>(p)};
  }

  static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> c, std::array<std::uint32_t, 2> k) {
    for (int round = 0; round < 10; ++round) {
      auto [hi0, lo0] = mulhilo(0xD2511F53u, c[0]);
      auto [hi1, lo1] = mulhilo(0xCD9E8D57u, c[2]);
      c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
      k[0] += 0x9E3779B9u;
      k[1] += 0xBB67AE85u;
    }
    return c;
  }

  void bump_counter() {
    if (++ctr_[0] == 0)
      if (++ctr_[1] == 0)
        if (++ctr_[2] == 0) ++ctr_[3];
  }

  std::array<std::uint32_t, 2> key_{};
  std::array<std::uint32_t, 4> ctr_{};
  std::array<std::uint32_t, 4> buf_{};
  int idx_ = 4;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace diffcap
