#pragma once

#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace diffcap {

enum class ErrorKind {
  shape,       // dimension mismatch between tensors
  config,      // invalid configuration value
  range,       // index/timestep out of range
  codec,       // tokenizer / vocabulary failure
  ingest,      // dataset or file ingestion failure
  eval,        // metric evaluation failure
  numeric,     // numeric guard tripped (NaN loss, negative radicand, ...)
  generation,  // inference pipeline failure
  io,          // file format / io failure
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) { throw Error(kind, msg); }

inline void check(bool cond, ErrorKind kind, const std::string& msg) {
  if (!cond) fail(kind, msg);
}

using Shape = std::vector<int>;

inline std::int64_t numel(const Shape& s) {
  std::int64_t n = 1;
  for (int d : s) n *= d;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) os << 'x';
    os << s[i];
  }
  os << ')';
  return os.str();
}

}  // namespace diffcap
