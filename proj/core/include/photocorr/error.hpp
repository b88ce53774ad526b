#pragma once

#include <stdexcept>
#include <string>

namespace photocorr {

// Broad failure classes; the CLI maps them onto exit codes.
enum class ErrorKind {
  format,        // bad magic, bad version, truncated file
  corruption,    // unsorted records, bad channel
  range,         // timestamp outside the shot
  validation,    // invariant violated on an in-memory object
  config,        // inconsistent user-supplied parameters
  domain,        // mathematically undefined input
  size,          // problem too large for the dense oracle
  accuracy,      // discretisation too coarse for the requested tolerance
  separability,  // heterodyne band cannot be isolated
  no_signal,     // heterodyne beat amplitude is zero
  alignment,     // tau grids do not line up
  bias,          // mean field too large for the zero-mean decomposition
  io,
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what);
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& what);

inline void require(bool condition, ErrorKind kind, const std::string& what) {
  if (!condition) fail(kind, what);
}

}  // namespace photocorr
