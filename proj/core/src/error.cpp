#include "photocorr/error.hpp"

namespace photocorr {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::format: return "format error";
    case ErrorKind::corruption: return "corruption error";
    case ErrorKind::range: return "range error";
    case ErrorKind::validation: return "validation error";
    case ErrorKind::config: return "config error";
    case ErrorKind::domain: return "domain error";
    case ErrorKind::size: return "size error";
    case ErrorKind::accuracy: return "accuracy error";
    case ErrorKind::separability: return "separability error";
    case ErrorKind::no_signal: return "no-signal error";
    case ErrorKind::alignment: return "alignment error";
    case ErrorKind::bias: return "bias error";
    case ErrorKind::io: return "I/O error";
  }
  return "error";
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace photocorr
