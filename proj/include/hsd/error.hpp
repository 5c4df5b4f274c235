#pragma once

#include <stdexcept>
#include <string>

namespace hsd {

enum class ErrorKind {
  io,          // file missing, unreadable or unwritable
  validation,  // malformed or inconsistent input (shape, header, labels)
  degenerate,  // numerically degenerate statistics or target
  numeric,     // non-finite values produced during computation
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::io: return "i/o";
    case ErrorKind::validation: return "validation";
    case ErrorKind::degenerate: return "degenerate";
    case ErrorKind::numeric: return "numeric";
  }
  return "unknown";
}

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace hsd
