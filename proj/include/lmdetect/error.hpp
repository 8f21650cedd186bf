#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lmdetect {

/// Error classes. Each maps to a distinct CLI exit code (see exit_code()).
enum class ErrorKind {
  invalid_argument,  ///< malformed input, violated precondition
  io,                ///< file read/write failure
  invalid_text,      ///< empty text, bad UTF-8, out-of-vocabulary token
  unseen_context,    ///< scoring or sampling through a context without a row
  support,           ///< zero-probability event where a finite value is required
  convergence,       ///< iteration cap hit (reducible/periodic chain, solver stall)
  capacity,          ///< atom cap or packing limit exceeded
  inapplicable,      ///< bound preconditions fail (|A|gamma >= 1, nu inadmissible)
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument: return 2;
    case ErrorKind::io: return 3;
    case ErrorKind::invalid_text: return 4;
    case ErrorKind::unseen_context: return 5;
    case ErrorKind::support: return 6;
    case ErrorKind::convergence: return 7;
    case ErrorKind::capacity: return 8;
    case ErrorKind::inapplicable: return 9;
  }
  return 1;
}

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid_argument";
    case ErrorKind::io: return "io";
    case ErrorKind::invalid_text: return "invalid_text";
    case ErrorKind::unseen_context: return "unseen_context";
    case ErrorKind::support: return "support";
    case ErrorKind::convergence: return "convergence";
    case ErrorKind::capacity: return "capacity";
    case ErrorKind::inapplicable: return "inapplicable";
  }
  return "unknown";
}

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, const std::string& what) {
  if (!cond) fail(ErrorKind::invalid_argument, what);
}

}  // namespace lmdetect
