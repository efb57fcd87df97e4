#pragma once

#include <stdexcept>
#include <string>

namespace prb {

enum class ErrorKind {
  Argument,
  Shape,
  Domain,
  Coupling,
  Dependency,
  Config,
  Data,
  Numerical,
  Size,
  Fit,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

// Process exit code for the CLI contract.
inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config:
    case ErrorKind::Argument:
    case ErrorKind::Shape:
    case ErrorKind::Domain:
      return 2;
    case ErrorKind::Data:
    case ErrorKind::Dependency:
      return 3;
    default:
      return 4;
  }
}

}  // namespace prb
