#pragma once

#include <stdexcept>
#include <string>

namespace uavtl {

enum class ErrorKind {
  usage,     // caller broke a precondition (wrong call order, bad arguments)
  config,    // invalid or inconsistent configuration, IO failures
  parse,     // malformed input file
  data,      // well-formed input whose contents cannot be used
  domain,    // numeric argument outside the function's domain
  load,      // checkpoint does not match the configured architecture
  training,  // non-finite loss or other fault during optimisation
};

inline const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::usage: return "usage";
    case ErrorKind::config: return "config";
    case ErrorKind::parse: return "parse";
    case ErrorKind::data: return "data";
    case ErrorKind::domain: return "domain";
    case ErrorKind::load: return "load";
    case ErrorKind::training: return "training";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace uavtl
