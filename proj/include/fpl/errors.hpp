#pragma once

#include <stdexcept>
#include <string>

namespace fpl {

enum class ErrorKind {
  Domain,          // value outside its physical domain (e.g. nonpositive frequency)
  Geometry,        // coincident sites
  Range,           // lookup outside a table
  Config,          // malformed or infeasible configuration
  Validation,      // schedule/network failed validation
  Numerical,       // NaN/blow-up during integration
  Misuse,          // call that contradicts its preconditions
  Ambiguity,       // two competing resonant channels
  NotPeriodic,     // incommensurate tones for monodromy
  Underdetermined, // too little data for a fit
  Io,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace fpl
