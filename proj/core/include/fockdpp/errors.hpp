#pragma once

#include <stdexcept>
#include <string>

namespace fockdpp {

/// Failure classes surfaced by the library.  The split matters for callers:
/// Config means the request itself was malformed, everything else means a
/// well-formed request could not be completed.
enum class ErrorKind {
  Config,            ///< bad parameters, malformed files, contradictory flags
  Domain,            ///< evaluation at a point outside the operation's domain
  Numeric,           ///< quadrature/eigensolver residual above tolerance
  Window,            ///< evaluation outside a kernel or partition window
  InsufficientData,  ///< too few samples/points to produce a verdict
  Inconclusive,      ///< diagnostic ran but cannot certify either outcome
  EnvelopeFailure,   ///< rejection sampler starved or envelope violated
  Coverage,          ///< a point landed on no cell of a partition
  Disjointness,      ///< cells required to be disjoint overlap
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::Config: return "config";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::Numeric: return "numeric";
    case ErrorKind::Window: return "window";
    case ErrorKind::InsufficientData: return "insufficient-data";
    case ErrorKind::Inconclusive: return "inconclusive";
    case ErrorKind::EnvelopeFailure: return "envelope-failure";
    case ErrorKind::Coverage: return "coverage";
    case ErrorKind::Disjointness: return "disjointness";
  }
  return "unknown";
}

}  // namespace fockdpp
