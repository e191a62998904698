#pragma once

#include <stdexcept>
#include <string>

namespace tmqfc {

/// Broad failure classes. The CLI maps these onto process exit codes.
enum class ErrorKind {
  Domain,        // precondition / argument out of range
  GridMismatch,
  Rank,
  Normalization,
  Basis,
  Numeric,       // NaN / Inf in a field
  Conservation,  // physics violation (eta > 1)
  Saturation,    // detector count rate above limit
  Convergence,
  ProjectionLoss,
  Coverage,
  Range,         // scan extremum on the grid boundary
  Config,
  Io,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline void require(bool cond, ErrorKind kind, const std::string& msg) {
  if (!cond) throw Error(kind, msg);
}

}  // namespace tmqfc
