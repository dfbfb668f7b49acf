#pragma once

#include <stdexcept>
#include <string>

namespace qalign {

/// Input outside the documented domain of an operation (bad wavelength,
/// confidence, grid size, empty result set, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A numerical procedure failed to converge or produced non-finite values.
class NumericError : public std::runtime_error {
 public:
  NumericError(const std::string& what, double bracket_lo, double bracket_hi)
      : std::runtime_error(what), lo_(bracket_lo), hi_(bracket_hi) {}
  explicit NumericError(const std::string& what)
      : NumericError(what, 0.0, 0.0) {}

  double bracket_lo() const noexcept { return lo_; }
  double bracket_hi() const noexcept { return hi_; }

 private:
  double lo_;
  double hi_;
};

/// Operation invoked in the wrong lifecycle state (e.g. step before reset).
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Malformed, unknown or ill-typed configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Checkpoint format or normalization constants incompatible with the caller.
class VersionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Result sets that should be paired by seed are not.
class PairingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace qalign
