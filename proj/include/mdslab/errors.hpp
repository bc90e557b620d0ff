#pragma once

#include <stdexcept>
#include <string>

namespace mdslab {

// Input outside an operation's mathematical domain (non-finite x, p not in
// (0,1), empty sample, ...).
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

// Requested family/mode the library has no exact routine for.
class UnsupportedError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Model whose conditional variances vanish (zero-variance noise, v_n^2 = 0).
class DegenerateModelError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Augmentation plan cannot host the requested tail.
class PlanInconsistencyError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// L1-mode augmentation hit a path whose residual variance is negative.
class NegativeResidualError : public std::runtime_error {
public:
  NegativeResidualError(const std::string &what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

private:
  double residual_;
};

} // namespace mdslab
