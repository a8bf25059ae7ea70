#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace pwamrac {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Base class for everything this library throws on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Structural problems in user-supplied data (dimensions, ranges, partition overlap).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Malformed scenario file (JSON syntax, missing keys, wrong types).
class ParseError : public Error {
 public:
  using Error::Error;
};

// A state/input pair matched no region of the partition.
class NoRegion : public Error {
 public:
  using Error::Error;
};

// A matrix required to be symmetric positive definite is not.
class NotSpd : public Error {
 public:
  using Error::Error;
};

// A matrix required to be Hurwitz has an eigenvalue with nonnegative real part.
class NotHurwitz : public Error {
 public:
  using Error::Error;
};

// A + I/2 is not Hurwitz, so the strict Lyapunov inequality has no solution here.
class NotShiftedHurwitz : public Error {
 public:
  using Error::Error;
};

// Linear solve produced an unusable result (large residual, NaN, ...).
class SolveFailed : public Error {
 public:
  using Error::Error;
};

// No gain triple reproduces the reference dynamics within tolerance.
class Unmatchable : public Error {
 public:
  using Error::Error;
};

// An analytic hypothesis (h > l, positive denominator, c < eps^2, ...) fails.
class HypothesisViolated : public Error {
 public:
  using Error::Error;
};

// Weighted tracking error reached or crossed the auxiliary bound.
class BarrierViolated : public Error {
 public:
  using Error::Error;
};

// Inside the guard band where the barrier denominator would overflow;
// distinct from an actual crossing but aborts the run the same way.
class NearBarrier : public BarrierViolated {
 public:
  using BarrierViolated::BarrierViolated;
};

// A gain entry sits strictly outside its projection bounds.
class BoundViolated : public Error {
 public:
  using Error::Error;
};

// More region switches inside one integration window than the configured limit.
class ChatterDetected : public Error {
 public:
  using Error::Error;
};

// Requested a diagnostic that needs the true plant/gains, which were not provided.
class OracleUnavailable : public Error {
 public:
  using Error::Error;
};

// Strict dwell enforcement tripped on a switch faster than the certified bound.
class DwellViolated : public Error {
 public:
  using Error::Error;
};

}  // namespace pwamrac
