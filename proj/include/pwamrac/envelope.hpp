#pragma once

#include <cmath>
#include <string>

#include "pwamrac/types.hpp"

namespace pwamrac {

// Exponentially shrinking performance bound
//   rho(t) = (rho0 - rho_inf) * exp(-l (t - t0)) + rho_inf.
struct PerformanceSpec {
  double rho0 = 0.0;
  double rho_inf = 0.0;
  double l = 0.0;
  double t0 = 0.0;

  void validate() const {
    if (!(rho_inf > 0.0) || !(rho0 > rho_inf))
      throw ValidationError("performance bound needs rho0 > rho_inf > 0, got rho0=" +
                            std::to_string(rho0) + " rho_inf=" + std::to_string(rho_inf));
    if (!(l > 0.0)) throw ValidationError("performance decay rate l must be positive");
  }
};

inline double rho(const PerformanceSpec& s, double t) {
  return (s.rho0 - s.rho_inf) * std::exp(-s.l * (t - s.t0)) + s.rho_inf;
}

// Auxiliary bound driven by eps_dot = -h eps + g between switches and
// multiplied by sqrt_mu at each switch. h > 0, g > 0, eps stays above g/h.
struct AuxiliarySignal {
  double eps = 0.0;
  double h = 0.0;
  double g = 0.0;
  double sqrt_mu = 1.0;

  void validate() const {
    if (!(h > 0.0) || !(g > 0.0))
      throw ValidationError("auxiliary signal needs h > 0 and g > 0");
    if (!(sqrt_mu >= 1.0))
      throw ValidationError("auxiliary signal needs sqrt_mu >= 1");
    if (!(eps > g / h))
      throw ValidationError("auxiliary signal must start above its floor g/h = " +
                            std::to_string(g / h));
  }
};

// Exact flow of the scalar ODE over a step of length dt >= 0.
inline AuxiliarySignal eps_advance(AuxiliarySignal s, double dt) {
  const double floor = s.g / s.h;
  s.eps = (s.eps - floor) * std::exp(-s.h * dt) + floor;
  return s;
}

inline double eps_at(const AuxiliarySignal& s, double dt) {
  const double floor = s.g / s.h;
  return (s.eps - floor) * std::exp(-s.h * dt) + floor;
}

// Jump applied when the active weighting matrix changes.
inline AuxiliarySignal eps_reset(AuxiliarySignal s) {
  s.eps *= s.sqrt_mu;
  return s;
}

struct Barrier {
  double phi = 0.0;    // z / (theta^2 - z), z = weighted error squared
  double phi_d = 0.0;  // theta^2 / (theta^2 - z)^2, the derivative d(phi)/dz
};

// Barrier value and slope for weighted error e_norm against bound theta
// (theta is eps for the switched law, rho(t) for the common-P law).
// Throws when the error has reached the bound, and rejects the last
// 1e-12-relative sliver before it where 1/(theta^2 - z) would blow up.
inline Barrier barrier_phi(double e_norm, double theta) {
  const double z = e_norm * e_norm;
  const double th2 = theta * theta;
  if (!(z < th2))
    throw BarrierViolated("weighted error " + std::to_string(e_norm) +
                          " reached the bound " + std::to_string(theta));
  const double denom = th2 - z;
  if (denom < 1e-12 * th2)
    throw NearBarrier("weighted error " + std::to_string(e_norm) +
                      " inside the guard band of bound " + std::to_string(theta) +
                      " (margin " + std::to_string(denom) + ")");
  Barrier b;
  b.phi = z / denom;
  b.phi_d = th2 / (denom * denom);
  return b;
}

// Boundary of the sign of 2 phi_d (z - c) - phi in z, for 0 < c < eps^2:
// negative below, positive above. Root of z^2 + eps^2 z - 2 c eps^2 = 0,
// i.e. the squared-error level beyond which the barrier drift dominates a
// disturbance offset c.
inline double barrier_drift_root(double eps, double c) {
  const double e2 = eps * eps;
  if (!(c > 0.0) || !(c < e2))
    throw HypothesisViolated("barrier_drift_root needs 0 < c < eps^2, got c=" +
                             std::to_string(c) + " eps^2=" + std::to_string(e2));
  return 0.5 * (-e2 + std::sqrt(e2 * e2 + 8.0 * c * e2));
}

}  // namespace pwamrac
