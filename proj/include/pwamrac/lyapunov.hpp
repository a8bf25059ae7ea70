#pragma once

#include <Eigen/LU>
#include <string>

#include "pwamrac/linalg.hpp"
#include "pwamrac/types.hpp"

namespace pwamrac {

// Solves A' P + P A = -Q for symmetric positive definite P, by vectorizing
// to (I (x) A' + A' (x) I) vec(P) = -vec(Q) and running a dense LU. The n^2
// unknowns keep this comfortably exact for the small state dimensions this
// library targets; the residual below is checked, not assumed.
inline Mat solve_lyapunov(const Mat& a, const Mat& q) {
  const Eigen::Index n = a.rows();
  if (a.cols() != n) throw ValidationError("solve_lyapunov: A must be square");
  if (q.rows() != n || q.cols() != n)
    throw ValidationError("solve_lyapunov: Q must match A's dimension");
  require_spd(q, "Q");
  const double abscissa = spectral_abscissa(a);
  if (!(abscissa < 0.0))
    throw NotHurwitz("solve_lyapunov: spectral abscissa " + std::to_string(abscissa) +
                     " is not negative");

  // kron(I, A') + kron(A', I), laid out so column-stacked vec(P) works out.
  const Mat at = a.transpose();
  Mat m = Mat::Zero(n * n, n * n);
  for (Eigen::Index j = 0; j < n; ++j)
    m.block(j * n, j * n, n, n) += at;                       // I (x) A'
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i)
      m.block(i * n, j * n, n, n).diagonal().array() += at(i, j);  // A' (x) I

  Vec rhs(n * n);
  for (Eigen::Index j = 0; j < n; ++j) rhs.segment(j * n, n) = -q.col(j);

  Eigen::PartialPivLU<Mat> lu(m);
  Vec vp = lu.solve(rhs);
  if (!vp.allFinite()) throw SolveFailed("solve_lyapunov: singular vectorized system");

  Mat p(n, n);
  for (Eigen::Index j = 0; j < n; ++j) p.col(j) = vp.segment(j * n, n);
  p = symmetrize(p);

  const double resid = (a.transpose() * p + p * a + q).norm();
  if (!(resid <= 1e-8 * std::max(1.0, q.norm())))
    throw SolveFailed("solve_lyapunov: residual " + std::to_string(resid));
  if (sym_spectrum(p).lambda_min <= 0.0)
    throw SolveFailed("solve_lyapunov: solution not positive definite");
  return p;
}

// Solves the strict inequality A' P + P A + P < -Q by shifting: a solution of
// (A + I/2)' P + P (A + I/2) = -(Q + delta I) satisfies it with margin delta.
// delta defaults to 1e-3 * lambda_min(Q). Strictness is re-verified on the
// result by an eigenvalue check rather than trusted from the construction.
inline Mat solve_lyapunov_shifted(const Mat& a, const Mat& q, double delta_rel = 1e-3) {
  const Eigen::Index n = a.rows();
  if (a.cols() != n) throw ValidationError("solve_lyapunov_shifted: A must be square");
  require_spd(q, "Q");
  const Mat shifted = a + 0.5 * Mat::Identity(n, n);
  const double abscissa = spectral_abscissa(shifted);
  if (!(abscissa < 0.0))
    throw NotShiftedHurwitz("solve_lyapunov_shifted: A + I/2 has spectral abscissa " +
                            std::to_string(abscissa));
  const double delta = delta_rel * sym_spectrum(q).lambda_min;
  const Mat p = solve_lyapunov(shifted, q + delta * Mat::Identity(n, n));
  const double strict = sym_spectrum(a.transpose() * p + p * a + p + q).lambda_max;
  if (!(strict < 0.0))
    throw SolveFailed("solve_lyapunov_shifted: strict inequality check failed, margin " +
                      std::to_string(strict));
  return p;
}

}  // namespace pwamrac
