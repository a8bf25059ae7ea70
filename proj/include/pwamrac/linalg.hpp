#pragma once

#include <Eigen/Eigenvalues>
#include <string>

#include "pwamrac/types.hpp"

namespace pwamrac {

inline Mat symmetrize(const Mat& m) { return 0.5 * (m + m.transpose()); }

inline bool is_symmetric(const Mat& m, double rel_tol = 1e-10) {
  if (m.rows() != m.cols()) return false;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

// Eigenvalue range of a symmetric matrix.
struct SymSpectrum {
  double lambda_min = 0.0;
  double lambda_max = 0.0;
};

inline SymSpectrum sym_spectrum(const Mat& m) {
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(m), Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw SolveFailed("symmetric eigensolve did not converge");
  return {es.eigenvalues().minCoeff(), es.eigenvalues().maxCoeff()};
}

inline void require_spd(const Mat& m, const std::string& what) {
  if (m.rows() != m.cols()) throw NotSpd(what + " is not square");
  if (!m.allFinite()) throw NotSpd(what + " has non-finite entries");
  if (!is_symmetric(m)) throw NotSpd(what + " is not symmetric");
  if (sym_spectrum(m).lambda_min <= 0.0) throw NotSpd(what + " is not positive definite");
}

// Largest real part among the eigenvalues of a (general, real) matrix.
inline double spectral_abscissa(const Mat& a) {
  Eigen::EigenSolver<Mat> es(a, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) throw SolveFailed("eigensolve did not converge");
  return es.eigenvalues().real().maxCoeff();
}

inline bool is_hurwitz(const Mat& a) { return spectral_abscissa(a) < 0.0; }

}  // namespace pwamrac
