#pragma once

#include <Eigen/QR>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "pwamrac/envelope.hpp"
#include "pwamrac/linalg.hpp"
#include "pwamrac/region.hpp"
#include "pwamrac/types.hpp"

namespace pwamrac {

// One affine piece: x_dot = A x + B u + f while [x; u] lies in its region.
struct PwaSubsystem {
  Mat A;
  Mat B;
  Vec f;
};

namespace detail {

inline std::string vec_to_string(const Vec& v) {
  std::string s = "[";
  for (Eigen::Index k = 0; k < v.size(); ++k) s += (k ? ", " : "") + std::to_string(v[k]);
  return s + "]";
}

inline void check_subsystem_dims(const PwaSubsystem& s, Eigen::Index n, Eigen::Index p,
                                 const std::string& what) {
  if (s.A.rows() != n || s.A.cols() != n)
    throw ValidationError(what + ": A must be " + std::to_string(n) + "x" + std::to_string(n));
  if (s.B.rows() != n || s.B.cols() != p)
    throw ValidationError(what + ": B must be " + std::to_string(n) + "x" + std::to_string(p));
  if (s.f.size() != n)
    throw ValidationError(what + ": f must have length " + std::to_string(n));
  if (!s.A.allFinite() || !s.B.allFinite() || !s.f.allFinite())
    throw ValidationError(what + ": non-finite entries");
}

}  // namespace detail

// Piecewise affine plant over a polyhedral partition of state-input space.
// Regions are matched in declaration order; the partition is expected to be
// disjoint (see check_partition), which makes the order irrelevant away from
// boundaries and deterministic on them.
class PwaPlant {
 public:
  PwaPlant(std::vector<PwaSubsystem> subsystems, std::vector<Region> regions)
      : subsystems_(std::move(subsystems)), regions_(std::move(regions)) {
    if (subsystems_.empty()) throw ValidationError("plant needs at least one subsystem");
    if (regions_.size() != subsystems_.size())
      throw ValidationError("plant has " + std::to_string(subsystems_.size()) +
                            " subsystems but " + std::to_string(regions_.size()) + " regions");
    n_ = subsystems_[0].A.rows();
    p_ = subsystems_[0].B.cols();
    for (std::size_t i = 0; i < subsystems_.size(); ++i) {
      detail::check_subsystem_dims(subsystems_[i], n_, p_, "plant subsystem " + std::to_string(i));
      regions_[i].validate(n_ + p_, "plant region " + std::to_string(i));
    }
  }

  Eigen::Index n() const { return n_; }
  Eigen::Index p() const { return p_; }
  int num_modes() const { return static_cast<int>(subsystems_.size()); }
  const PwaSubsystem& subsystem(int i) const { return subsystems_[i]; }
  const Region& region(int i) const { return regions_[i]; }

 private:
  std::vector<PwaSubsystem> subsystems_;
  std::vector<Region> regions_;
  Eigen::Index n_ = 0;
  Eigen::Index p_ = 0;
};

// Reference dynamics share the plant's partition; every A must be Hurwitz.
class ReferenceModel {
 public:
  explicit ReferenceModel(std::vector<PwaSubsystem> subsystems)
      : subsystems_(std::move(subsystems)) {
    if (subsystems_.empty()) throw ValidationError("reference model needs at least one subsystem");
    n_ = subsystems_[0].A.rows();
    p_ = subsystems_[0].B.cols();
    for (std::size_t i = 0; i < subsystems_.size(); ++i) {
      detail::check_subsystem_dims(subsystems_[i], n_, p_,
                                   "reference subsystem " + std::to_string(i));
      const double abscissa = spectral_abscissa(subsystems_[i].A);
      if (!(abscissa < 0.0))
        throw NotHurwitz("reference subsystem " + std::to_string(i) +
                         " has spectral abscissa " + std::to_string(abscissa));
    }
  }

  Eigen::Index n() const { return n_; }
  Eigen::Index p() const { return p_; }
  int num_modes() const { return static_cast<int>(subsystems_.size()); }
  const PwaSubsystem& subsystem(int i) const { return subsystems_[i]; }

 private:
  std::vector<PwaSubsystem> subsystems_;
  Eigen::Index n_ = 0;
  Eigen::Index p_ = 0;
};

// First-match lookup of the active mode for a state-input pair.
inline int active_mode(const PwaPlant& plant, const Vec& x, const Vec& u) {
  Vec z(plant.n() + plant.p());
  z << x, u;
  for (int i = 0; i < plant.num_modes(); ++i) {
    if (plant.region(i).contains(z)) return i;
  }
  throw NoRegion("no region contains x = " + detail::vec_to_string(x) +
                 ", u = " + detail::vec_to_string(u));
}

// Ideal gains per mode: A + B Kx = A_ref, B Kr = B_ref, f + B Kf = f_ref.
struct NominalGains {
  std::vector<Mat> Kx;  // p x n
  std::vector<Mat> Kr;  // p x p
  std::vector<Vec> Kf;  // p
  std::vector<double> residuals;  // worst-case reconstruction error per mode
};

// Least-squares solve of the matching equations, mode by mode. Rejects the
// pair when any reconstruction residual exceeds tol (the reference is then
// not realizable through the plant's input channels).
inline NominalGains matching_gains(const PwaPlant& plant, const ReferenceModel& ref,
                                   double tol = 1e-6) {
  if (ref.num_modes() != plant.num_modes() || ref.n() != plant.n() || ref.p() != plant.p())
    throw ValidationError("plant and reference model dimensions disagree");
  NominalGains g;
  const auto s = plant.num_modes();
  g.Kx.reserve(s);
  g.Kr.reserve(s);
  g.Kf.reserve(s);
  g.residuals.reserve(s);
  for (int i = 0; i < s; ++i) {
    const auto& pl = plant.subsystem(i);
    const auto& rm = ref.subsystem(i);
    const auto dec = pl.B.completeOrthogonalDecomposition();
    Mat kx = dec.solve(rm.A - pl.A);
    Mat kr = dec.solve(rm.B);
    Vec kf = dec.solve(rm.f - pl.f);
    const double rx = (pl.A + pl.B * kx - rm.A).cwiseAbs().maxCoeff();
    const double rr = (pl.B * kr - rm.B).cwiseAbs().maxCoeff();
    const double rf = (pl.f + pl.B * kf - rm.f).cwiseAbs().maxCoeff();
    const double worst = std::max({rx, rr, rf});
    if (!(worst <= tol))
      throw Unmatchable("mode " + std::to_string(i) + " matching residual " +
                        std::to_string(worst) + " exceeds tolerance " + std::to_string(tol));
    g.Kx.push_back(std::move(kx));
    g.Kr.push_back(std::move(kr));
    g.Kf.push_back(std::move(kf));
    g.residuals.push_back(worst);
  }
  return g;
}

// Weighted error norm sqrt(e' P e); P must be symmetric positive definite.
inline double error_metric(const Vec& e, const Mat& p) {
  require_spd(p, "error metric weight");
  if (p.rows() != e.size())
    throw ValidationError("error metric: weight is " + std::to_string(p.rows()) + "x" +
                          std::to_string(p.cols()) + " but error has length " +
                          std::to_string(e.size()));
  const double q = e.dot(p * e);
  return std::sqrt(std::max(q, 0.0));
}

struct RescaledBound {
  PerformanceSpec spec;
  double factor = 1.0;
};

// Rescales a bound stated in an arbitrary metric sqrt(e'Se) into the switched
// P-metric the controller enforces, by the factor
// sqrt(lambda_max(S) / min_i lambda_min(P_i)). The change of metric is only
// conservative when lambda_max(S) <= min_i lambda_min(P_i), i.e. when the
// P_i have been scaled up to dominate S.
inline RescaledBound global_bound_rescale(const Mat& s, const std::vector<Mat>& p_list,
                                          const PerformanceSpec& target) {
  require_spd(s, "global bound metric");
  if (p_list.empty()) throw ValidationError("global_bound_rescale: empty weight list");
  double min_lambda = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < p_list.size(); ++i) {
    require_spd(p_list[i], "weight " + std::to_string(i));
    min_lambda = std::min(min_lambda, sym_spectrum(p_list[i]).lambda_min);
  }
  RescaledBound out;
  out.factor = std::sqrt(sym_spectrum(s).lambda_max / min_lambda);
  out.spec = target;
  out.spec.rho0 *= out.factor;
  out.spec.rho_inf *= out.factor;
  return out;
}

struct PartitionReport {
  int samples = 0;
  int overlaps = 0;   // points claimed by more than one region
  int uncovered = 0;  // points claimed by none
};

// Monte-Carlo disjointness/coverage probe over an axis-aligned box in
// state-input space. Overlap breaks the disjointness the first-match rule
// assumes, so callers usually treat overlaps > 0 as a validation failure;
// uncovered corners may be fine if trajectories never reach them.
inline PartitionReport check_partition(const PwaPlant& plant, const Vec& lo, const Vec& hi,
                                       int samples = 10000, std::uint64_t seed = 0) {
  const Eigen::Index dim = plant.n() + plant.p();
  if (lo.size() != dim || hi.size() != dim)
    throw ValidationError("partition check box must have length n+p = " + std::to_string(dim));
  if (((hi - lo).array() < 0.0).any())
    throw ValidationError("partition check box has hi < lo");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  PartitionReport rep;
  rep.samples = samples;
  Vec z(dim);
  for (int k = 0; k < samples; ++k) {
    for (Eigen::Index j = 0; j < dim; ++j) z[j] = lo[j] + (hi[j] - lo[j]) * unit(rng);
    int hits = 0;
    for (int i = 0; i < plant.num_modes(); ++i)
      if (plant.region(i).contains(z)) ++hits;
    if (hits > 1) ++rep.overlaps;
    if (hits == 0) ++rep.uncovered;
  }
  return rep;
}

}  // namespace pwamrac
