#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pwamrac/envelope.hpp"
#include "pwamrac/linalg.hpp"
#include "pwamrac/pwa.hpp"
#include "pwamrac/types.hpp"

namespace pwamrac {

enum class AdaptationLaw { nominal, common_p, robust };

// Per-mode structure matrices S_i (p x p, invertible by assumption). When the
// ideal gains are known (oracle runs), M_i = (Kr_i* S_i)^-1 feeds the
// Lyapunov diagnostic; the analysis assumes M_i symmetric positive definite,
// and additionally diagonal for the projected law.
struct GainStructure {
  std::vector<Mat> S;
  std::optional<std::vector<Mat>> M;

  // Fallback choice S_i = (Kr_i*)^-1, which makes every M_i the identity but
  // scales the adaptation rates down by |Kr_i*|.
  static GainStructure from_nominal(const NominalGains& nominal) {
    GainStructure gs;
    std::vector<Mat> m;
    for (const auto& kr : nominal.Kr) {
      Eigen::FullPivLU<Mat> lu(kr);
      if (!lu.isInvertible())
        throw ValidationError("gain structure: nominal Kr is singular, supply S explicitly");
      gs.S.push_back(lu.inverse());
      m.push_back(Mat::Identity(kr.rows(), kr.cols()));
    }
    gs.M = std::move(m);
    return gs;
  }

  // Preferred choice S_i = rate * I with M_i = (1/rate) * (Kr_i*)^-1,
  // admissible whenever every Kr_i* is symmetric positive definite. The rate
  // scales every update law linearly; larger values learn faster at the cost
  // of a stiffer closed loop.
  static GainStructure identity(const NominalGains& nominal, double rate = 1.0) {
    if (!(rate > 0.0)) throw ValidationError("adaptation rate must be positive");
    GainStructure gs;
    std::vector<Mat> m;
    for (const auto& kr : nominal.Kr) {
      if (!is_symmetric(kr))
        throw ValidationError("identity structure needs symmetric nominal Kr");
      Eigen::FullPivLU<Mat> lu(kr);
      if (!lu.isInvertible())
        throw ValidationError("gain structure: nominal Kr is singular, supply S explicitly");
      Mat inv = lu.inverse();
      try {
        require_spd(symmetrize(inv), "adaptation weight (Kr*)^-1");
      } catch (const NotSpd& ex) {
        throw ValidationError(ex.what());
      }
      gs.S.push_back(rate * Mat::Identity(kr.rows(), kr.cols()));
      m.push_back((1.0 / rate) * inv);
    }
    gs.M = std::move(m);
    return gs;
  }
};

// Picks the structure matrices for a law: the identity choice when its M
// weights are admissible (symmetric positive definite, and diagonal for the
// projected law, whose element-wise projection argument needs it), otherwise
// the inverse-Kr fallback with the same rate scale.
inline GainStructure default_structure(const NominalGains& nominal, AdaptationLaw law,
                                       double rate = 1.0) {
  try {
    GainStructure gs = GainStructure::identity(nominal, rate);
    if (law == AdaptationLaw::robust) {
      for (const auto& m : *gs.M) {
        const double off = (m - Mat(m.diagonal().asDiagonal())).cwiseAbs().maxCoeff();
        if (off > 1e-12 * m.cwiseAbs().maxCoeff())
          throw ValidationError("projected law needs diagonal adaptation weights");
      }
    }
    return gs;
  } catch (const ValidationError&) {
    if (!(rate > 0.0)) throw;
    GainStructure gs = GainStructure::from_nominal(nominal);
    for (auto& s : gs.S) s *= rate;
    for (auto& m : *gs.M) m *= 1.0 / rate;
    return gs;
  }
}

// Element-wise box bounds for the projected law.
struct ModeGainBounds {
  Mat kx_lo, kx_hi;
  Mat kr_lo, kr_hi;
  Vec kf_lo, kf_hi;
};

struct GainBounds {
  std::vector<ModeGainBounds> modes;

  static GainBounds unbounded(int s, Eigen::Index n, Eigen::Index p) {
    const double inf = std::numeric_limits<double>::infinity();
    GainBounds b;
    for (int i = 0; i < s; ++i)
      b.modes.push_back({Mat::Constant(p, n, -inf), Mat::Constant(p, n, inf),
                         Mat::Constant(p, p, -inf), Mat::Constant(p, p, inf),
                         Vec::Constant(p, -inf), Vec::Constant(p, inf)});
    return b;
  }
};

// Adaptive gains, one triple per mode. Only the active mode's triple moves;
// the integrator leaves the others untouched so they stay bit-identical
// across the intervals where their mode is inactive.
struct GainState {
  std::vector<Mat> Kx;  // p x n
  std::vector<Mat> Kr;  // p x p
  std::vector<Vec> Kf;  // p

  static GainState zero(int s, Eigen::Index n, Eigen::Index p) {
    GainState g;
    for (int i = 0; i < s; ++i) {
      g.Kx.push_back(Mat::Zero(p, n));
      g.Kr.push_back(Mat::Zero(p, p));
      g.Kf.push_back(Vec::Zero(p));
    }
    return g;
  }

  static GainState scaled_nominal(const NominalGains& nominal, double scale) {
    GainState g;
    for (std::size_t i = 0; i < nominal.Kx.size(); ++i) {
      g.Kx.push_back(scale * nominal.Kx[i]);
      g.Kr.push_back(scale * nominal.Kr[i]);
      g.Kf.push_back(scale * nominal.Kf[i]);
    }
    return g;
  }
};

inline Vec control_output(const Mat& kx, const Mat& kr, const Vec& kf, const Vec& x,
                          const Vec& r) {
  return kx * x + kr * r + kf;
}

inline Vec control_output(const GainState& gains, int mode, const Vec& x, const Vec& r) {
  return control_output(gains.Kx[mode], gains.Kr[mode], gains.Kf[mode], x, r);
}

struct GainRates {
  Mat kx_dot;
  Mat kr_dot;
  Vec kf_dot;
};

// Barrier-weighted adaptation for the active mode. All three rates share the
// column vector w = phi_d S' Bm' P e; inactive modes hold still (zero rates).
inline GainRates gain_rates_nominal(double phi_d, const Mat& p, const Mat& b_m, const Mat& s,
                                    const Vec& e, const Vec& x, const Vec& r) {
  const Vec w = phi_d * (s.transpose() * (b_m.transpose() * (p * e)));
  GainRates g;
  g.kx_dot = -w * x.transpose();
  g.kr_dot = -w * r.transpose();
  g.kf_dot = -w;
  return g;
}

// Same law under a common weighting matrix, with the barrier slope taken
// against the performance bound rho(t) instead of the auxiliary signal.
inline GainRates gain_rates_common_p(double phi_d0, const Mat& p_common, const Mat& b_m,
                                     const Mat& s, const Vec& e, const Vec& x, const Vec& r) {
  return gain_rates_nominal(phi_d0, p_common, b_m, s, e, x, r);
}

// Element-wise projection: zero any rate pushing a gain outward while it sits
// at (or beyond, up to slack) its bound; inward rates pass through. A gain
// strictly outside its box signals integrator overshoot and is an error.
inline double project_entry(double rate, double gain, double lo, double hi, double slack,
                            const std::string& what) {
  if (gain > hi + slack || gain < lo - slack)
    throw BoundViolated(what + ": gain " + std::to_string(gain) + " outside [" +
                        std::to_string(lo) + ", " + std::to_string(hi) + "]");
  if (gain >= hi && rate > 0.0) return 0.0;
  if (gain <= lo && rate < 0.0) return 0.0;
  return rate;
}

inline Mat project_derivative(const Mat& rate, const Mat& gain, const Mat& lo, const Mat& hi,
                              double slack = 1e-9, const std::string& what = "gain") {
  Mat out(rate.rows(), rate.cols());
  for (Eigen::Index i = 0; i < rate.rows(); ++i)
    for (Eigen::Index j = 0; j < rate.cols(); ++j)
      out(i, j) = project_entry(rate(i, j), gain(i, j), lo(i, j), hi(i, j), slack,
                                what + "(" + std::to_string(i) + "," + std::to_string(j) + ")");
  return out;
}

inline Vec project_derivative(const Vec& rate, const Vec& gain, const Vec& lo, const Vec& hi,
                              double slack = 1e-9, const std::string& what = "gain") {
  Vec out(rate.size());
  for (Eigen::Index i = 0; i < rate.size(); ++i)
    out[i] = project_entry(rate[i], gain[i], lo[i], hi[i], slack,
                           what + "(" + std::to_string(i) + ")");
  return out;
}

// Projected variant of the adaptation law for bounded-disturbance runs.
inline GainRates gain_rates_robust(double phi_d, const Mat& p, const Mat& b_m, const Mat& s,
                                   const Vec& e, const Vec& x, const Vec& r, const Mat& kx,
                                   const Mat& kr, const Vec& kf, const ModeGainBounds& bounds) {
  GainRates g = gain_rates_nominal(phi_d, p, b_m, s, e, x, r);
  g.kx_dot = project_derivative(g.kx_dot, kx, bounds.kx_lo, bounds.kx_hi, 1e-9, "Kx");
  g.kr_dot = project_derivative(g.kr_dot, kr, bounds.kr_lo, bounds.kr_hi, 1e-9, "Kr");
  g.kf_dot = project_derivative(g.kf_dot, kf, bounds.kf_lo, bounds.kf_hi, 1e-9, "Kf");
  return g;
}

struct LyapunovValue {
  double V = 0.0;
  double V_theta = 0.0;  // parameter-error part
  double phi = 0.0;      // barrier part
};

// Composite function V = phi + sum_i tr(Ktilde' M_i Ktilde) over all gain
// blocks, where Ktilde = K - K*. Needs the true gains, hence oracle-only.
// theta is the active barrier bound (eps, or rho(t) for the common-P law).
inline LyapunovValue lyapunov_V(const NominalGains& nominal, const GainStructure& structure,
                                const GainState& gains, const Vec& e, const Mat& p_active,
                                double theta) {
  if (!structure.M)
    throw OracleUnavailable("Lyapunov diagnostic needs the M matrices (oracle runs only)");
  const auto& m_list = *structure.M;
  if (m_list.size() != nominal.Kx.size() || gains.Kx.size() != nominal.Kx.size())
    throw ValidationError("Lyapunov diagnostic: mode count mismatch");
  LyapunovValue out;
  for (std::size_t i = 0; i < nominal.Kx.size(); ++i) {
    const Mat dx = gains.Kx[i] - nominal.Kx[i];
    const Mat dr = gains.Kr[i] - nominal.Kr[i];
    const Vec df = gains.Kf[i] - nominal.Kf[i];
    out.V_theta += (dx.transpose() * m_list[i] * dx).trace();
    out.V_theta += (dr.transpose() * m_list[i] * dr).trace();
    out.V_theta += df.dot(m_list[i] * df);
  }
  const double e_norm = std::sqrt(std::max(0.0, e.dot(p_active * e)));
  out.phi = barrier_phi(e_norm, theta).phi;
  out.V = out.phi + out.V_theta;
  return out;
}

}  // namespace pwamrac
