#pragma once

#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "pwamrac/adapt.hpp"
#include "pwamrac/certify.hpp"
#include "pwamrac/disturbance.hpp"
#include "pwamrac/envelope.hpp"
#include "pwamrac/pwa.hpp"
#include "pwamrac/signal.hpp"
#include "pwamrac/types.hpp"

namespace pwamrac {

struct SwitchEvent {
  double t = 0.0;
  int from = 0;
  int to = 0;
  double dwell = 0.0;  // since the previous switch, or since t0 for the first
  double boundary_residual = 0.0;
};

struct Sample {
  double t = 0.0;
  Vec x, xm, u;
  double e_norm_p = 0.0;
  double eps = std::numeric_limits<double>::quiet_NaN();
  double rho_t = 0.0;
  double phi = 0.0;
  int mode = 0;
  double V = std::numeric_limits<double>::quiet_NaN();
  double V_theta = std::numeric_limits<double>::quiet_NaN();
  std::optional<GainState> gains;  // only when SimOptions::log_gains
};

struct RunSummary {
  double max_e_over_bound = 0.0;      // max ||e||_P / barrier bound
  double min_rho_margin = std::numeric_limits<double>::infinity();   // min(rho - eps)
  double min_floor_margin = std::numeric_limits<double>::infinity(); // min(eps - g/h)
  double max_phi = 0.0;
  int switch_count = 0;
  double min_dwell = std::numeric_limits<double>::infinity();
  int dwell_violations = 0;
  double v_max_increase = -std::numeric_limits<double>::infinity();  // max V(t+) - V(t)
  double v_max_residual = -std::numeric_limits<double>::infinity();  // normalized by 1+V
  int v_violations = 0;
  int mode_mismatches = 0;
  int reset_anomalies = 0;            // jumps above the sqrt(mu) factor (never expected)
  int envelope_violations = 0;
  double max_bound_excursion = 0.0;   // worst gain clip distance (robust law)
  bool monitors_pass = true;
  double wall_seconds = 0.0;
  int samples = 0;
};

struct TrajectoryLog {
  std::vector<Sample> samples;
  std::vector<SwitchEvent> events;
  GainState final_gains;
  RunSummary summary;
};

struct SimOptions {
  double dt = 1e-3;
  double dt_out = 5e-2;
  double t_end = 0.0;
  bool strict_dwell = false;
  bool oracle_v = false;
  bool log_gains = false;
  int chatter_limit = 4;
  double boundary_tol = 1e-10;
  int max_bisect = 200;
};

// Everything a closed-loop run needs, resolved ahead of time.
struct SimSetup {
  PwaPlant plant;
  ReferenceModel ref;
  AdaptationLaw law = AdaptationLaw::nominal;
  std::vector<Mat> P;          // per-mode weights (nominal / robust)
  Mat P_common;                // common_p law
  GainStructure structure;
  std::optional<GainBounds> bounds;  // robust law
  PerformanceSpec perf;
  double h = 0.0, g = 0.0;     // auxiliary dynamics (unused by common_p)
  double eps0 = 0.0;
  double sqrt_mu = 1.0;
  double tau_d = std::numeric_limits<double>::quiet_NaN();  // NaN: no dwell reference
  GainState initial_gains;
  Vec x0, xm0;
  InputSignal input;
  Disturbance disturbance;
  SimOptions options;
  // Oracle extras for the Lyapunov diagnostic.
  std::optional<NominalGains> nominal;
};

struct Derivative {
  Vec x_dot, xm_dot;
  GainRates rates;
  Vec u;
  Vec e;
  double phi = 0.0, phi_d = 0.0;
};

// One evaluation of the full closed loop in a frozen mode, with the barrier
// bound theta supplied by the caller (eps for the switched laws, rho(t) for
// the common-P law). Throws BarrierViolated/NearBarrier through barrier_phi.
inline Derivative closed_loop_derivative(const PwaPlant& plant, const ReferenceModel& ref,
                                         int mode, AdaptationLaw law, const Mat& p_weight,
                                         const Mat& s_structure, const ModeGainBounds* bounds,
                                         double theta, const Vec& x, const Vec& xm,
                                         const Mat& kx, const Mat& kr, const Vec& kf,
                                         const Vec& r, const Disturbance& disturbance,
                                         double t) {
  Derivative d;
  d.e = x - xm;
  const double e_norm = std::sqrt(std::max(0.0, d.e.dot(p_weight * d.e)));
  const Barrier b = barrier_phi(e_norm, theta);
  d.phi = b.phi;
  d.phi_d = b.phi_d;
  d.u = control_output(kx, kr, kf, x, r);

  const auto& pl = plant.subsystem(mode);
  const auto& rm = ref.subsystem(mode);
  const Vec dist = disturbance.eval(x, d.u, t);
  d.x_dot = pl.A * x + pl.B * d.u + pl.f + dist;
  d.xm_dot = rm.A * xm + rm.B * r + rm.f;

  switch (law) {
    case AdaptationLaw::nominal:
    case AdaptationLaw::common_p:
      d.rates = gain_rates_nominal(d.phi_d, p_weight, rm.B, s_structure, d.e, x, r);
      break;
    case AdaptationLaw::robust:
      if (!bounds) throw ValidationError("robust law needs gain bounds");
      d.rates = gain_rates_robust(d.phi_d, p_weight, rm.B, s_structure, d.e, x, r, kx, kr, kf,
                                  *bounds);
      break;
  }
  return d;
}

class Simulator {
 public:
  explicit Simulator(SimSetup setup)
      : s_(std::move(setup)),
        t_(s_.perf.t0),
        x_(s_.x0),
        xm_(s_.xm0),
        gains_(s_.initial_gains),
        aux_{s_.eps0, s_.h, s_.g, s_.sqrt_mu} {
    validate_setup();
    mode_ = settle_mode(0);
    last_switch_t_ = t_;
  }

  const TrajectoryLog& log() const { return log_; }
  double t() const { return t_; }
  int mode() const { return mode_; }
  double eps() const { return aux_.eps; }
  const Vec& x() const { return x_; }
  const Vec& xm() const { return xm_; }
  const GainState& gains() const { return gains_; }

  // Advances by at most dt_max, splitting at region boundaries. Returns the
  // events raised inside the window (they are not yet in the log; run()
  // appends them).
  std::vector<SwitchEvent> step(double dt_max) {
    if (!(dt_max > 0.0)) throw ValidationError("step needs dt_max > 0");
    std::vector<SwitchEvent> events;
    const double t_target = t_ + dt_max;
    int switches = 0;
    while (t_ < t_target - 1e-15 * std::max(1.0, std::abs(t_target))) {
      const double dt = t_target - t_;
      const Core y = current_core();
      Core proposal = rk4(y, dt);
      if (region_contains(proposal, dt)) {
        commit(proposal, dt);
        t_ = t_target;  // absorb the accumulated rounding of t_ += dt
        break;
      }
      // The endpoint left the active region: bisect (tau_in, tau_out] until
      // the outside point sits on the boundary, then adopt it so first-match
      // assigns the region just entered.
      double tau_in = 0.0;
      double tau_out = dt;
      Core y_out = std::move(proposal);
      for (int it = 0; it < s_.options.max_bisect; ++it) {
        if (exit_residual(y_out, tau_out) < s_.options.boundary_tol) break;
        const double mid = 0.5 * (tau_in + tau_out);
        if (mid <= tau_in || mid >= tau_out) break;  // at the rounding floor
        Core y_mid = rk4(y, mid);
        if (region_contains(y_mid, mid)) {
          tau_in = mid;
        } else {
          tau_out = mid;
          y_out = std::move(y_mid);
        }
      }
      const double resid = exit_residual(y_out, tau_out);
      commit(y_out, tau_out);
      events.push_back(handle_switch(resid));
      if (++switches > s_.options.chatter_limit)
        throw ChatterDetected("more than " + std::to_string(s_.options.chatter_limit) +
                              " switches inside one integration window at t = " +
                              std::to_string(t_));
    }
    return events;
  }

  // Full run with sampling and monitors. On error the exception propagates
  // and log() holds everything up to the failure point.
  const TrajectoryLog& run() {
    const auto wall0 = std::chrono::steady_clock::now();
    const double t0 = s_.perf.t0;
    const double horizon = s_.options.t_end - t0;
    if (horizon < 0.0) throw ValidationError("t_end before t0");
    const long n_samples = std::lround(std::ceil(horizon / s_.options.dt_out - 1e-9));
    record_sample();
    for (long k = 1; k <= n_samples; ++k) {
      const double t_next = std::min(t0 + k * s_.options.dt_out, s_.options.t_end);
      while (t_ < t_next - 1e-12) {
        const double dt = std::min(s_.options.dt, t_next - t_);
        for (auto& ev : step(dt)) log_.events.push_back(ev);
      }
      t_ = t_next;  // keep the sampling grid exact
      record_sample();
    }
    log_.final_gains = gains_;
    log_.summary.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
    log_.summary.samples = static_cast<int>(log_.samples.size());
    return log_;
  }

 private:
  // Stacked integration state: plant, reference, and the ACTIVE mode's gains.
  // Inactive gains have zero rates, so they are not carried through the
  // integrator at all; that keeps them bit-identical while parked.
  struct Core {
    Vec x, xm;
    Mat kx, kr;
    Vec kf;
  };

  void validate_setup() {
    const auto n = s_.plant.n();
    const auto p = s_.plant.p();
    if (s_.ref.n() != n || s_.ref.p() != p || s_.ref.num_modes() != s_.plant.num_modes())
      throw ValidationError("plant/reference dimension mismatch");
    if (s_.x0.size() != n || s_.xm0.size() != n)
      throw ValidationError("initial states must be n-vectors");
    s_.perf.validate();
    s_.input.validate(p);
    const int modes = s_.plant.num_modes();
    if (static_cast<int>(s_.structure.S.size()) != modes)
      throw ValidationError("need one structure matrix per mode");
    if (s_.law == AdaptationLaw::common_p) {
      require_spd(s_.P_common, "common weighting matrix");
    } else {
      if (static_cast<int>(s_.P.size()) != modes)
        throw ValidationError("need one weighting matrix per mode");
      aux_.validate();
      if (!(s_.eps0 < s_.perf.rho0))
        throw ValidationError("auxiliary signal must start below rho0");
    }
    if (s_.law == AdaptationLaw::robust) {
      if (!s_.bounds || static_cast<int>(s_.bounds->modes.size()) != modes)
        throw ValidationError("robust law needs bounds for every mode");
    }
    if (static_cast<int>(gains_.Kx.size()) != modes)
      throw ValidationError("need one gain triple per mode");
    if (s_.options.oracle_v && (!s_.nominal || !s_.structure.M))
      throw OracleUnavailable("oracle V diagnostic needs nominal gains and M matrices");
    if (!(s_.options.dt > 0.0) || !(s_.options.dt_out > 0.0))
      throw ValidationError("dt and dt_out must be positive");
  }

  // Region membership depends on u, u on the active gains, and the active
  // gains on the region; iterate to a fixed point (immediate for partitions
  // that ignore u). A cycle here is control-induced chattering.
  int settle_mode(int guess) const {
    const Vec r_now = s_.input.eval(t_);
    int next = active_mode(s_.plant, x_, control_output(gains_, guess, x_, r_now));
    for (int it = 0;; ++it) {
      const int confirm = active_mode(s_.plant, x_, control_output(gains_, next, x_, r_now));
      if (confirm == next) return next;
      next = confirm;
      if (it >= 8)
        throw ChatterDetected("mode assignment refused to settle at t = " + std::to_string(t_));
    }
  }

  Core current_core() const {
    return Core{x_, xm_, gains_.Kx[mode_], gains_.Kr[mode_], gains_.Kf[mode_]};
  }

  double barrier_bound_at(double dt_from_t) const {
    if (s_.law == AdaptationLaw::common_p) return rho(s_.perf, t_ + dt_from_t);
    return eps_at(aux_, dt_from_t);
  }

  const Mat& weight() const {
    return s_.law == AdaptationLaw::common_p ? s_.P_common : s_.P[mode_];
  }

  Derivative eval(double dt_from_t, const Core& y) const {
    const ModeGainBounds* bounds =
        s_.law == AdaptationLaw::robust ? &s_.bounds->modes[mode_] : nullptr;
    return closed_loop_derivative(s_.plant, s_.ref, mode_, s_.law, weight(),
                                  s_.structure.S[mode_], bounds, barrier_bound_at(dt_from_t),
                                  y.x, y.xm, y.kx, y.kr, y.kf, s_.input.eval(t_ + dt_from_t),
                                  s_.disturbance, t_ + dt_from_t);
  }

  static Core axpy(const Core& y, const Derivative& k, double c) {
    return Core{y.x + c * k.x_dot, y.xm + c * k.xm_dot, y.kx + c * k.rates.kx_dot,
                y.kr + c * k.rates.kr_dot, y.kf + c * k.rates.kf_dot};
  }

  Core rk4(const Core& y, double dt) const {
    // Signals are sampled a relative nudge inside the step so a stage landing
    // exactly on an input discontinuity (pulse edges align with step ends)
    // takes the one-sided value from within the step. The time shift is far
    // below the truncation error and keeps every step on smooth dynamics.
    const double nudge = 1e-9 * dt;
    const Derivative k1 = eval(nudge, y);
    const Derivative k2 = eval(0.5 * dt, axpy(y, k1, 0.5 * dt));
    const Derivative k3 = eval(0.5 * dt, axpy(y, k2, 0.5 * dt));
    const Derivative k4 = eval(dt - nudge, axpy(y, k3, dt));
    Core out;
    const double w = dt / 6.0;
    out.x = y.x + w * (k1.x_dot + 2.0 * k2.x_dot + 2.0 * k3.x_dot + k4.x_dot);
    out.xm = y.xm + w * (k1.xm_dot + 2.0 * k2.xm_dot + 2.0 * k3.xm_dot + k4.xm_dot);
    out.kx = y.kx + w * (k1.rates.kx_dot + 2.0 * k2.rates.kx_dot + 2.0 * k3.rates.kx_dot +
                         k4.rates.kx_dot);
    out.kr = y.kr + w * (k1.rates.kr_dot + 2.0 * k2.rates.kr_dot + 2.0 * k3.rates.kr_dot +
                         k4.rates.kr_dot);
    out.kf = y.kf + w * (k1.rates.kf_dot + 2.0 * k2.rates.kf_dot + 2.0 * k3.rates.kf_dot +
                         k4.rates.kf_dot);
    return out;
  }

  // Membership is probed at the candidate sub-step's end time, with the
  // controller output that instant would produce.
  Vec joint_point(const Core& y, double dt_from_t) const {
    Vec z(s_.plant.n() + s_.plant.p());
    z << y.x, control_output(y.kx, y.kr, y.kf, y.x, s_.input.eval(t_ + dt_from_t));
    return z;
  }

  bool region_contains(const Core& y, double dt_from_t) const {
    return s_.plant.region(mode_).contains(joint_point(y, dt_from_t));
  }

  double exit_residual(const Core& y, double dt_from_t) const {
    return s_.plant.region(mode_).exit_residual(joint_point(y, dt_from_t));
  }

  void commit(const Core& y, double dt) {
    x_ = y.x;
    xm_ = y.xm;
    gains_.Kx[mode_] = y.kx;
    gains_.Kr[mode_] = y.kr;
    gains_.Kf[mode_] = y.kf;
    if (s_.law != AdaptationLaw::common_p) aux_ = eps_advance(aux_, dt);
    if (s_.law == AdaptationLaw::robust) clip_active_gains();
    t_ += dt;
  }

  // RK4 can overshoot a bound by O(dt^5); fold that back onto the box and
  // remember the worst excursion as a diagnostic. Anything beyond the slack
  // threshold in project_entry would have thrown already.
  void clip_active_gains() {
    const auto& b = s_.bounds->modes[mode_];
    auto clip = [&](double v, double lo, double hi) {
      const double c = std::min(std::max(v, lo), hi);
      log_.summary.max_bound_excursion =
          std::max(log_.summary.max_bound_excursion, std::abs(c - v));
      return c;
    };
    Mat& kx = gains_.Kx[mode_];
    for (Eigen::Index i = 0; i < kx.rows(); ++i)
      for (Eigen::Index j = 0; j < kx.cols(); ++j)
        kx(i, j) = clip(kx(i, j), b.kx_lo(i, j), b.kx_hi(i, j));
    Mat& kr = gains_.Kr[mode_];
    for (Eigen::Index i = 0; i < kr.rows(); ++i)
      for (Eigen::Index j = 0; j < kr.cols(); ++j)
        kr(i, j) = clip(kr(i, j), b.kr_lo(i, j), b.kr_hi(i, j));
    Vec& kf = gains_.Kf[mode_];
    for (Eigen::Index i = 0; i < kf.size(); ++i)
      kf[i] = clip(kf[i], b.kf_lo[i], b.kf_hi[i]);
  }

  SwitchEvent handle_switch(double boundary_residual) {
    const int from = mode_;
    const int next = settle_mode(from);

    SwitchEvent ev;
    ev.t = t_;
    ev.from = from;
    ev.to = next;
    ev.dwell = t_ - last_switch_t_;
    ev.boundary_residual = boundary_residual;

    const Vec e = x_ - xm_;
    const double before = std::sqrt(std::max(0.0, e.dot(weight() * e)));
    mode_ = next;
    if (s_.law != AdaptationLaw::common_p) {
      aux_ = eps_reset(aux_);
      const double after = std::sqrt(std::max(0.0, e.dot(weight() * e)));
      if (after > s_.sqrt_mu * before * (1.0 + 1e-9)) log_.summary.reset_anomalies++;
      barrier_phi(after, aux_.eps);  // revalidate under the new weight, throws on violation
    }

    log_.summary.switch_count++;
    log_.summary.min_dwell = std::min(log_.summary.min_dwell, ev.dwell);
    if (!std::isnan(s_.tau_d) && ev.dwell < s_.tau_d - 1e-12) {
      log_.summary.dwell_violations++;
      log_.summary.monitors_pass = false;
      if (s_.options.strict_dwell) {
        log_.events.push_back(ev);
        throw DwellViolated("dwell " + std::to_string(ev.dwell) + " s at t = " +
                            std::to_string(ev.t) + " is below the certified bound " +
                            std::to_string(s_.tau_d));
      }
    }
    last_switch_t_ = t_;
    return ev;
  }

  void record_sample() {
    Sample smp;
    smp.t = t_;
    smp.x = x_;
    smp.xm = xm_;
    smp.mode = mode_;
    const Vec r_now = s_.input.eval(t_);
    smp.u = control_output(gains_, mode_, x_, r_now);
    const Vec e = x_ - xm_;
    smp.e_norm_p = std::sqrt(std::max(0.0, e.dot(weight() * e)));
    smp.rho_t = rho(s_.perf, t_);

    double theta;
    if (s_.law == AdaptationLaw::common_p) {
      theta = smp.rho_t;
    } else {
      theta = aux_.eps;
      smp.eps = aux_.eps;
      const double floor = s_.g / s_.h;
      log_.summary.min_floor_margin =
          std::min(log_.summary.min_floor_margin, smp.eps - floor);
      log_.summary.min_rho_margin =
          std::min(log_.summary.min_rho_margin, smp.rho_t - smp.eps);
      if (!(smp.eps < smp.rho_t) || smp.eps < floor * (1.0 - 1e-12)) {
        log_.summary.envelope_violations++;
        log_.summary.monitors_pass = false;
      }
    }
    smp.phi = barrier_phi(smp.e_norm_p, theta).phi;  // throws when the bound is hit
    log_.summary.max_phi = std::max(log_.summary.max_phi, smp.phi);
    log_.summary.max_e_over_bound =
        std::max(log_.summary.max_e_over_bound, smp.e_norm_p / theta);

    if (active_mode(s_.plant, x_, smp.u) != mode_) {
      log_.summary.mode_mismatches++;
      log_.summary.monitors_pass = false;
    }

    if (s_.options.oracle_v) {
      const LyapunovValue v = lyapunov_V(*s_.nominal, s_.structure, gains_, e, weight(), theta);
      smp.V = v.V;
      smp.V_theta = v.V_theta;
      if (!log_.samples.empty() && !std::isnan(log_.samples.back().V)) {
        const double prev = log_.samples.back().V;
        const double inc = v.V - prev;
        log_.summary.v_max_increase = std::max(log_.summary.v_max_increase, inc);
        log_.summary.v_max_residual =
            std::max(log_.summary.v_max_residual, inc / (1.0 + prev));
        if (inc > 1e-6 * (1.0 + prev)) {
          log_.summary.v_violations++;
          log_.summary.monitors_pass = false;
        }
      }
    }
    if (s_.options.log_gains) smp.gains = gains_;
    log_.samples.push_back(std::move(smp));
  }

  SimSetup s_;
  double t_;
  Vec x_, xm_;
  GainState gains_;
  AuxiliarySignal aux_;
  int mode_ = 0;
  double last_switch_t_ = 0.0;
  TrajectoryLog log_;
};

struct DwellEntry {
  double t_prev = 0.0;
  double t = 0.0;
  double dwell = 0.0;
  bool violation = false;
};

struct DwellReport {
  std::vector<DwellEntry> entries;
  int violations = 0;
};

// Post-hoc dwell audit over consecutive switch pairs.
inline DwellReport dwell_monitor(const std::vector<SwitchEvent>& events, double tau_d) {
  DwellReport rep;
  for (std::size_t k = 1; k < events.size(); ++k) {
    DwellEntry e;
    e.t_prev = events[k - 1].t;
    e.t = events[k].t;
    e.dwell = e.t - e.t_prev;
    e.violation = e.dwell < tau_d;
    if (e.violation) rep.violations++;
    rep.entries.push_back(e);
  }
  return rep;
}

}  // namespace pwamrac
