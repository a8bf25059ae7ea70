#pragma once

#include <cmath>

#include "pwamrac/scenario.hpp"

namespace pwamrac {

namespace detail {

// Block-diagonal double integrator pair [[0,1],[-a,-b]] with input gain k on
// the velocity rows; the shape shared by all three reference modes below.
inline PwaSubsystem chained_pair(double a, double b, double k, const Vec& f) {
  PwaSubsystem s;
  s.A = Mat::Zero(4, 4);
  s.A(0, 1) = 1.0;
  s.A(1, 0) = -a;
  s.A(1, 1) = -b;
  s.A(2, 3) = 1.0;
  s.A(3, 2) = -a;
  s.A(3, 3) = -b;
  s.B = Mat::Zero(4, 2);
  s.B(1, 0) = k;
  s.B(3, 1) = k;
  s.f = f;
  return s;
}

inline Vec vec4(double a, double b, double c, double d) {
  Vec v(4);
  v << a, b, c, d;
  return v;
}

inline Vec axis6(double x1, double x3) {
  Vec v = Vec::Zero(6);
  v[0] = x1;
  v[2] = x3;
  return v;
}

}  // namespace detail

// Two carts coupled by a spring whose stiffness takes one of three values
// depending on the relative displacement x3 - x1: nominal inside |x3-x1| <= 1,
// soft above, stiff below. Forces act on both carts. The reference model,
// weights, envelope, excitation, and initial gain offset reproduce the
// standard two-mass benchmark configuration end to end.
inline Scenario mass_spring_scenario() {
  const double m1 = 5.0, m2 = 1.0, c0 = 1.0, d = 1.0;
  const double c_mid = 10.0, c_soft = 1.0, c_stiff = 100.0;

  auto cart_mode = [&](double c, double offset) {
    PwaSubsystem s;
    s.A = Mat::Zero(4, 4);
    s.A(0, 1) = 1.0;
    s.A(1, 0) = -(c0 + c) / m1;
    s.A(1, 1) = -2.0 * d / m1;
    s.A(1, 2) = c / m1;
    s.A(1, 3) = d / m1;
    s.A(2, 3) = 1.0;
    s.A(3, 0) = c / m2;
    s.A(3, 1) = d / m2;
    s.A(3, 2) = -c / m2;
    s.A(3, 3) = -d / m2;
    s.B = Mat::Zero(4, 2);
    s.B(1, 0) = 1.0 / m1;
    s.B(3, 1) = 1.0 / m2;
    // offset keeps the piecewise spring force continuous at the breakpoints
    s.f = detail::vec4(0.0, offset / m1, 0.0, -offset / m2);
    return s;
  };

  Scenario sc;
  sc.name = "mass_spring_damper";
  sc.law = AdaptationLaw::nominal;
  sc.plant_subsystems = {cart_mode(c_mid, 0.0), cart_mode(c_soft, c_mid - c_soft),
                         cart_mode(c_stiff, c_stiff - c_mid)};

  Region mid;
  mid.halfspaces.push_back({detail::axis6(-1.0, 1.0), 1.0, true});  // x3 - x1 <= 1
  mid.halfspaces.push_back({detail::axis6(1.0, -1.0), 1.0, true});  // x1 - x3 <= 1
  Region soft;
  soft.halfspaces.push_back({detail::axis6(1.0, -1.0), -1.0, false});  // x3 - x1 > 1
  Region stiff;
  stiff.halfspaces.push_back({detail::axis6(-1.0, 1.0), -1.0, false});  // x3 - x1 < -1
  sc.regions = {std::move(mid), std::move(soft), std::move(stiff)};

  SamplingBox box;
  box.lo = Vec::Zero(6);
  box.hi = Vec::Zero(6);
  for (int k = 0; k < 4; ++k) {
    box.lo[k] = -4.0;
    box.hi[k] = 4.0;
  }
  for (int k = 4; k < 6; ++k) {
    box.lo[k] = -300.0;
    box.hi[k] = 300.0;
  }
  sc.sampling_box = std::move(box);

  sc.reference_subsystems = {
      detail::chained_pair(25.0, 10.0, 25.0, Vec::Zero(4)),
      detail::chained_pair(16.0, 8.0, 16.0, detail::vec4(0.0, 5.0, 0.0, -5.0)),
      detail::chained_pair(49.0, 14.0, 49.0, detail::vec4(0.0, -10.0, 0.0, -5.0))};

  Mat q = Mat::Zero(4, 4);
  q(0, 0) = q(1, 1) = q(2, 2) = q(3, 3) = 100.0;
  q(0, 1) = q(1, 0) = q(2, 3) = q(3, 2) = 10.0;
  sc.Q = {q, q, q};

  sc.perf = {10.0, 1.5, 0.02, 0.0};
  sc.h = 0.12;
  sc.g = 0.01;
  sc.eps0 = 9.0;

  SignalChannel ch1;
  ch1.sinusoids.push_back({0.3, 0.5, M_PI});
  SignalChannel ch2;
  ch2.schedule.period = 100.0;
  ch2.schedule.windows = {{2.0, 25.0, 50.0}, {-2.0, 75.0, 100.0}};
  sc.input.channels = {std::move(ch1), std::move(ch2)};

  sc.x0 = Vec::Zero(4);
  sc.xm0 = Vec::Zero(4);
  sc.initial_gains.scale_of_nominal = 0.5;
  // Fast enough that the barrier ratio stays small through the pulse edges
  // (the published runs show the same qualitative margin), yet well below the
  // rate where the update law stiffens beyond the fixed step.
  sc.adaptation_rate = 25.0;

  sc.dt = 1e-3;
  sc.dt_out = 5e-2;
  sc.t_end = 200.0;
  return sc;
}

// Two-mode single-input system with an additive state disturbance, sized so
// the disturbed small-gain condition holds with margin. Exercises the
// projected adaptation law: gains start 20 percent off their ideal values and
// every entry carries a +-2 box around the ideal gain.
inline Scenario disturbed_demo_scenario(std::uint64_t seed = 0) {
  auto sub = [](double a0, double a1, double f1) {
    PwaSubsystem s;
    s.A = Mat::Zero(2, 2);
    s.A(0, 1) = 1.0;
    s.A(1, 0) = a0;
    s.A(1, 1) = a1;
    s.B = Mat::Zero(2, 1);
    s.B(1, 0) = 1.0;
    s.f = Vec::Zero(2);
    s.f[1] = f1;
    return s;
  };
  auto ref = [](double a0, double a1, double k) {
    PwaSubsystem s;
    s.A = Mat::Zero(2, 2);
    s.A(0, 1) = 1.0;
    s.A(1, 0) = a0;
    s.A(1, 1) = a1;
    s.B = Mat::Zero(2, 1);
    s.B(1, 0) = k;
    s.f = Vec::Zero(2);
    return s;
  };

  Scenario sc;
  sc.name = "disturbed_two_mode";
  sc.law = AdaptationLaw::robust;
  sc.seed = seed;
  sc.plant_subsystems = {sub(-1.0, -1.0, 0.5), sub(-2.0, -0.5, -0.5)};
  sc.reference_subsystems = {ref(-4.0, -4.0, 4.0), ref(-9.0, -6.0, 9.0)};

  Vec axis = Vec::Zero(3);
  axis[0] = 1.0;
  Region left;
  left.halfspaces.push_back({axis, 0.5, true});  // x1 <= 0.5
  Region right;
  right.halfspaces.push_back({-axis, -0.5, false});  // x1 > 0.5
  sc.regions = {std::move(left), std::move(right)};

  SamplingBox box;
  box.lo = detail::vec4(-3.0, -3.0, -40.0, 0.0).head(3);
  box.hi = detail::vec4(3.0, 3.0, 40.0, 0.0).head(3);
  sc.sampling_box = std::move(box);

  sc.Q = {Mat::Identity(2, 2), Mat::Identity(2, 2)};
  sc.perf = {8.0, 3.0, 0.02, 0.0};
  sc.h = 0.128;
  sc.g = 0.0448;
  sc.eps0 = 4.0;

  // Ideal gains: Kx1 = [-3,-3], Kr1 = 4, Kf1 = -0.5; Kx2 = [-7,-5.5],
  // Kr2 = 9, Kf2 = 0.5. Boxes are ideal +- 2 elementwise.
  auto row = [](double a, double b) {
    Mat m(1, 2);
    m << a, b;
    return m;
  };
  auto one = [](double a) {
    Mat m(1, 1);
    m << a;
    return m;
  };
  auto scl = [](double a) {
    Vec v(1);
    v << a;
    return v;
  };
  GainBounds gb;
  gb.modes.push_back({row(-5.0, -5.0), row(-1.0, -1.0), one(2.0), one(6.0), scl(-2.5),
                      scl(1.5)});
  gb.modes.push_back({row(-9.0, -7.5), row(-5.0, -3.5), one(7.0), one(11.0), scl(-1.5),
                      scl(2.5)});
  sc.bounds = std::move(gb);

  sc.disturbance.kind = DisturbanceKind::bounded_random;
  sc.disturbance.d_bar = 0.045;
  sc.disturbance.tones = 6;

  // The pulse that drives the region crossings starts one certified dwell
  // time after t0 so even the first switch satisfies the dwell premise.
  SignalChannel ch;
  ch.sinusoids.push_back({0.2, 0.7, 0.0});
  ch.schedule.period = 60.0;
  ch.schedule.windows = {{1.2, 25.0, 55.0}};
  sc.input.channels = {std::move(ch)};

  sc.x0 = Vec::Zero(2);
  sc.xm0 = Vec::Zero(2);
  sc.initial_gains.scale_of_nominal = 0.8;

  sc.dt = 1e-3;
  sc.dt_out = 5e-2;
  sc.t_end = 130.0;
  return sc;
}

}  // namespace pwamrac
