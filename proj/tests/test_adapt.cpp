#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "pwamrac/adapt.hpp"
#include "pwamrac/demo_scenarios.hpp"
#include "pwamrac/scenario.hpp"

using namespace pwamrac;

TEST_CASE("fallback structure inverts the nominal feedforward gains") {
  const Scenario sc = mass_spring_scenario();
  const NominalGains nominal = matching_gains(sc.make_plant(), sc.make_reference());
  const GainStructure gs = GainStructure::from_nominal(nominal);
  REQUIRE(gs.S.size() == 3);
  REQUIRE(gs.M.has_value());
  for (std::size_t i = 0; i < gs.S.size(); ++i) {
    const Mat prod = gs.S[i] * nominal.Kr[i];
    REQUIRE((prod - Mat::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);
    REQUIRE(((*gs.M)[i] - Mat::Identity(2, 2)).cwiseAbs().maxCoeff() == 0.0);
  }

  NominalGains singular = nominal;
  singular.Kr[1] = Mat::Zero(2, 2);
  REQUIRE_THROWS_AS(GainStructure::from_nominal(singular), ValidationError);
}

TEST_CASE("identity structure weights the update by the inverse gain") {
  const Scenario sc = mass_spring_scenario();
  const NominalGains nominal = matching_gains(sc.make_plant(), sc.make_reference());
  const GainStructure gs = GainStructure::identity(nominal);
  REQUIRE(gs.S.size() == 3);
  REQUIRE(gs.M.has_value());
  for (std::size_t i = 0; i < gs.S.size(); ++i) {
    REQUIRE((gs.S[i] - Mat::Identity(2, 2)).cwiseAbs().maxCoeff() == 0.0);
    const Mat prod = (*gs.M)[i] * nominal.Kr[i];
    REQUIRE((prod - Mat::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);
  }

  // The rate scales S linearly and M inversely, leaving S' M' = (Kr*)^-T.
  const GainStructure fast = GainStructure::identity(nominal, 4.0);
  REQUIRE((fast.S[0] - 4.0 * Mat::Identity(2, 2)).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE(((*fast.M)[0] - 0.25 * (*gs.M)[0]).cwiseAbs().maxCoeff() < 1e-15);
  REQUIRE_THROWS_AS(GainStructure::identity(nominal, 0.0), ValidationError);
  REQUIRE_THROWS_AS(GainStructure::identity(nominal, -1.0), ValidationError);

  // Indefinite Kr (symmetric but with a negative eigenvalue) is rejected.
  NominalGains indefinite = nominal;
  indefinite.Kr[0](0, 0) = -1.0;
  REQUIRE_THROWS_AS(GainStructure::identity(indefinite), ValidationError);

  // Asymmetric Kr is rejected outright: (Kr S)^-1 would not be symmetric.
  NominalGains skew = nominal;
  skew.Kr[0](0, 1) = 2.0;
  REQUIRE_THROWS_AS(GainStructure::identity(skew), ValidationError);
}

TEST_CASE("structure selection prefers identity S and falls back when inadmissible") {
  const Scenario sc = mass_spring_scenario();
  const NominalGains nominal = matching_gains(sc.make_plant(), sc.make_reference());

  const GainStructure picked = default_structure(nominal, AdaptationLaw::nominal);
  REQUIRE((picked.S[0] - Mat::Identity(2, 2)).cwiseAbs().maxCoeff() == 0.0);

  NominalGains skew = nominal;
  skew.Kr[0](0, 1) = 2.0;
  const GainStructure fallback = default_structure(skew, AdaptationLaw::nominal);
  const Mat prod = fallback.S[0] * skew.Kr[0];
  REQUIRE((prod - Mat::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);

  // The rate carries through the fallback branch as well.
  const GainStructure fast = default_structure(skew, AdaptationLaw::nominal, 8.0);
  REQUIRE((fast.S[0] - 8.0 * fallback.S[0]).cwiseAbs().maxCoeff() < 1e-12);
  REQUIRE(((*fast.M)[0] - 0.125 * Mat::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-15);

  // A symmetric positive definite but non-diagonal Kr is fine for the plain
  // laws yet inadmissible for the projected one, which needs diagonal M.
  NominalGains coupled = nominal;
  coupled.Kr[0] << 5.0, 1.0, 1.0, 5.0;
  const GainStructure plain = default_structure(coupled, AdaptationLaw::nominal);
  REQUIRE((plain.S[0] - Mat::Identity(2, 2)).cwiseAbs().maxCoeff() == 0.0);
  const GainStructure projected = default_structure(coupled, AdaptationLaw::robust);
  const Mat prod2 = projected.S[0] * coupled.Kr[0];
  REQUIRE((prod2 - Mat::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("control output assembles the affine feedback") {
  Mat kx(1, 2);
  kx << 2.0, -1.0;
  Mat kr(1, 1);
  kr << 3.0;
  Vec kf(1);
  kf << 0.5;
  Vec x(2);
  x << 1.0, 4.0;
  Vec r(1);
  r << 2.0;
  const Vec u = control_output(kx, kr, kf, x, r);
  REQUIRE(u.size() == 1);
  REQUIRE(u[0] == Catch::Approx(2.0 - 4.0 + 6.0 + 0.5));
}

TEST_CASE("nominal rates follow the barrier-weighted gradient") {
  Mat p(2, 2);
  p << 2.0, 0.0, 0.0, 1.0;
  Mat b_m(2, 1);
  b_m << 0.0, 3.0;
  Mat s(1, 1);
  s << 0.5;
  Vec e(2);
  e << 1.0, -2.0;
  Vec x(2);
  x << 0.5, 4.0;
  Vec r(1);
  r << -1.0;
  const double phi_d = 0.25;

  // w = phi_d * S' Bm' P e = 0.25 * 0.5 * 3 * (1 * -2) = -0.75
  const GainRates g = gain_rates_nominal(phi_d, p, b_m, s, e, x, r);
  REQUIRE(g.kx_dot.rows() == 1);
  REQUIRE(g.kx_dot.cols() == 2);
  REQUIRE(g.kx_dot(0, 0) == Catch::Approx(0.75 * 0.5));
  REQUIRE(g.kx_dot(0, 1) == Catch::Approx(0.75 * 4.0));
  REQUIRE(g.kr_dot(0, 0) == Catch::Approx(-0.75));
  REQUIRE(g.kf_dot[0] == Catch::Approx(0.75));

  // The common-P variant is the same law with a different weight source.
  const GainRates g2 = gain_rates_common_p(phi_d, p, b_m, s, e, x, r);
  REQUIRE((g2.kx_dot - g.kx_dot).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("projection zeroes outward rates at the box boundary") {
  REQUIRE(project_entry(1.0, 2.0, -2.0, 2.0, 1e-9, "g") == 0.0);
  REQUIRE(project_entry(-1.0, 2.0, -2.0, 2.0, 1e-9, "g") == -1.0);
  REQUIRE(project_entry(-1.0, -2.0, -2.0, 2.0, 1e-9, "g") == 0.0);
  REQUIRE(project_entry(1.0, -2.0, -2.0, 2.0, 1e-9, "g") == 1.0);
  REQUIRE(project_entry(5.0, 0.0, -2.0, 2.0, 1e-9, "g") == 5.0);
  REQUIRE_THROWS_AS(project_entry(0.0, 2.1, -2.0, 2.0, 1e-9, "g"), BoundViolated);
  REQUIRE_THROWS_AS(project_entry(0.0, -2.1, -2.0, 2.0, 1e-9, "g"), BoundViolated);

  // Property: projected rates never push further outside the box.
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int i = 0; i < 2000; ++i) {
    const double gain = std::clamp(u(rng), -2.0, 2.0);
    const double rate = u(rng);
    const double proj = project_entry(rate, gain, -2.0, 2.0, 1e-9, "g");
    if (gain >= 2.0) REQUIRE(proj <= 0.0);
    if (gain <= -2.0) REQUIRE(proj >= 0.0);
    if (gain > -2.0 && gain < 2.0) REQUIRE(proj == rate);
  }
}

TEST_CASE("projected rates clip only saturated entries") {
  Mat rate(2, 2), gain(2, 2), lo(2, 2), hi(2, 2);
  rate << 1.0, -1.0, 1.0, -1.0;
  gain << 5.0, 5.0, 0.0, -5.0;
  lo = Mat::Constant(2, 2, -5.0);
  hi = Mat::Constant(2, 2, 5.0);
  const Mat out = project_derivative(rate, gain, lo, hi);
  REQUIRE(out(0, 0) == 0.0);   // at upper bound, pushing up
  REQUIRE(out(0, 1) == -1.0);  // at upper bound, pulling in
  REQUIRE(out(1, 0) == 1.0);   // interior
  REQUIRE(out(1, 1) == 0.0);   // at lower bound, pushing down
}

TEST_CASE("projected rates zero outward motion at the lower bound") {
  Vec rate(2), gain(2), lo(2), hi(2);
  rate << -1.0, 1.0;
  gain << -5.0, -5.0;
  lo = Vec::Constant(2, -5.0);
  hi = Vec::Constant(2, 5.0);
  const Vec out = project_derivative(rate, gain, lo, hi);
  REQUIRE(out[0] == 0.0);
  REQUIRE(out[1] == 1.0);
}

TEST_CASE("composite diagnostic vanishes at the ideal gains") {
  const Scenario sc = mass_spring_scenario();
  const NominalGains nominal = matching_gains(sc.make_plant(), sc.make_reference());
  const GainStructure gs = GainStructure::from_nominal(nominal);
  GainState ideal;
  ideal.Kx = nominal.Kx;
  ideal.Kr = nominal.Kr;
  ideal.Kf = nominal.Kf;
  const Mat p = Mat::Identity(4, 4);

  const LyapunovValue at_ideal = lyapunov_V(nominal, gs, ideal, Vec::Zero(4), p, 2.0);
  REQUIRE(at_ideal.V == Catch::Approx(0.0).margin(1e-15));

  const GainState off = GainState::scaled_nominal(nominal, 0.5);
  Vec e(4);
  e << 0.1, 0.0, 0.0, 0.0;
  const LyapunovValue v = lyapunov_V(nominal, gs, off, e, p, 2.0);
  REQUIRE(v.V_theta > 0.0);
  REQUIRE(v.phi > 0.0);
  REQUIRE(v.V == Catch::Approx(v.phi + v.V_theta));

  GainStructure no_oracle = gs;
  no_oracle.M.reset();
  REQUIRE_THROWS_AS(lyapunov_V(nominal, no_oracle, off, e, p, 2.0), OracleUnavailable);
}

TEST_CASE("error dynamics agree between plant minus model and gain mismatch form") {
  // For matched systems, xdot - xmdot must equal Am e + B (Ktilde_x x +
  // Ktilde_r r + Ktilde_f) identically in x, xm, r, and the adaptive gains.
  const Scenario sc = disturbed_demo_scenario();
  const PwaPlant plant = sc.make_plant();
  const ReferenceModel ref = sc.make_reference();
  const NominalGains nominal = matching_gains(plant, ref);

  std::mt19937_64 rng(3);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int mode = trial % plant.num_modes();
    Vec x(2), xm(2), r(1);
    x << gauss(rng), gauss(rng);
    xm << gauss(rng), gauss(rng);
    r << gauss(rng);
    Mat kx = nominal.Kx[mode] + 0.3 * Mat::Random(1, 2);
    Mat kr = nominal.Kr[mode] + 0.3 * Mat::Random(1, 1);
    Vec kf = nominal.Kf[mode] + 0.3 * Vec::Random(1);

    const Vec u = control_output(kx, kr, kf, x, r);
    const auto& pl = plant.subsystem(mode);
    const auto& rm = ref.subsystem(mode);
    const Vec x_dot = pl.A * x + pl.B * u + pl.f;
    const Vec xm_dot = rm.A * xm + rm.B * r + rm.f;

    const Vec e = x - xm;
    const Vec mismatch = (kx - nominal.Kx[mode]) * x + (kr - nominal.Kr[mode]) * r +
                         (kf - nominal.Kf[mode]);
    const Vec e_dot_direct = x_dot - xm_dot;
    const Vec e_dot_matched = rm.A * e + pl.B * mismatch;
    REQUIRE((e_dot_direct - e_dot_matched).cwiseAbs().maxCoeff() < 1e-10);
  }
}
