#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "pwamrac/certify.hpp"
#include "pwamrac/demo_scenarios.hpp"
#include "pwamrac/scenario.hpp"

using namespace pwamrac;

namespace {

Certificate benchmark_certificate() {
  const Scenario sc = mass_spring_scenario();
  return build_certificate(sc.make_reference(), sc.Q, sc.perf, sc.h, sc.perf.l, sc.g,
                           /*robust=*/false);
}

}  // namespace

TEST_CASE("benchmark certificate matches frozen constants") {
  const Certificate cert = benchmark_certificate();
  REQUIRE(cert.sqrt_mu == Catch::Approx(7.0892676755833754).epsilon(1e-10));
  REQUIRE(cert.mu == Catch::Approx(50.2577161761).epsilon(1e-8));
  REQUIRE(cert.alpha_m == Catch::Approx(0.4921718624205859).epsilon(1e-10));
  REQUIRE(cert.h_max == Catch::Approx(0.2460859312).epsilon(1e-8));
  REQUIRE(cert.tau_d == Catch::Approx(24.020484677661603).epsilon(1e-10));
  REQUIRE(cert.lambda_min_Q.size() == 3);
  for (double lmin : cert.lambda_min_Q) REQUIRE(lmin == Catch::Approx(90.0).epsilon(1e-12));
}

TEST_CASE("dwell bound reproduces hand-computed values") {
  // Same constants with the rounded sqrt(mu) from the worked example.
  const double tau = dwell_time_bound(0.12, 0.02, 0.01, 1.5, 7.1);
  REQUIRE(tau == Catch::Approx(24.045453388683878).epsilon(1e-10));

  const double ref_bound = reference_dwell_bound(50.2577161761, 0.4921718624205859);
  REQUIRE(ref_bound == Catch::Approx(7.958935465404574).epsilon(1e-6));
}

TEST_CASE("dwell bound rejects inconsistent rates") {
  REQUIRE_THROWS_AS(dwell_time_bound(0.02, 0.02, 0.01, 1.5, 7.1), HypothesisViolated);
  REQUIRE_THROWS_AS(dwell_time_bound(0.01, 0.02, 0.01, 1.5, 7.1), HypothesisViolated);
  // Floor too close to the reset envelope: sqrt_mu * g / h exceeds rho_inf.
  REQUIRE_THROWS_AS(dwell_time_bound(0.12, 0.02, 0.01, 0.5, 7.1), HypothesisViolated);
}

TEST_CASE("nominal conditions pass on the benchmark and fail for fast decay") {
  const Certificate cert = benchmark_certificate();
  const Verdict ok = check_theorem1(cert);
  REQUIRE(ok.pass);
  REQUIRE(ok.conditions.size() == 3);
  for (const auto& c : ok.conditions) REQUIRE(c.pass);
  REQUIRE(std::isfinite(ok.tau_d));

  // h = 0.3 violates only the adaptation-rate ceiling.
  const Verdict bad = check_theorem1(cert, 0.3, 0.02, 0.01, 1.5);
  REQUIRE_FALSE(bad.pass);
  int failures = 0;
  for (const auto& c : bad.conditions) {
    if (!c.pass) {
      ++failures;
      REQUIRE(c.name == "h_below_half_alpha_m");
    }
  }
  REQUIRE(failures == 1);
}

TEST_CASE("nominal verdict survives an infeasible dwell bound") {
  const Certificate cert = benchmark_certificate();
  // rho_inf below the reset floor: conditions fail and tau_d is not finite.
  const Verdict v = check_theorem1(cert, 0.12, 0.02, 0.01, 1e-3);
  REQUIRE_FALSE(v.pass);
  REQUIRE_FALSE(std::isfinite(v.tau_d));
}

TEST_CASE("robust conditions pass on the disturbed demo") {
  const Scenario sc = disturbed_demo_scenario();
  const Certificate cert =
      build_certificate(sc.make_reference(), sc.Q, sc.perf, sc.h, sc.perf.l, sc.g,
                        /*robust=*/true, sc.disturbance.d_bar);
  REQUIRE(cert.sqrt_mu == Catch::Approx(4.707010012441929).epsilon(1e-9));
  REQUIRE(cert.alpha_m == Catch::Approx(0.4270941287336339).epsilon(1e-9));
  REQUIRE(cert.kappa.size() == 2);
  REQUIRE(cert.kappa[0] == Catch::Approx(0.4006005168952821).epsilon(1e-8));
  REQUIRE(cert.kappa[1] == Catch::Approx(0.5145416657431259).epsilon(1e-8));
  REQUIRE(cert.tau_d == Catch::Approx(20.57058723008672).epsilon(1e-9));

  const Verdict v = check_theorem2(cert);
  REQUIRE(v.pass);
  REQUIRE(v.conditions.size() == 7);  // 3 nominal + strict + 2 kappa + disturbance
  REQUIRE(v.c == Catch::Approx(0.0277119010606674).epsilon(1e-8));
  REQUIRE(v.disturbance_threshold == Catch::Approx(0.128 / 0.0448).epsilon(1e-12));
  REQUIRE(v.c_floor_margin > 0.0);
}

TEST_CASE("robust conditions reject a large disturbance bound") {
  const Scenario sc = disturbed_demo_scenario();
  const Certificate cert =
      build_certificate(sc.make_reference(), sc.Q, sc.perf, sc.h, sc.perf.l, sc.g,
                        /*robust=*/true, /*d_bar=*/1.0);
  const Verdict v = check_theorem2(cert);
  REQUIRE_FALSE(v.pass);
  bool disturbance_failed = false;
  for (const auto& c : v.conditions)
    if (c.name == "disturbance_below_h_over_g" && !c.pass) disturbance_failed = true;
  REQUIRE(disturbance_failed);
}

TEST_CASE("robust conditions reject an adaptation rate that erases kappa") {
  const Scenario sc = disturbed_demo_scenario();
  const Certificate cert =
      build_certificate(sc.make_reference(), sc.Q, sc.perf, 0.25, sc.perf.l, sc.g,
                        /*robust=*/true, sc.disturbance.d_bar);
  const Verdict v = check_theorem2(cert);
  REQUIRE_FALSE(v.pass);
  bool kappa_failed = false;
  for (const auto& c : v.conditions)
    if (c.name.rfind("kappa_positive_mode_", 0) == 0 && !c.pass) kappa_failed = true;
  REQUIRE(kappa_failed);
}

TEST_CASE("common quadratic certificate found for shared dynamics") {
  PwaSubsystem s1, s2;
  s1.A = (Mat(2, 2) << 0.0, 1.0, -4.0, -4.0).finished();
  s1.B = (Mat(2, 1) << 0.0, 1.0).finished();
  s1.f = Vec::Zero(2);
  s2 = s1;
  s2.f = (Vec(2) << 0.0, 1.0).finished();
  ReferenceModel ref({s1, s2});
  std::vector<Mat> q{Mat::Identity(2, 2), Mat::Identity(2, 2)};

  const CommonPResult res = check_corollary_common_P(ref, q, /*l=*/0.02);
  REQUIRE(res.found);
  REQUIRE(res.l_condition);
  REQUIRE(res.l_max > 0.02);
  for (int i = 0; i < 2; ++i) {
    const Mat m = symmetrize(ref.subsystem(i).A.transpose() * res.P +
                             res.P * ref.subsystem(i).A + q[i]);
    REQUIRE(sym_spectrum(m).lambda_max <= 1e-9 * sym_spectrum(q[i]).lambda_max);
  }
}

TEST_CASE("common quadratic certificate absent for a known infeasible pair") {
  PwaSubsystem s1, s2;
  s1.A = (Mat(2, 2) << -1.0, -1.0, 1.0, -1.0).finished();
  s1.B = (Mat(2, 1) << 0.0, 1.0).finished();
  s1.f = Vec::Zero(2);
  s2 = s1;
  s2.A = (Mat(2, 2) << -1.0, -10.0, 0.1, -1.0).finished();
  ReferenceModel ref({s1, s2});
  std::vector<Mat> q{Mat::Identity(2, 2), Mat::Identity(2, 2)};

  const CommonPResult res = check_corollary_common_P(ref, q, 0.02);
  REQUIRE_FALSE(res.found);
}

TEST_CASE("scenario certification produces a passing verdict end to end") {
  const Scenario sc = mass_spring_scenario();
  const CertifyOutcome out = certify_scenario(sc);
  REQUIRE(out.verdict.pass);
  REQUIRE(out.cert.has_value());
  REQUIRE(out.eps0 == Catch::Approx(9.0));
  REQUIRE(out.warnings.empty());
}
