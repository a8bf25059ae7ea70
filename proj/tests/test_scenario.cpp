#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>

#include "pwamrac/demo_scenarios.hpp"
#include "pwamrac/scenario.hpp"

using namespace pwamrac;
using nlohmann::json;

namespace {

json minimal_json() {
  return json::parse(R"({
    "law": "nominal",
    "plant": {
      "subsystems": [
        {"A": [[0, 1], [-2, -2]], "B": [[0], [1]], "f": [0, 0]}
      ],
      "regions": [
        {"halfspaces": [{"normal": [1, 0, 0], "offset": 1e9}]}
      ]
    },
    "reference": {
      "subsystems": [
        {"A": [[0, 1], [-4, -4]], "B": [[0], [4]], "f": [0, 0]}
      ]
    },
    "q": [[[1, 0], [0, 1]]],
    "performance": {"rho0": 5.0, "rho_inf": 1.0, "l": 0.02},
    "envelope": {"h": 0.2, "g": 0.01},
    "input": {"channels": [{"sinusoids": [{"amplitude": 0.5, "omega": 1.0}]}]},
    "initial": {"x": [0, 0], "x_m": [0, 0], "gain_scale": 0.5},
    "integration": {"t_end": 5.0}
  })");
}

}  // namespace

TEST_CASE("minimal scenario parses with defaults") {
  const Scenario sc = parse_scenario(minimal_json());
  REQUIRE(sc.name == "scenario");
  REQUIRE(sc.law == AdaptationLaw::nominal);
  REQUIRE(sc.seed == 0);
  REQUIRE(sc.plant_subsystems.size() == 1);
  REQUIRE(sc.regions.size() == 1);
  REQUIRE(sc.regions[0].halfspaces[0].closed);  // default
  REQUIRE_FALSE(sc.sampling_box.has_value());
  REQUIRE_FALSE(sc.eps0.has_value());
  REQUIRE(sc.perf.t0 == 0.0);
  REQUIRE(sc.h == Catch::Approx(0.2));
  REQUIRE(sc.dt == Catch::Approx(1e-3));
  REQUIRE(sc.dt_out == Catch::Approx(5e-2));
  REQUIRE(sc.t_end == Catch::Approx(5.0));
  REQUIRE(sc.initial_gains.scale_of_nominal.has_value());
  REQUIRE(*sc.initial_gains.scale_of_nominal == Catch::Approx(0.5));
  REQUIRE(sc.input.channels.size() == 1);
  REQUIRE(sc.disturbance.kind == DisturbanceKind::none);
  REQUIRE(sc.adaptation_rate == 1.0);
}

TEST_CASE("parse errors name the offending key") {
  json j = minimal_json();
  j.erase("law");
  REQUIRE_THROWS_AS(parse_scenario(j), ParseError);

  j = minimal_json();
  j["law"] = "fancy";
  REQUIRE_THROWS_AS(parse_scenario(j), ParseError);

  j = minimal_json();
  j["integration"].erase("t_end");
  REQUIRE_THROWS_AS(parse_scenario(j), ParseError);

  j = minimal_json();
  j["plant"]["subsystems"][0]["A"] = "not a matrix";
  REQUIRE_THROWS_AS(parse_scenario(j), ParseError);

  j = minimal_json();
  j["adaptation_rate"] = 0.0;
  REQUIRE_THROWS_AS(parse_scenario(j), ParseError);
}

TEST_CASE("law and disturbance names round-trip") {
  for (auto law : {AdaptationLaw::nominal, AdaptationLaw::common_p, AdaptationLaw::robust})
    REQUIRE(law_from_string(to_string(law)) == law);
  for (auto kind :
       {DisturbanceKind::none, DisturbanceKind::sinusoidal, DisturbanceKind::bounded_random})
    REQUIRE(disturbance_kind_from_string(to_string(kind)) == kind);
  REQUIRE_THROWS_AS(disturbance_kind_from_string("gusty"), ParseError);
}

TEST_CASE("demo scenarios survive a serialization round trip") {
  for (const Scenario& sc : {mass_spring_scenario(), disturbed_demo_scenario()}) {
    const json once = scenario_to_json(sc);
    const Scenario back = parse_scenario(once);
    const json twice = scenario_to_json(back);
    REQUIRE(once == twice);
  }
}

TEST_CASE("scenarios save to and load from disk") {
  const Scenario sc = disturbed_demo_scenario();
  const auto path =
      (std::filesystem::temp_directory_path() / "pwamrac_scenario_roundtrip.json").string();
  save_scenario(sc, path);
  const Scenario back = load_scenario(path);
  REQUIRE(scenario_to_json(back) == scenario_to_json(sc));
  std::filesystem::remove(path);
  REQUIRE_THROWS_AS(load_scenario(path), ParseError);
}

TEST_CASE("setup assembly wires the certified quantities") {
  const Scenario sc = mass_spring_scenario();
  const CertifyOutcome out = certify_scenario(sc);
  const SimSetup setup = make_setup(sc, out);

  REQUIRE(setup.P.size() == 3);
  REQUIRE(setup.sqrt_mu == Catch::Approx(out.cert->sqrt_mu));
  REQUIRE(setup.tau_d == Catch::Approx(out.cert->tau_d));
  REQUIRE(setup.eps0 == Catch::Approx(9.0));
  REQUIRE_FALSE(setup.disturbance.active());
  REQUIRE(setup.nominal.has_value());

  // gain_scale = 0.5 scales every nominal gain block.
  for (std::size_t i = 0; i < out.nominal.Kx.size(); ++i) {
    REQUIRE((setup.initial_gains.Kx[i] - 0.5 * out.nominal.Kx[i]).cwiseAbs().maxCoeff() == 0.0);
    REQUIRE((setup.initial_gains.Kr[i] - 0.5 * out.nominal.Kr[i]).cwiseAbs().maxCoeff() == 0.0);
    REQUIRE((setup.initial_gains.Kf[i] - 0.5 * out.nominal.Kf[i]).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("overlapping regions fail certification") {
  Scenario sc = parse_scenario(minimal_json());
  sc.plant_subsystems.push_back(sc.plant_subsystems[0]);
  sc.reference_subsystems.push_back(sc.reference_subsystems[0]);
  sc.Q.push_back(sc.Q[0]);
  sc.regions.push_back(sc.regions[0]);  // duplicate slab: overlap everywhere
  SamplingBox box;
  box.lo = (Vec(3) << -2.0, -2.0, -10.0).finished();
  box.hi = (Vec(3) << 2.0, 2.0, 10.0).finished();
  box.samples = 500;
  sc.sampling_box = box;
  REQUIRE_THROWS_AS(certify_scenario(sc), ValidationError);
}

TEST_CASE("auxiliary start values outside the admissible range are rejected") {
  Scenario sc = parse_scenario(minimal_json());

  sc.eps0 = 0.01;  // at or below g/h = 0.05
  REQUIRE_THROWS_AS(certify_scenario(sc), ValidationError);

  sc.eps0 = 5.0;  // not strictly below rho0
  REQUIRE_THROWS_AS(certify_scenario(sc), ValidationError);

  // Too small to cover the initial error: ||e0||_P = sqrt(4 * 1.125) > 1.
  sc.eps0 = 1.0;
  sc.x0 = (Vec(2) << 2.0, 0.0).finished();
  REQUIRE_THROWS_AS(certify_scenario(sc), ValidationError);

  // Unset eps0 resolves to the midpoint of the admissible interval.
  sc.eps0.reset();
  const CertifyOutcome out = certify_scenario(sc);
  const double e_worst = std::sqrt(4.0 * 1.125);
  REQUIRE(out.eps0 == Catch::Approx(0.5 * (e_worst + 5.0)).epsilon(1e-9));
}

TEST_CASE("pulse windows are open intervals repeating with the period") {
  const Scenario sc = mass_spring_scenario();
  const auto& ch = sc.input.channels[1];
  REQUIRE(ch.eval(25.0) == 0.0);   // boundary excluded
  REQUIRE(ch.eval(30.0) == 2.0);
  REQUIRE(ch.eval(50.0) == 0.0);
  REQUIRE(ch.eval(80.0) == -2.0);
  REQUIRE(ch.eval(75.0) == 0.0);
  REQUIRE(ch.eval(130.0) == 2.0);  // next period
  REQUIRE(ch.eval(60.0) == 0.0);

  PulseSchedule bad;
  bad.period = 10.0;
  bad.windows.push_back({1.0, 5.0, 15.0});  // end past the period
  REQUIRE_THROWS_AS(bad.validate("x"), ValidationError);
}

TEST_CASE("disturbances respect the norm bound") {
  DisturbanceSpec spec;
  spec.kind = DisturbanceKind::bounded_random;
  spec.d_bar = 0.045;
  spec.tones = 6;
  const Disturbance d = Disturbance::make(spec, 2, 0);
  const Vec x = Vec::Zero(2), u = Vec::Zero(1);
  double max_norm = 0.0;
  for (double t = 0.0; t < 50.0; t += 0.01) {
    const double norm = d.eval(x, u, t).norm();
    REQUIRE(norm <= spec.d_bar * (1.0 + 1e-12));
    max_norm = std::max(max_norm, norm);
  }
  REQUIRE(max_norm > 0.9 * spec.d_bar);  // the generator is meant to saturate the bound
  REQUIRE(d.active());

  // Same seed, same signal; different seed, different signal.
  const Disturbance d2 = Disturbance::make(spec, 2, 0);
  const Disturbance d3 = Disturbance::make(spec, 2, 1);
  REQUIRE(d.eval(x, u, 1.25) == d2.eval(x, u, 1.25));
  REQUIRE(d.eval(x, u, 1.25) != d3.eval(x, u, 1.25));
}

TEST_CASE("sinusoidal disturbances follow their components until clipped") {
  DisturbanceSpec spec;
  spec.kind = DisturbanceKind::sinusoidal;
  spec.d_bar = 10.0;  // large enough that no clipping happens below
  spec.components = {{0.3, 2.0, 0.0}, {0.1, 1.0, 0.5}};
  const Disturbance d = Disturbance::make(spec, 2, 0);
  const double t = 0.7;
  const Vec v = d.eval(Vec::Zero(2), Vec::Zero(1), t);
  REQUIRE(v[0] == Catch::Approx(0.3 * std::sin(2.0 * t)));
  REQUIRE(v[1] == Catch::Approx(0.1 * std::sin(t + 0.5)));

  spec.components.pop_back();
  REQUIRE_THROWS_AS(Disturbance::make(spec, 2, 0), ValidationError);

  const Disturbance none = Disturbance::none(3);
  REQUIRE(none.eval(Vec::Zero(3), Vec::Zero(1), 1.0).norm() == 0.0);
  REQUIRE_FALSE(none.active());

  const Disturbance uninitialized;
  REQUIRE_THROWS_AS(uninitialized.eval(Vec::Zero(1), Vec::Zero(1), 0.0), ValidationError);
}
