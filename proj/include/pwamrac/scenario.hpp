#pragma once

#include <cmath>
#include <fstream>
#include <limits>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "pwamrac/adapt.hpp"
#include "pwamrac/certify.hpp"
#include "pwamrac/disturbance.hpp"
#include "pwamrac/pwa.hpp"
#include "pwamrac/signal.hpp"
#include "pwamrac/sim.hpp"
#include "pwamrac/types.hpp"

namespace pwamrac {

inline std::string to_string(AdaptationLaw law) {
  switch (law) {
    case AdaptationLaw::nominal: return "nominal";
    case AdaptationLaw::common_p: return "common_p";
    case AdaptationLaw::robust: return "robust";
  }
  return "nominal";
}

inline AdaptationLaw law_from_string(const std::string& s) {
  if (s == "nominal") return AdaptationLaw::nominal;
  if (s == "common_p") return AdaptationLaw::common_p;
  if (s == "robust") return AdaptationLaw::robust;
  throw ParseError("unknown adaptation law '" + s + "' (nominal | common_p | robust)");
}

inline std::string to_string(DisturbanceKind kind) {
  switch (kind) {
    case DisturbanceKind::none: return "none";
    case DisturbanceKind::sinusoidal: return "sinusoidal";
    case DisturbanceKind::bounded_random: return "bounded_random";
  }
  return "none";
}

inline DisturbanceKind disturbance_kind_from_string(const std::string& s) {
  if (s == "none") return DisturbanceKind::none;
  if (s == "sinusoidal") return DisturbanceKind::sinusoidal;
  if (s == "bounded_random") return DisturbanceKind::bounded_random;
  throw ParseError("unknown disturbance kind '" + s +
                   "' (none | sinusoidal | bounded_random)");
}

namespace detail {

inline const nlohmann::json& need(const nlohmann::json& j, const char* key,
                                  const std::string& where) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null())
    throw ParseError(where + ": missing key '" + key + "'");
  return *it;
}

inline Vec as_vec(const nlohmann::json& j, const std::string& where) {
  if (!j.is_array()) throw ParseError(where + ": expected an array of numbers");
  Vec v(j.size());
  for (std::size_t k = 0; k < j.size(); ++k) {
    if (!j[k].is_number()) throw ParseError(where + "[" + std::to_string(k) + "]: not a number");
    v[static_cast<Eigen::Index>(k)] = j[k].get<double>();
  }
  return v;
}

inline Mat as_mat(const nlohmann::json& j, const std::string& where) {
  if (!j.is_array() || j.empty() || !j[0].is_array())
    throw ParseError(where + ": expected an array of rows");
  const std::size_t rows = j.size();
  const std::size_t cols = j[0].size();
  Mat m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols)
      throw ParseError(where + ": row " + std::to_string(r) + " has " +
                       std::to_string(j[r].size()) + " entries, expected " +
                       std::to_string(cols));
    for (std::size_t c = 0; c < cols; ++c) {
      if (!j[r][c].is_number())
        throw ParseError(where + "[" + std::to_string(r) + "][" + std::to_string(c) +
                         "]: not a number");
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = j[r][c].get<double>();
    }
  }
  return m;
}

inline nlohmann::json vec_json(const Vec& v) {
  nlohmann::json j = nlohmann::json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) j.push_back(v[k]);
  return j;
}

inline nlohmann::json mat_json(const Mat& m) {
  nlohmann::json j = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    j.push_back(row);
  }
  return j;
}

inline PwaSubsystem as_subsystem(const nlohmann::json& j, const std::string& where) {
  PwaSubsystem s;
  s.A = as_mat(need(j, "A", where), where + ".A");
  s.B = as_mat(need(j, "B", where), where + ".B");
  s.f = as_vec(need(j, "f", where), where + ".f");
  return s;
}

inline nlohmann::json subsystem_json(const PwaSubsystem& s) {
  return {{"A", mat_json(s.A)}, {"B", mat_json(s.B)}, {"f", vec_json(s.f)}};
}

}  // namespace detail

struct SamplingBox {
  Vec lo, hi;
  int samples = 10000;
};

struct InitialGainsSpec {
  std::optional<double> scale_of_nominal;  // initial gains = scale * ideal gains
  std::optional<GainState> explicit_gains;
};

// Declarative description of one experiment: plant, reference, weights,
// envelope, controller variant, excitation, and integration settings. The
// JSON form round-trips through parse_scenario / scenario_to_json.
struct Scenario {
  std::string name;
  AdaptationLaw law = AdaptationLaw::nominal;

  std::vector<PwaSubsystem> plant_subsystems;
  std::vector<Region> regions;
  std::optional<SamplingBox> sampling_box;
  std::vector<PwaSubsystem> reference_subsystems;
  std::vector<Mat> Q;

  PerformanceSpec perf;
  double h = 0.0;
  double g = 0.0;
  std::optional<double> eps0;  // defaulted from the envelope when unset

  std::optional<GainBounds> bounds;  // robust law
  DisturbanceSpec disturbance;
  InputSignal input;

  Vec x0, xm0;
  InitialGainsSpec initial_gains;
  double adaptation_rate = 1.0;  // scales S (and 1/M) in the update laws

  double dt = 1e-3;
  double dt_out = 5e-2;
  double t_end = 0.0;

  std::uint64_t seed = 0;
  double matching_tol = 1e-6;

  PwaPlant make_plant() const { return PwaPlant(plant_subsystems, regions); }
  ReferenceModel make_reference() const { return ReferenceModel(reference_subsystems); }
};

inline Scenario parse_scenario(const nlohmann::json& j) {
  using detail::as_mat;
  using detail::as_vec;
  using detail::need;
  try {
    Scenario sc;
    sc.name = j.value("name", std::string("scenario"));
    sc.law = law_from_string(need(j, "law", "scenario").get<std::string>());
    sc.seed = j.value("seed", std::uint64_t{0});
    sc.matching_tol = j.value("matching_tol", 1e-6);
    sc.adaptation_rate = j.value("adaptation_rate", 1.0);
    if (!(sc.adaptation_rate > 0.0))
      throw ParseError("adaptation_rate must be positive");

    const auto& plant = need(j, "plant", "scenario");
    for (const auto& s : need(plant, "subsystems", "plant"))
      sc.plant_subsystems.push_back(detail::as_subsystem(s, "plant.subsystems"));
    for (const auto& rj : need(plant, "regions", "plant")) {
      Region reg;
      for (const auto& hj : need(rj, "halfspaces", "plant.regions")) {
        Halfspace hs;
        hs.normal = as_vec(need(hj, "normal", "halfspace"), "halfspace.normal");
        hs.offset = need(hj, "offset", "halfspace").get<double>();
        hs.closed = hj.value("closed", true);
        reg.halfspaces.push_back(std::move(hs));
      }
      sc.regions.push_back(std::move(reg));
    }
    if (plant.contains("sampling_box") && !plant["sampling_box"].is_null()) {
      SamplingBox box;
      box.lo = as_vec(need(plant["sampling_box"], "lo", "sampling_box"), "sampling_box.lo");
      box.hi = as_vec(need(plant["sampling_box"], "hi", "sampling_box"), "sampling_box.hi");
      box.samples = plant["sampling_box"].value("samples", 10000);
      sc.sampling_box = std::move(box);
    }

    for (const auto& s : need(need(j, "reference", "scenario"), "subsystems", "reference"))
      sc.reference_subsystems.push_back(detail::as_subsystem(s, "reference.subsystems"));

    for (const auto& qj : need(j, "q", "scenario"))
      sc.Q.push_back(as_mat(qj, "q"));

    const auto& perf = need(j, "performance", "scenario");
    sc.perf.rho0 = need(perf, "rho0", "performance").get<double>();
    sc.perf.rho_inf = need(perf, "rho_inf", "performance").get<double>();
    sc.perf.l = need(perf, "l", "performance").get<double>();
    sc.perf.t0 = perf.value("t0", 0.0);

    if (j.contains("envelope") && !j["envelope"].is_null()) {
      const auto& env = j["envelope"];
      sc.h = need(env, "h", "envelope").get<double>();
      sc.g = need(env, "g", "envelope").get<double>();
      if (env.contains("eps0") && !env["eps0"].is_null()) sc.eps0 = env["eps0"].get<double>();
    }

    if (j.contains("bounds") && !j["bounds"].is_null()) {
      GainBounds gb;
      for (const auto& bj : j["bounds"]) {
        ModeGainBounds mb;
        mb.kx_lo = as_mat(need(bj, "kx_lo", "bounds"), "bounds.kx_lo");
        mb.kx_hi = as_mat(need(bj, "kx_hi", "bounds"), "bounds.kx_hi");
        mb.kr_lo = as_mat(need(bj, "kr_lo", "bounds"), "bounds.kr_lo");
        mb.kr_hi = as_mat(need(bj, "kr_hi", "bounds"), "bounds.kr_hi");
        mb.kf_lo = as_vec(need(bj, "kf_lo", "bounds"), "bounds.kf_lo");
        mb.kf_hi = as_vec(need(bj, "kf_hi", "bounds"), "bounds.kf_hi");
        gb.modes.push_back(std::move(mb));
      }
      sc.bounds = std::move(gb);
    }

    if (j.contains("disturbance") && !j["disturbance"].is_null()) {
      const auto& dj = j["disturbance"];
      sc.disturbance.kind =
          disturbance_kind_from_string(need(dj, "kind", "disturbance").get<std::string>());
      sc.disturbance.d_bar = dj.value("d_bar", 0.0);
      sc.disturbance.tones = dj.value("tones", 6);
      if (dj.contains("components")) {
        for (const auto& cj : dj["components"]) {
          Sinusoid s;
          s.amplitude = need(cj, "amplitude", "disturbance.components").get<double>();
          s.omega = need(cj, "omega", "disturbance.components").get<double>();
          s.phase = cj.value("phase", 0.0);
          sc.disturbance.components.push_back(s);
        }
      }
    }

    for (const auto& cj : need(need(j, "input", "scenario"), "channels", "input")) {
      SignalChannel ch;
      if (cj.contains("sinusoids")) {
        for (const auto& sj : cj["sinusoids"]) {
          Sinusoid s;
          s.amplitude = need(sj, "amplitude", "input.sinusoids").get<double>();
          s.omega = need(sj, "omega", "input.sinusoids").get<double>();
          s.phase = sj.value("phase", 0.0);
          ch.sinusoids.push_back(s);
        }
      }
      if (cj.contains("pulses") && !cj["pulses"].is_null()) {
        const auto& pj = cj["pulses"];
        ch.schedule.period = need(pj, "period", "input.pulses").get<double>();
        for (const auto& wj : need(pj, "windows", "input.pulses")) {
          PulseWindow w;
          w.value = need(wj, "value", "pulse window").get<double>();
          w.start = need(wj, "start", "pulse window").get<double>();
          w.end = need(wj, "end", "pulse window").get<double>();
          ch.schedule.windows.push_back(w);
        }
      }
      sc.input.channels.push_back(std::move(ch));
    }

    const auto& init = need(j, "initial", "scenario");
    sc.x0 = as_vec(need(init, "x", "initial"), "initial.x");
    sc.xm0 = as_vec(need(init, "x_m", "initial"), "initial.x_m");
    if (init.contains("gain_scale") && !init["gain_scale"].is_null()) {
      sc.initial_gains.scale_of_nominal = init["gain_scale"].get<double>();
    } else if (init.contains("gains") && !init["gains"].is_null()) {
      GainState gs;
      for (const auto& gj : init["gains"]) {
        gs.Kx.push_back(as_mat(need(gj, "Kx", "initial.gains"), "initial.gains.Kx"));
        gs.Kr.push_back(as_mat(need(gj, "Kr", "initial.gains"), "initial.gains.Kr"));
        gs.Kf.push_back(as_vec(need(gj, "Kf", "initial.gains"), "initial.gains.Kf"));
      }
      sc.initial_gains.explicit_gains = std::move(gs);
    }

    const auto& integ = need(j, "integration", "scenario");
    sc.dt = integ.value("dt", 1e-3);
    sc.dt_out = integ.value("dt_out", 5e-2);
    sc.t_end = need(integ, "t_end", "integration").get<double>();
    return sc;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("scenario: ") + e.what());
  }
}

inline nlohmann::json scenario_to_json(const Scenario& sc) {
  using detail::mat_json;
  using detail::subsystem_json;
  using detail::vec_json;
  nlohmann::json j;
  j["name"] = sc.name;
  j["law"] = to_string(sc.law);
  j["seed"] = sc.seed;
  j["matching_tol"] = sc.matching_tol;
  j["adaptation_rate"] = sc.adaptation_rate;

  nlohmann::json subs = nlohmann::json::array();
  for (const auto& s : sc.plant_subsystems) subs.push_back(subsystem_json(s));
  nlohmann::json regs = nlohmann::json::array();
  for (const auto& r : sc.regions) {
    nlohmann::json hs = nlohmann::json::array();
    for (const auto& h : r.halfspaces)
      hs.push_back({{"normal", vec_json(h.normal)}, {"offset", h.offset}, {"closed", h.closed}});
    regs.push_back({{"halfspaces", std::move(hs)}});
  }
  j["plant"] = {{"subsystems", std::move(subs)}, {"regions", std::move(regs)}};
  if (sc.sampling_box) {
    j["plant"]["sampling_box"] = {{"lo", vec_json(sc.sampling_box->lo)},
                                  {"hi", vec_json(sc.sampling_box->hi)},
                                  {"samples", sc.sampling_box->samples}};
  }

  nlohmann::json rsubs = nlohmann::json::array();
  for (const auto& s : sc.reference_subsystems) rsubs.push_back(subsystem_json(s));
  j["reference"] = {{"subsystems", std::move(rsubs)}};

  nlohmann::json qs = nlohmann::json::array();
  for (const auto& q : sc.Q) qs.push_back(mat_json(q));
  j["q"] = std::move(qs);

  j["performance"] = {{"rho0", sc.perf.rho0},
                      {"rho_inf", sc.perf.rho_inf},
                      {"l", sc.perf.l},
                      {"t0", sc.perf.t0}};

  if (sc.h != 0.0 || sc.g != 0.0 || sc.eps0) {
    j["envelope"] = {{"h", sc.h}, {"g", sc.g}};
    if (sc.eps0) j["envelope"]["eps0"] = *sc.eps0;
  }

  if (sc.bounds) {
    nlohmann::json bs = nlohmann::json::array();
    for (const auto& b : sc.bounds->modes)
      bs.push_back({{"kx_lo", mat_json(b.kx_lo)},
                    {"kx_hi", mat_json(b.kx_hi)},
                    {"kr_lo", mat_json(b.kr_lo)},
                    {"kr_hi", mat_json(b.kr_hi)},
                    {"kf_lo", vec_json(b.kf_lo)},
                    {"kf_hi", vec_json(b.kf_hi)}});
    j["bounds"] = std::move(bs);
  }

  if (sc.disturbance.kind != DisturbanceKind::none) {
    j["disturbance"] = {{"kind", to_string(sc.disturbance.kind)},
                        {"d_bar", sc.disturbance.d_bar},
                        {"tones", sc.disturbance.tones}};
    if (!sc.disturbance.components.empty()) {
      nlohmann::json cs = nlohmann::json::array();
      for (const auto& c : sc.disturbance.components)
        cs.push_back({{"amplitude", c.amplitude}, {"omega", c.omega}, {"phase", c.phase}});
      j["disturbance"]["components"] = std::move(cs);
    }
  }

  nlohmann::json chans = nlohmann::json::array();
  for (const auto& ch : sc.input.channels) {
    nlohmann::json cj;
    nlohmann::json sins = nlohmann::json::array();
    for (const auto& s : ch.sinusoids)
      sins.push_back({{"amplitude", s.amplitude}, {"omega", s.omega}, {"phase", s.phase}});
    cj["sinusoids"] = std::move(sins);
    if (ch.schedule.period > 0.0) {
      nlohmann::json ws = nlohmann::json::array();
      for (const auto& w : ch.schedule.windows)
        ws.push_back({{"value", w.value}, {"start", w.start}, {"end", w.end}});
      cj["pulses"] = {{"period", ch.schedule.period}, {"windows", std::move(ws)}};
    }
    chans.push_back(std::move(cj));
  }
  j["input"] = {{"channels", std::move(chans)}};

  j["initial"] = {{"x", vec_json(sc.x0)}, {"x_m", vec_json(sc.xm0)}};
  if (sc.initial_gains.scale_of_nominal) {
    j["initial"]["gain_scale"] = *sc.initial_gains.scale_of_nominal;
  } else if (sc.initial_gains.explicit_gains) {
    const auto& gs = *sc.initial_gains.explicit_gains;
    nlohmann::json gj = nlohmann::json::array();
    for (std::size_t i = 0; i < gs.Kx.size(); ++i)
      gj.push_back({{"Kx", mat_json(gs.Kx[i])},
                    {"Kr", mat_json(gs.Kr[i])},
                    {"Kf", vec_json(gs.Kf[i])}});
    j["initial"]["gains"] = std::move(gj);
  }

  j["integration"] = {{"dt", sc.dt}, {"dt_out", sc.dt_out}, {"t_end", sc.t_end}};
  return j;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open scenario file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  return parse_scenario(j);
}

inline void save_scenario(const Scenario& sc, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open '" + path + "' for writing");
  out << scenario_to_json(sc).dump(2) << "\n";
}

// Result of running the certification pipeline over a scenario: the matching
// gains, the law-specific certificate, the combined verdict, and the resolved
// auxiliary start value.
struct CertifyOutcome {
  AdaptationLaw law = AdaptationLaw::nominal;
  NominalGains nominal;
  std::optional<Certificate> cert;        // nominal / robust laws
  std::optional<CommonPResult> common;    // common_p law
  Verdict verdict;
  std::optional<PartitionReport> partition;
  double eps0 = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::string> warnings;
};

inline CertifyOutcome certify_scenario(const Scenario& sc) {
  CertifyOutcome out;
  out.law = sc.law;
  const PwaPlant plant = sc.make_plant();
  const ReferenceModel ref = sc.make_reference();
  out.nominal = matching_gains(plant, ref, sc.matching_tol);

  if (sc.sampling_box) {
    out.partition = check_partition(plant, sc.sampling_box->lo, sc.sampling_box->hi,
                                    sc.sampling_box->samples, sc.seed);
    if (out.partition->overlaps > 0)
      throw ValidationError("regions overlap on " + std::to_string(out.partition->overlaps) +
                            " of " + std::to_string(out.partition->samples) +
                            " sampled points; first-match order would decide the mode");
    if (out.partition->uncovered > 0)
      out.warnings.push_back(std::to_string(out.partition->uncovered) + " of " +
                             std::to_string(out.partition->samples) +
                             " sampled points lie outside every region");
  }

  if (sc.x0.size() != plant.n() || sc.xm0.size() != plant.n())
    throw ValidationError("initial states must have length " + std::to_string(plant.n()));

  if (sc.law == AdaptationLaw::common_p) {
    out.common = check_corollary_common_P(ref, sc.Q, sc.perf.l);
    out.verdict.conditions.push_back(
        {"common_P_found", out.common->found, out.common->found ? 1.0 : -1.0});
    out.verdict.conditions.push_back({"l_below_l_max", out.common->l_condition,
                                      out.common->l_max - sc.perf.l});
    out.verdict.finalize();
    return out;
  }

  if (!(sc.h > 0.0) || !(sc.g > 0.0))
    throw ValidationError("the switched laws need an envelope block with h > 0 and g > 0");
  const bool robust = sc.law == AdaptationLaw::robust;
  out.cert = build_certificate(ref, sc.Q, sc.perf, sc.h, sc.perf.l, sc.g, robust,
                               sc.disturbance.d_bar);
  out.verdict = robust ? check_theorem2(*out.cert) : check_theorem1(*out.cert);

  // Resolve the auxiliary start value: strictly inside (g/h, rho0) and above
  // the initial weighted error in every mode metric.
  const double floor = sc.g / sc.h;
  double e_worst = 0.0;
  const Vec e0 = sc.x0 - sc.xm0;
  for (const auto& p : out.cert->P)
    e_worst = std::max(e_worst, std::sqrt(std::max(0.0, e0.dot(p * e0))));
  if (sc.eps0) {
    out.eps0 = *sc.eps0;
    if (!(out.eps0 > floor) || !(out.eps0 < sc.perf.rho0))
      throw ValidationError("eps0 = " + std::to_string(out.eps0) +
                            " must lie strictly between g/h = " + std::to_string(floor) +
                            " and rho0 = " + std::to_string(sc.perf.rho0));
    if (out.eps0 <= e_worst)
      throw ValidationError("eps0 = " + std::to_string(out.eps0) +
                            " does not cover the initial error norm " +
                            std::to_string(e_worst));
  } else {
    const double lo = std::max(floor, e_worst);
    if (!(lo < sc.perf.rho0))
      throw ValidationError("initial error norm " + std::to_string(e_worst) +
                            " leaves no admissible auxiliary start below rho0");
    out.eps0 = 0.5 * (lo + sc.perf.rho0);
  }
  return out;
}

// Assembles the simulation inputs from a scenario and its certification
// outcome. CLI-style overrides (strict dwell, oracle, dt, horizon) belong to
// the returned options.
inline SimSetup make_setup(const Scenario& sc, const CertifyOutcome& outcome) {
  SimSetup s{.plant = sc.make_plant(),
             .ref = sc.make_reference(),
             .law = sc.law,
             .perf = sc.perf,
             .h = sc.h,
             .g = sc.g,
             .x0 = sc.x0,
             .xm0 = sc.xm0,
             .input = sc.input,
             .nominal = outcome.nominal};
  s.structure = default_structure(outcome.nominal, sc.law, sc.adaptation_rate);
  s.bounds = sc.bounds;

  if (sc.law == AdaptationLaw::common_p) {
    if (!outcome.common || !outcome.common->found)
      throw ValidationError("no common weighting matrix is available for this scenario");
    s.P_common = outcome.common->P;
  } else {
    if (!outcome.cert) throw ValidationError("certificate missing for a switched law");
    s.P = outcome.cert->P;
    s.sqrt_mu = outcome.cert->sqrt_mu;
    s.tau_d = outcome.cert->tau_d;
    s.eps0 = outcome.eps0;
  }

  if (sc.initial_gains.explicit_gains) {
    s.initial_gains = *sc.initial_gains.explicit_gains;
  } else if (sc.initial_gains.scale_of_nominal) {
    s.initial_gains = GainState::scaled_nominal(outcome.nominal,
                                                *sc.initial_gains.scale_of_nominal);
  } else {
    s.initial_gains = GainState::zero(s.plant.num_modes(), s.plant.n(), s.plant.p());
  }

  s.disturbance = Disturbance::make(sc.disturbance, s.plant.n(), sc.seed);
  s.options.dt = sc.dt;
  s.options.dt_out = sc.dt_out;
  s.options.t_end = sc.t_end;
  return s;
}

}  // namespace pwamrac
