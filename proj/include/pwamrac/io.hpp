#pragma once

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <nlohmann/json.hpp>
#include <string>

#include "pwamrac/scenario.hpp"
#include "pwamrac/sim.hpp"
#include "pwamrac/types.hpp"

namespace pwamrac {

namespace detail {

// Locale-independent formatting at 12 significant digits, the CSV contract.
inline std::string fmt12(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline void append_mat_cols(std::string& header, const std::string& stem, Eigen::Index rows,
                            Eigen::Index cols) {
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c)
      header += "," + stem + std::to_string(r) + std::to_string(c);
}

inline void append_mat_vals(std::string& line, const Mat& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) line += "," + fmt12(m(r, c));
}

}  // namespace detail

// Rounds every float in a document to 12 significant digits, in place.
inline void round_to_12_digits(nlohmann::json& j) {
  if (j.is_number_float()) {
    j = std::strtod(detail::fmt12(j.get<double>()).c_str(), nullptr);
  } else if (j.is_array() || j.is_object()) {
    for (auto& el : j) round_to_12_digits(el);
  }
}

// Trajectory table, one row per output sample. Modes are reported 1-based.
// Column order: t, x, xm, e_normP, eps, rho, phi, mode, u, then V/V_theta when
// the oracle ran, then the wide per-mode gain columns when they were logged.
inline void write_trajectory_csv(const TrajectoryLog& log, Eigen::Index n, Eigen::Index p,
                                 const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  const bool with_v = !log.samples.empty() && !std::isnan(log.samples.front().V);
  const bool with_gains = !log.samples.empty() && log.samples.front().gains.has_value();

  std::string header = "t";
  for (Eigen::Index k = 0; k < n; ++k) header += ",x" + std::to_string(k);
  for (Eigen::Index k = 0; k < n; ++k) header += ",xm" + std::to_string(k);
  header += ",e_normP,eps,rho,phi,mode";
  for (Eigen::Index k = 0; k < p; ++k) header += ",u" + std::to_string(k);
  if (with_v) header += ",V,V_theta";
  if (with_gains) {
    const auto& g = *log.samples.front().gains;
    for (std::size_t i = 0; i < g.Kx.size(); ++i) {
      const std::string m = std::to_string(i + 1);
      detail::append_mat_cols(header, "kx" + m + "_", g.Kx[i].rows(), g.Kx[i].cols());
      detail::append_mat_cols(header, "kr" + m + "_", g.Kr[i].rows(), g.Kr[i].cols());
      for (Eigen::Index r = 0; r < g.Kf[i].size(); ++r)
        header += ",kf" + m + "_" + std::to_string(r);
    }
  }
  out << header << "\n";

  for (const auto& s : log.samples) {
    std::string line = detail::fmt12(s.t);
    for (Eigen::Index k = 0; k < n; ++k) line += "," + detail::fmt12(s.x[k]);
    for (Eigen::Index k = 0; k < n; ++k) line += "," + detail::fmt12(s.xm[k]);
    line += "," + detail::fmt12(s.e_norm_p);
    line += "," + detail::fmt12(s.eps);
    line += "," + detail::fmt12(s.rho_t);
    line += "," + detail::fmt12(s.phi);
    line += "," + std::to_string(s.mode + 1);
    for (Eigen::Index k = 0; k < p; ++k) line += "," + detail::fmt12(s.u[k]);
    if (with_v) {
      line += "," + detail::fmt12(s.V);
      line += "," + detail::fmt12(s.V_theta);
    }
    if (with_gains) {
      const auto& g = *s.gains;
      for (std::size_t i = 0; i < g.Kx.size(); ++i) {
        detail::append_mat_vals(line, g.Kx[i]);
        detail::append_mat_vals(line, g.Kr[i]);
        for (Eigen::Index r = 0; r < g.Kf[i].size(); ++r)
          line += "," + detail::fmt12(g.Kf[i][r]);
      }
    }
    out << line << "\n";
  }
}

inline nlohmann::json events_json(const std::vector<SwitchEvent>& events) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& e : events)
    j.push_back({{"time", e.t},
                 {"from", e.from + 1},
                 {"to", e.to + 1},
                 {"dwell", e.dwell},
                 {"boundary_residual", e.boundary_residual}});
  return j;
}

// Non-finite doubles serialize as JSON null (nlohmann's behavior), which is
// what consumers should see for "no switches" or "oracle off".
inline nlohmann::json summary_json(const RunSummary& s) {
  return {{"max_e_over_bound", s.max_e_over_bound},
          {"min_rho_margin", s.min_rho_margin},
          {"min_floor_margin", s.min_floor_margin},
          {"max_phi", s.max_phi},
          {"switch_count", s.switch_count},
          {"min_dwell", s.min_dwell},
          {"dwell_violations", s.dwell_violations},
          {"v_max_increase", s.v_max_increase},
          {"v_max_residual", s.v_max_residual},
          {"v_violations", s.v_violations},
          {"mode_mismatches", s.mode_mismatches},
          {"reset_anomalies", s.reset_anomalies},
          {"envelope_violations", s.envelope_violations},
          {"max_bound_excursion", s.max_bound_excursion},
          {"monitors_pass", s.monitors_pass},
          {"wall_seconds", s.wall_seconds},
          {"samples", s.samples}};
}

inline nlohmann::json gains_json(const GainState& g) {
  nlohmann::json j = nlohmann::json::array();
  for (std::size_t i = 0; i < g.Kx.size(); ++i)
    j.push_back({{"Kx", detail::mat_json(g.Kx[i])},
                 {"Kr", detail::mat_json(g.Kr[i])},
                 {"Kf", detail::vec_json(g.Kf[i])}});
  return j;
}

inline nlohmann::json verdict_json(const Verdict& v) {
  nlohmann::json cs = nlohmann::json::array();
  for (const auto& c : v.conditions)
    cs.push_back({{"name", c.name}, {"pass", c.pass}, {"margin", c.margin}});
  nlohmann::json j = {{"pass", v.pass}, {"conditions", std::move(cs)}, {"tau_d", v.tau_d}};
  if (!std::isnan(v.c)) {
    j["c"] = v.c;
    j["disturbance_threshold"] = v.disturbance_threshold;
    j["c_floor_margin"] = v.c_floor_margin;
  }
  return j;
}

// Full certification record for a scenario: verdict, law-specific data, the
// matching gains, and the partition probe when one ran.
inline nlohmann::json certificate_json(const CertifyOutcome& out) {
  nlohmann::json j;
  j["law"] = to_string(out.law);
  j["verdict"] = verdict_json(out.verdict);
  if (out.cert) {
    const auto& c = *out.cert;
    nlohmann::json ps = nlohmann::json::array();
    nlohmann::json qs = nlohmann::json::array();
    for (const auto& p : c.P) ps.push_back(detail::mat_json(p));
    for (const auto& q : c.Q) qs.push_back(detail::mat_json(q));
    j["certificate"] = {{"P", std::move(ps)},
                        {"Q", std::move(qs)},
                        {"lambda_min_P", c.lambda_min_P},
                        {"lambda_max_P", c.lambda_max_P},
                        {"lambda_min_Q", c.lambda_min_Q},
                        {"lambda_max_Q", c.lambda_max_Q},
                        {"mu", c.mu},
                        {"sqrt_mu", c.sqrt_mu},
                        {"alpha_m", c.alpha_m},
                        {"h_max", c.h_max},
                        {"kappa", c.kappa},
                        {"tau_d", c.tau_d},
                        {"strict", c.robust},
                        {"h", c.h},
                        {"l", c.l},
                        {"g", c.g},
                        {"rho0", c.rho0},
                        {"rho_inf", c.rho_inf},
                        {"d_bar", c.d_bar}};
    j["eps0"] = out.eps0;
  }
  if (out.common) {
    j["common_p"] = {{"found", out.common->found},
                     {"l_max", out.common->l_max},
                     {"iterations", out.common->iterations}};
    if (out.common->found) j["common_p"]["P"] = detail::mat_json(out.common->P);
  }
  nlohmann::json gains = nlohmann::json::array();
  for (std::size_t i = 0; i < out.nominal.Kx.size(); ++i)
    gains.push_back({{"Kx", detail::mat_json(out.nominal.Kx[i])},
                     {"Kr", detail::mat_json(out.nominal.Kr[i])},
                     {"Kf", detail::vec_json(out.nominal.Kf[i])},
                     {"residual", out.nominal.residuals[i]}});
  j["nominal_gains"] = std::move(gains);
  if (out.partition)
    j["partition"] = {{"samples", out.partition->samples},
                      {"overlaps", out.partition->overlaps},
                      {"uncovered", out.partition->uncovered}};
  if (!out.warnings.empty()) j["warnings"] = out.warnings;
  round_to_12_digits(j);
  return j;
}

inline void write_json(const nlohmann::json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << j.dump(2) << "\n";
}

}  // namespace pwamrac
