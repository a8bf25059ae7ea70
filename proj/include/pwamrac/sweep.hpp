#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "pwamrac/io.hpp"
#include "pwamrac/scenario.hpp"
#include "pwamrac/sim.hpp"

namespace pwamrac {

// Cartesian grid over the scalar scenario fields that make sense to vary
// without touching the model itself.
struct SweepGrid {
  std::vector<std::string> names;
  std::vector<std::vector<double>> levels;

  std::size_t points() const {
    std::size_t n = 1;
    for (const auto& l : levels) n *= l.size();
    return n;
  }
};

// Grammar: "name=v1,v2,...;name=v1,..." with names from
// {h, g, l, eps0, d_bar}. Whitespace around tokens is ignored.
inline SweepGrid parse_grid(const std::string& spec) {
  auto trim = [](std::string s) {
    const auto a = s.find_first_not_of(" \t");
    const auto b = s.find_last_not_of(" \t");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
  };
  SweepGrid grid;
  std::stringstream groups(spec);
  std::string group;
  while (std::getline(groups, group, ';')) {
    group = trim(group);
    if (group.empty()) continue;
    const auto eq = group.find('=');
    if (eq == std::string::npos)
      throw ParseError("grid group '" + group + "' has no '='");
    const std::string name = trim(group.substr(0, eq));
    if (name != "h" && name != "g" && name != "l" && name != "eps0" && name != "d_bar")
      throw ParseError("grid parameter '" + name + "' is not sweepable (h, g, l, eps0, d_bar)");
    for (const auto& seen : grid.names)
      if (seen == name) throw ParseError("grid parameter '" + name + "' given twice");
    std::vector<double> vals;
    std::stringstream items(group.substr(eq + 1));
    std::string item;
    while (std::getline(items, item, ',')) {
      item = trim(item);
      if (item.empty()) continue;
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(item, &used);
      } catch (const std::exception&) {
        throw ParseError("grid value '" + item + "' is not a number");
      }
      if (used != item.size()) throw ParseError("grid value '" + item + "' is not a number");
      vals.push_back(v);
    }
    if (vals.empty()) throw ParseError("grid parameter '" + name + "' has no values");
    grid.names.push_back(name);
    grid.levels.push_back(std::move(vals));
  }
  if (grid.names.empty()) throw ParseError("empty grid spec");
  return grid;
}

inline void apply_grid_point(Scenario& sc, const std::vector<std::string>& names,
                             const std::vector<double>& values) {
  for (std::size_t k = 0; k < names.size(); ++k) {
    if (names[k] == "h") sc.h = values[k];
    else if (names[k] == "g") sc.g = values[k];
    else if (names[k] == "l") sc.perf.l = values[k];
    else if (names[k] == "eps0") sc.eps0 = values[k];
    else if (names[k] == "d_bar") sc.disturbance.d_bar = values[k];
  }
}

struct SweepRow {
  std::vector<double> values;  // one per grid parameter, in grid order
  bool certified = false;
  double tau_d = std::numeric_limits<double>::quiet_NaN();
  bool simulated = false;
  RunSummary summary;
  std::string error;  // certificate failure reason or runtime abort
};

inline int sweep_worker_count(std::size_t rows) {
  int workers = 0;
  if (const char* env = std::getenv("PWAMRAC_WORKERS")) {
    try {
      workers = std::stoi(env);
    } catch (const std::exception&) {
      workers = 0;
    }
  }
  if (workers <= 0) workers = static_cast<int>(std::thread::hardware_concurrency());
  if (workers <= 0) workers = 1;
  return static_cast<int>(std::min<std::size_t>(workers, std::max<std::size_t>(rows, 1)));
}

// Certify-then-simulate at every grid point. Points whose certificate fails
// are reported but never simulated; failures in one row do not stop the rest.
// Rows come back in grid enumeration order (last parameter fastest).
inline std::vector<SweepRow> run_sweep(const Scenario& base, const SweepGrid& grid,
                                       int workers = 0) {
  const std::size_t total = grid.points();
  std::vector<SweepRow> rows(total);
  if (workers <= 0) workers = sweep_worker_count(total);

  auto decode = [&](std::size_t flat) {
    std::vector<double> vals(grid.names.size());
    for (std::size_t k = grid.names.size(); k-- > 0;) {
      const auto& level = grid.levels[k];
      vals[k] = level[flat % level.size()];
      flat /= level.size();
    }
    return vals;
  };

  auto run_one = [&](std::size_t idx) {
    SweepRow& row = rows[idx];
    row.values = decode(idx);
    try {
      Scenario sc = base;
      apply_grid_point(sc, grid.names, row.values);
      const CertifyOutcome outcome = certify_scenario(sc);
      row.certified = outcome.verdict.pass;
      row.tau_d = outcome.verdict.tau_d;
      if (!row.certified) {
        for (const auto& c : outcome.verdict.conditions)
          if (!c.pass) row.error += (row.error.empty() ? "" : "; ") + c.name;
        return;
      }
      Simulator sim(make_setup(sc, outcome));
      row.summary = sim.run().summary;
      row.simulated = true;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
  };

  if (workers <= 1) {
    for (std::size_t i = 0; i < total; ++i) run_one(i);
    return rows;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < total; i = next.fetch_add(1)) run_one(i);
    });
  }
  for (auto& th : pool) th.join();
  return rows;
}

// Fixed-width text table, one row per grid point.
inline std::string sweep_table(const std::vector<SweepRow>& rows, const SweepGrid& grid) {
  std::ostringstream out;
  auto col = [&](const std::string& s, int w) {
    out << s;
    for (int k = static_cast<int>(s.size()); k < w; ++k) out << ' ';
  };
  for (const auto& name : grid.names) col(name, 12);
  col("certified", 11);
  col("tau_d", 12);
  col("simulated", 11);
  col("max_e/bound", 13);
  col("min_margin", 12);
  col("switches", 10);
  col("min_dwell", 12);
  col("monitors", 10);
  out << "error\n";
  for (const auto& r : rows) {
    for (double v : r.values) col(detail::fmt12(v), 12);
    col(r.certified ? "yes" : "NO", 11);
    col(std::isnan(r.tau_d) ? "-" : detail::fmt12(r.tau_d), 12);
    col(r.simulated ? "yes" : "-", 11);
    if (r.simulated) {
      col(detail::fmt12(r.summary.max_e_over_bound), 13);
      col(std::isfinite(r.summary.min_rho_margin) ? detail::fmt12(r.summary.min_rho_margin)
                                                  : "-", 12);
      col(std::to_string(r.summary.switch_count), 10);
      col(std::isfinite(r.summary.min_dwell) ? detail::fmt12(r.summary.min_dwell) : "-", 12);
      col(r.summary.monitors_pass ? "pass" : "FAIL", 10);
    } else {
      col("-", 13);
      col("-", 12);
      col("-", 10);
      col("-", 12);
      col("-", 10);
    }
    out << r.error << "\n";
  }
  return out.str();
}

inline nlohmann::json sweep_json(const std::vector<SweepRow>& rows, const SweepGrid& grid) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json row;
    for (std::size_t k = 0; k < grid.names.size(); ++k) row[grid.names[k]] = r.values[k];
    row["certified"] = r.certified;
    row["tau_d"] = r.tau_d;
    row["simulated"] = r.simulated;
    if (r.simulated) row["summary"] = summary_json(r.summary);
    if (!r.error.empty()) row["error"] = r.error;
    j.push_back(std::move(row));
  }
  return j;
}

}  // namespace pwamrac
