#pragma once

#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bifurc/bench.hpp"
#include "bifurc/encoding.hpp"
#include "bifurc/errors.hpp"
#include "bifurc/ising.hpp"
#include "bifurc/sb.hpp"

// JSON documents for models, problems, solver configs and results.
// Doubles round-trip exactly through nlohmann's shortest representation.
namespace bifurc::io {

using nlohmann::json;

inline json matrix_json(const Matrix& m) { return m.to_rows(); }

inline Matrix matrix_from(const json& j, const char* what) {
  if (!j.is_array()) throw ConfigError(std::string(what) + " must be an array of rows");
  std::vector<std::vector<double>> rows;
  for (const auto& r : j) {
    if (!r.is_array()) throw ConfigError(std::string(what) + " rows must be arrays");
    std::vector<double> row;
    for (const auto& v : r) {
      if (!v.is_number()) throw ConfigError(std::string(what) + " entries must be numbers");
      row.push_back(v.get<double>());
    }
    rows.push_back(std::move(row));
  }
  try {
    return Matrix::from_rows(rows);
  } catch (const DimensionError&) {
    throw DimensionError(std::string(what) + " has ragged rows");
  }
}

inline Vector vector_from(const json& j, const char* what) {
  if (!j.is_array()) throw ConfigError(std::string(what) + " must be an array");
  Vector v;
  for (const auto& x : j) {
    if (!x.is_number()) throw ConfigError(std::string(what) + " entries must be numbers");
    v.push_back(x.get<double>());
  }
  return v;
}

inline const json& require(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw ConfigError(std::string("missing key '") + key + "'");
  return j.at(key);
}

// ---- Ising model: {"n", "J", "h"} ----

inline json to_json(const IsingModel& m) {
  return json{{"n", m.size()}, {"J", matrix_json(m.couplings())}, {"h", m.field()}};
}

inline IsingModel ising_from_json(const json& j) {
  Matrix J = matrix_from(require(j, "J"), "J");
  Vector h = vector_from(require(j, "h"), "h");
  if (j.contains("n")) {
    const auto n = j.at("n");
    if (!n.is_number_unsigned() || n.get<std::size_t>() != h.size())
      throw DimensionError("declared n does not match the field length");
  }
  return {std::move(J), std::move(h)};
}

// ---- Markowitz problem: {"mu", "sigma", "gamma", "alpha"} (+ optional "tickers") ----

inline json to_json(const MarkowitzProblem& p) {
  json j{{"mu", p.mu()}, {"sigma", matrix_json(p.sigma())}, {"gamma", p.gamma()}, {"alpha", p.alpha()}};
  if (!p.tickers().empty()) j["tickers"] = p.tickers();
  return j;
}

inline MarkowitzProblem problem_from_json(const json& j) {
  Vector mu = vector_from(require(j, "mu"), "mu");
  Matrix sigma = matrix_from(require(j, "sigma"), "sigma");
  double gamma = 1.0;
  if (j.contains("gamma")) {
    if (!j.at("gamma").is_number()) throw ConfigError("gamma must be a number");
    gamma = j.at("gamma").get<double>();
  }
  int alpha = 1;
  if (j.contains("alpha")) {
    if (!j.at("alpha").is_number_integer()) throw ConfigError("alpha must be an integer");
    alpha = j.at("alpha").get<int>();
  }
  std::vector<std::string> tickers;
  if (j.contains("tickers")) tickers = j.at("tickers").get<std::vector<std::string>>();
  return {std::move(mu), std::move(sigma), gamma, alpha, std::move(tickers)};
}

// ---- Solver config ----

inline json to_json(const SolverConfig& c) {
  json j{{"kerr", c.kerr},
         {"detuning", c.detuning},
         {"pump_slope", c.pump_slope},
         {"dt", c.dt},
         {"substeps", c.substeps},
         {"sample_period", c.sample_period},
         {"window", c.window},
         {"max_steps", c.max_steps},
         {"seed", c.seed},
         {"init_amplitude", c.init_amplitude},
         {"field_coefficient", c.field_coefficient},
         {"sample_below_threshold", c.sample_below_threshold},
         {"record_trace", c.record_trace}};
  j["xi0"] = c.xi0 ? json(*c.xi0) : json("auto");
  return j;
}

// Overlays the keys present in `j` onto `base`; unknown keys are rejected.
inline SolverConfig solver_config_from_json(const json& j, SolverConfig base = {}) {
  if (!j.is_object()) throw ConfigError("solver config must be a JSON object");
  static const std::set<std::string> known = {"kerr", "detuning", "xi0", "pump_slope", "dt", "substeps",
                                              "sample_period", "window", "max_steps", "seed",
                                              "init_amplitude", "field_coefficient", "sample_below_threshold",
                                              "record_trace"};
  for (const auto& [k, v] : j.items())
    if (!known.contains(k)) throw ConfigError("unknown solver config key '" + k + "'");
  try {
    if (j.contains("kerr")) base.kerr = j.at("kerr").get<double>();
    if (j.contains("detuning")) base.detuning = j.at("detuning").get<double>();
    if (j.contains("xi0")) {
      const auto& x = j.at("xi0");
      if (x.is_string()) {
        if (x.get<std::string>() != "auto") throw ConfigError("xi0 must be \"auto\" or a number");
        base.xi0.reset();
      } else {
        base.xi0 = x.get<double>();
      }
    }
    if (j.contains("pump_slope")) base.pump_slope = j.at("pump_slope").get<double>();
    if (j.contains("dt")) base.dt = j.at("dt").get<double>();
    if (j.contains("substeps")) base.substeps = j.at("substeps").get<int>();
    if (j.contains("sample_period")) base.sample_period = j.at("sample_period").get<std::uint64_t>();
    if (j.contains("window")) base.window = j.at("window").get<std::size_t>();
    if (j.contains("max_steps")) base.max_steps = j.at("max_steps").get<std::uint64_t>();
    if (j.contains("seed")) base.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("init_amplitude")) base.init_amplitude = j.at("init_amplitude").get<double>();
    if (j.contains("field_coefficient")) base.field_coefficient = j.at("field_coefficient").get<double>();
    if (j.contains("sample_below_threshold")) base.sample_below_threshold = j.at("sample_below_threshold").get<bool>();
    if (j.contains("record_trace")) base.record_trace = j.at("record_trace").get<bool>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad solver config value: ") + e.what());
  }
  validate(base);
  return base;
}

// ---- Results ----

inline json to_json(const SolverResult& r, bool with_trace) {
  json j{{"spins", r.spins.values()},
         {"energy", r.energy},
         {"steps", r.steps_run},
         {"converged", r.converged},
         {"xi0", r.xi0}};
  if (with_trace) {
    json t = json::array();
    for (const auto& s : r.trace) t.push_back({{"step", s.step}, {"t", s.t}, {"signs", s.signs}, {"energy", s.energy}});
    j["trace"] = std::move(t);
  }
  return j;
}

// step,t,spin_0..spin_{n-1},energy
inline void write_trace_csv(std::ostream& out, const SolverResult& r) {
  out << std::setprecision(17);
  out << "step,t";
  for (std::size_t i = 0; i < r.spins.size(); ++i) out << ",spin_" << i;
  out << ",energy\n";
  for (const auto& s : r.trace) {
    out << s.step << ',' << s.t;
    for (int v : s.signs) out << ',' << v;
    out << ',' << s.energy << '\n';
  }
}

// asset_index,ticker,weight
inline void write_weights_csv(std::ostream& out, const WeightVector& w, const std::vector<std::string>& tickers) {
  out << "asset_index,ticker,weight\n";
  for (std::size_t i = 0; i < w.size(); ++i)
    out << i << ',' << (i < tickers.size() ? tickers[i] : "asset_" + std::to_string(i)) << ',' << w[i] << '\n';
}

// ---- Studies ----

inline bench::StudySpec study_from_json(const json& j, bench::StudySpec base = {}) {
  if (!j.is_object()) throw ConfigError("study spec must be a JSON object");
  static const std::set<std::string> known = {"preset", "grid", "trials", "mu_scale", "sigma_scale", "gamma",
                                              "solver", "seed", "threads"};
  for (const auto& [k, v] : j.items())
    if (!known.contains(k)) throw ConfigError("unknown study key '" + k + "'");
  try {
    if (j.contains("grid")) {
      base.grid.clear();
      for (const auto& c : j.at("grid")) {
        if (c.is_array() && c.size() == 2)
          base.grid.push_back({c[0].get<std::size_t>(), c[1].get<int>()});
        else
          base.grid.push_back({c.at("assets").get<std::size_t>(), c.at("alpha").get<int>()});
      }
    }
    if (j.contains("trials")) base.trials = j.at("trials").get<std::size_t>();
    if (j.contains("mu_scale")) base.mu_scale = j.at("mu_scale").get<double>();
    if (j.contains("sigma_scale")) base.sigma_scale = j.at("sigma_scale").get<double>();
    if (j.contains("gamma")) base.gamma = j.at("gamma").get<double>();
    if (j.contains("seed")) base.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("threads")) base.threads = j.at("threads").get<unsigned>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad study spec value: ") + e.what());
  }
  if (j.contains("solver")) base.solver = solver_config_from_json(j.at("solver"), base.solver);
  return base;
}

inline json to_json(const bench::StudySpec& s) {
  json grid = json::array();
  for (const auto& c : s.grid) grid.push_back({c.assets, c.alpha});
  return json{{"grid", grid},        {"trials", s.trials}, {"mu_scale", s.mu_scale},
              {"sigma_scale", s.sigma_scale}, {"gamma", s.gamma}, {"solver", to_json(s.solver)},
              {"seed", s.seed},      {"ceiling", s.ceiling}};
}

// Deterministic part of a report; wall-clock timings are kept apart.
inline json to_json(const bench::StudyReport& r) {
  json cells = json::array();
  for (const auto& c : r.cells)
    cells.push_back({{"assets", c.cell.assets},
                     {"alpha", c.cell.alpha},
                     {"trials", c.trials},
                     {"failures", c.failures},
                     {"exact_match_pct", c.exact_match_pct},
                     {"converged_pct", c.converged_pct},
                     {"mean_rel_gap_ising", c.mean_rel_gap_ising},
                     {"mean_rel_gap_utility", c.mean_rel_gap_utility},
                     {"mean_hamming_accuracy", c.mean_hamming_accuracy}});
  return json{{"cells", cells}};
}

inline json timing_json(const bench::StudyReport& r) {
  json cells = json::array();
  for (const auto& c : r.cells)
    cells.push_back({{"assets", c.cell.assets},
                     {"alpha", c.cell.alpha},
                     {"mean_sb_seconds", c.mean_sb_seconds},
                     {"mean_oracle_seconds", c.mean_oracle_seconds}});
  return cells;
}

// Per-cell table; gap columns also given in units of 1e-4.
inline void write_summary_csv(std::ostream& out, const bench::StudyReport& r) {
  out << std::setprecision(17);
  out << "assets,alpha,trials,failures,exact_match_pct,mean_rel_gap_ising,mean_rel_gap_utility,"
         "mean_rel_gap_ising_e4,mean_rel_gap_utility_e4,mean_hamming_accuracy\n";
  for (const auto& c : r.cells)
    out << c.cell.assets << ',' << c.cell.alpha << ',' << c.trials << ',' << c.failures << ','
        << c.exact_match_pct << ',' << c.mean_rel_gap_ising << ',' << c.mean_rel_gap_utility << ','
        << c.mean_rel_gap_ising * 1e4 << ',' << c.mean_rel_gap_utility * 1e4 << ',' << c.mean_hamming_accuracy
        << '\n';
}

inline void write_trials_csv(std::ostream& out, const bench::StudyReport& r) {
  out << std::setprecision(17);
  out << "assets,alpha,trial,failed,exact_match,converged,steps,sb_energy,opt_energy,sb_utility,"
         "opt_utility,rel_gap_ising,rel_gap_utility,hamming_accuracy\n";
  for (const auto& t : r.records)
    out << t.cell.assets << ',' << t.cell.alpha << ',' << t.trial << ',' << int(t.failed) << ','
        << int(t.exact_match) << ',' << int(t.converged) << ',' << t.steps << ',' << t.sb_energy << ','
        << t.opt_energy << ',' << t.sb_utility << ',' << t.opt_utility << ',' << t.rel_gap_ising << ','
        << t.rel_gap_utility << ',' << t.hamming_accuracy << '\n';
}

// Accuracy against subset size for the one-bit cells.
inline void write_accuracy_curve_csv(std::ostream& out, const bench::StudyReport& r) {
  out << std::setprecision(17);
  out << "assets,mean_hamming_accuracy,exact_match_pct\n";
  for (const auto& c : r.cells)
    if (c.cell.alpha == 1) out << c.cell.assets << ',' << c.mean_hamming_accuracy << ',' << c.exact_match_pct << '\n';
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

}  // namespace bifurc::io
