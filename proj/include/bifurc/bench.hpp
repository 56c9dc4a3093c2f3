#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "bifurc/encoding.hpp"
#include "bifurc/errors.hpp"
#include "bifurc/ising.hpp"
#include "bifurc/sb.hpp"

namespace bifurc::bench {

struct Cell {
  std::size_t assets = 0;
  int alpha = 1;

  std::size_t spins() const noexcept { return assets * static_cast<std::size_t>(alpha); }
  bool operator==(const Cell&) const = default;
};

struct StudySpec {
  std::vector<Cell> grid;
  std::size_t trials = 50;
  double mu_scale = 1e-2;
  double sigma_scale = 1e-4;
  double gamma = 1.0;
  SolverConfig solver;
  std::uint64_t seed = 0;
  std::size_t ceiling = kDefaultOracleCeiling;
  unsigned threads = 0;  // 0: hardware concurrency
};

struct TrialRecord {
  Cell cell;
  std::size_t trial = 0;
  bool failed = false;  // solver diverged
  bool exact_match = false;
  bool converged = false;
  std::uint64_t steps = 0;
  double sb_energy = 0.0;
  double opt_energy = 0.0;
  double sb_utility = 0.0;
  double opt_utility = 0.0;
  double rel_gap_ising = 0.0;
  double rel_gap_utility = 0.0;
  double hamming_accuracy = 0.0;
  double sb_seconds = 0.0;
  double oracle_seconds = 0.0;
};

// Gaps and accuracies average over non-failed trials; the exact-match
// percentage counts failed trials as misses.
struct CellReport {
  Cell cell;
  std::size_t trials = 0;
  std::size_t failures = 0;
  double exact_match_pct = 0.0;
  double converged_pct = 0.0;
  double mean_rel_gap_ising = 0.0;
  double mean_rel_gap_utility = 0.0;
  double mean_hamming_accuracy = 0.0;
  double mean_sb_seconds = 0.0;
  double mean_oracle_seconds = 0.0;
};

struct StudyReport {
  std::vector<CellReport> cells;
  std::vector<TrialRecord> records;
};

inline double relative_gap(double value, double optimum) {
  const double diff = std::fabs(value - optimum);
  return optimum != 0.0 ? diff / std::fabs(optimum) : diff;
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent stream per (seed, cell, trial, purpose).
inline std::uint64_t derive_seed(std::uint64_t seed, const Cell& cell, std::size_t trial, std::uint64_t purpose) {
  std::uint64_t s = splitmix64(seed);
  s = splitmix64(s ^ cell.assets);
  s = splitmix64(s ^ static_cast<std::uint64_t>(cell.alpha));
  s = splitmix64(s ^ trial);
  return splitmix64(s ^ purpose);
}

}  // namespace detail

// Sigma = (sigma_scale / N) A A^T with A_ij ~ N(0, 1); mu_i ~ U(0, 1) * mu_scale.
inline MarkowitzProblem random_instance(const StudySpec& spec, const Cell& cell, std::size_t trial) {
  const std::size_t n = cell.assets;
  if (n == 0) throw DimensionError("cell needs at least one asset");
  std::mt19937_64 rng(detail::derive_seed(spec.seed, cell, trial, 0));
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) = normal(rng);
  const double scale = spec.sigma_scale / static_cast<double>(n);
  Matrix sigma(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) sigma(i, j) = sigma(j, i) = scale * dot(a.row(i), a.row(j));

  Vector mu(n);
  for (double& m : mu) m = uniform(rng) * spec.mu_scale;
  return MarkowitzProblem(std::move(mu), std::move(sigma), spec.gamma, cell.alpha);
}

inline double hamming_accuracy(const SpinVector& s, const std::vector<SpinVector>& optima) {
  double best = 0.0;
  for (const auto& o : optima) {
    std::size_t same = 0;
    for (std::size_t i = 0; i < s.size(); ++i) same += s[i] == o[i] ? 1 : 0;
    best = std::max(best, static_cast<double>(same) / static_cast<double>(s.size()));
  }
  return best;
}

inline TrialRecord run_trial(const StudySpec& spec, const Cell& cell, std::size_t trial) {
  using clock = std::chrono::steady_clock;
  TrialRecord rec{cell, trial};
  const MarkowitzProblem p = random_instance(spec, cell, trial);
  const IsingReduction red = markowitz_to_ising(p);

  OracleOptions oo;
  oo.ceiling = spec.ceiling;
  oo.threads = 1;
  const auto t0 = clock::now();
  const GroundStates optima = brute_force_ground_states(red.model, oo);
  const auto t1 = clock::now();
  rec.oracle_seconds = std::chrono::duration<double>(t1 - t0).count();
  rec.opt_energy = optima.energy;
  rec.opt_utility = utility(p, decode_spins(optima.states.front(), cell.assets, cell.alpha));

  SolverConfig sc = spec.solver;
  sc.seed = detail::derive_seed(spec.seed, cell, trial, 1);
  sc.record_trace = false;
  SolverResult r;
  try {
    const auto t2 = clock::now();
    r = solve(red.model, sc);
    rec.sb_seconds = std::chrono::duration<double>(clock::now() - t2).count();
  } catch (const NumericalDivergenceError&) {
    rec.failed = true;
    return rec;
  }
  rec.converged = r.converged;
  rec.steps = r.steps_run;
  rec.sb_energy = r.energy;
  rec.sb_utility = utility(p, decode_spins(r.spins, cell.assets, cell.alpha));
  rec.hamming_accuracy = hamming_accuracy(r.spins, optima.states);

  // Same optimal value counts as exact; degenerate optima differ only by rounding.
  rec.exact_match = std::fabs(rec.sb_utility - rec.opt_utility) <= 1e-9 * (1.0 + std::fabs(rec.opt_utility));
  if (!rec.exact_match) {
    rec.rel_gap_ising = relative_gap(rec.sb_energy, rec.opt_energy);
    rec.rel_gap_utility = relative_gap(rec.sb_utility, rec.opt_utility);
  }
  return rec;
}

inline CellReport summarize(const Cell& cell, const std::vector<TrialRecord>& recs) {
  CellReport c{cell, recs.size()};
  std::size_t ok = 0;
  std::size_t exact = 0;
  std::size_t conv = 0;
  for (const auto& r : recs) {
    if (r.failed) {
      ++c.failures;
      continue;
    }
    ++ok;
    exact += r.exact_match ? 1 : 0;
    conv += r.converged ? 1 : 0;
    c.mean_rel_gap_ising += r.rel_gap_ising;
    c.mean_rel_gap_utility += r.rel_gap_utility;
    c.mean_hamming_accuracy += r.hamming_accuracy;
    c.mean_sb_seconds += r.sb_seconds;
    c.mean_oracle_seconds += r.oracle_seconds;
  }
  if (!recs.empty()) {
    c.exact_match_pct = 100.0 * static_cast<double>(exact) / static_cast<double>(recs.size());
    c.converged_pct = 100.0 * static_cast<double>(conv) / static_cast<double>(recs.size());
  }
  if (ok > 0) {
    const double d = static_cast<double>(ok);
    c.mean_rel_gap_ising /= d;
    c.mean_rel_gap_utility /= d;
    c.mean_hamming_accuracy /= d;
    c.mean_sb_seconds /= d;
    c.mean_oracle_seconds /= d;
  }
  return c;
}

inline void validate(const StudySpec& spec) {
  if (spec.grid.empty()) throw ConfigError("study grid is empty");
  if (spec.trials == 0) throw ConfigError("trials must be positive");
  if (!(spec.mu_scale >= 0.0) || !(spec.sigma_scale >= 0.0)) throw ConfigError("scales must be non-negative");
  if (!(spec.gamma > 0.0)) throw ConfigError("gamma must be positive");
  for (const auto& c : spec.grid) {
    if (c.assets == 0) throw ConfigError("cell needs at least one asset");
    check_alpha(c.alpha);
    if (c.spins() > spec.ceiling) throw InstanceTooLargeError(c.spins(), spec.ceiling);
  }
  bifurc::validate(spec.solver);
}

// Trials run on a worker pool; every trial owns its random streams, so the
// report does not depend on the worker count.
inline StudyReport run_study(const StudySpec& spec) {
  validate(spec);
  const std::size_t total = spec.grid.size() * spec.trials;
  std::vector<TrialRecord> records(total);

  unsigned workers = spec.threads != 0 ? spec.threads : std::thread::hardware_concurrency();
  workers = static_cast<unsigned>(std::clamp<std::size_t>(workers, 1, total));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t k = next++; k < total; k = next++)
      records[k] = run_trial(spec, spec.grid[k / spec.trials], k % spec.trials);
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < workers; ++t) pool.emplace_back(work);
  }

  StudyReport report;
  for (std::size_t c = 0; c < spec.grid.size(); ++c) {
    std::vector<TrialRecord> cell(records.begin() + static_cast<std::ptrdiff_t>(c * spec.trials),
                                  records.begin() + static_cast<std::ptrdiff_t>((c + 1) * spec.trials));
    report.cells.push_back(summarize(spec.grid[c], cell));
  }
  report.records = std::move(records);
  return report;
}

// Cells of the exact-accuracy table that were tractable by brute force.
inline StudySpec accuracy_grid_preset() {
  StudySpec s;
  const std::pair<int, std::size_t> rows[] = {{1, 14}, {2, 7}, {3, 4}, {4, 3}, {5, 2}, {6, 2}, {7, 2}};
  for (auto [alpha, max_assets] : rows)
    for (std::size_t n = 2; n <= max_assets; ++n) s.grid.push_back({n, alpha});
  s.trials = 50;
  return s;
}

// Same grid, 100 trials as used for the relative-gap tables.
inline StudySpec gap_grid_preset() {
  StudySpec s = accuracy_grid_preset();
  s.trials = 100;
  return s;
}

// One-bit accuracy curve over subset sizes 6..18.
inline StudySpec onebit_curve_preset() {
  StudySpec s;
  for (std::size_t n = 6; n <= 18; ++n) s.grid.push_back({n, 1});
  s.trials = 150;
  return s;
}

}  // namespace bifurc::bench
