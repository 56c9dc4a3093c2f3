#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "bifurc/errors.hpp"
#include "bifurc/ising.hpp"
#include "bifurc/matrix.hpp"

namespace bifurc {

// Parameters of the simulated-bifurcation integrator. Times are physical:
// macro-step n sits at t_n = n * dt.
struct SolverConfig {
  double kerr = 1.0;                  // K
  double detuning = 1.0;              // Delta
  std::optional<double> xi0;          // empty: 0.7 Delta / (sigma_J sqrt(n))
  double pump_slope = 0.01;           // p(t) = slope * t
  double dt = 0.01;                   // macro-step
  int substeps = 2;                   // symplectic sub-steps per macro-step
  std::uint64_t sample_period = 50;   // steps between window samples
  std::size_t window = 35;            // samples retained
  std::uint64_t max_steps = 100000;
  std::uint64_t seed = 0;
  double init_amplitude = 1e-4;       // x(0) ~ U[-a, a], y(0) = 0
  double field_coefficient = 1.0;     // c in the kick xi0 [J x - c A(t) h] dt
  bool sample_below_threshold = false;  // sample the window while p(t) <= Delta
  bool record_trace = false;

  bool operator==(const SolverConfig&) const = default;
};

inline void validate(const SolverConfig& c) {
  auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
  if (!positive(c.kerr)) throw ConfigError("kerr must be positive");
  if (!positive(c.detuning)) throw ConfigError("detuning must be positive");
  if (c.xi0 && !positive(*c.xi0)) throw ConfigError("xi0 must be positive");
  if (!positive(c.pump_slope)) throw ConfigError("pump slope must be positive");
  if (!positive(c.dt)) throw ConfigError("dt must be positive");
  if (c.substeps < 2) throw ConfigError("symplectic sub-step count must be at least 2");
  if (c.sample_period == 0) throw ConfigError("sample period must be positive");
  if (c.window == 0) throw ConfigError("window size must be positive");
  if (c.max_steps == 0) throw ConfigError("max steps must be positive");
  if (!(c.init_amplitude >= 0.0) || !std::isfinite(c.init_amplitude))
    throw ConfigError("initial amplitude must be non-negative");
  if (!(c.field_coefficient >= 0.0) || !std::isfinite(c.field_coefficient))
    throw ConfigError("field coefficient must be non-negative");
}

// Population standard deviation over every entry of J, diagonal included.
inline double coupling_stddev(const IsingModel& model) {
  const auto flat = model.couplings().flat();
  double mean = 0.0;
  for (double v : flat) mean += v;
  mean /= static_cast<double>(flat.size());
  double var = 0.0;
  for (double v : flat) var += (v - mean) * (v - mean);
  return std::sqrt(var / static_cast<double>(flat.size()));
}

// Coupling scale. A constant J has no spread; sigma_J is then taken as 1.
inline double auto_xi0(const IsingModel& model, double detuning) {
  double sd = coupling_stddev(model);
  if (!(sd > 0.0)) sd = 1.0;
  return 0.7 * detuning / (sd * std::sqrt(static_cast<double>(model.size())));
}

inline SolverConfig resolve(SolverConfig c, const IsingModel& model) {
  validate(c);
  if (!c.xi0) c.xi0 = auto_xi0(model, c.detuning);
  return c;
}

inline double pump(const SolverConfig& c, double t) { return c.pump_slope * t; }

// Equilibrium amplitude tracked by the field term: zero until p(t) passes Delta.
inline double feedback_amplitude(const SolverConfig& c, double t) {
  const double excess = pump(c, t) - c.detuning;
  return excess > 0.0 ? std::sqrt(excess / c.kerr) : 0.0;
}

inline int sign(double x) noexcept { return x < 0.0 ? -1 : (x > 0.0 ? 1 : 0); }

// n x size matrix of sampled signs, columns ordered oldest to newest.
class SignWindow {
 public:
  SignWindow() = default;
  SignWindow(std::size_t spins, std::size_t size) : spins_(spins), size_(size), cells_(spins * size, 0) {}

  std::size_t spins() const noexcept { return spins_; }
  std::size_t size() const noexcept { return size_; }
  int at(std::size_t spin, std::size_t column) const noexcept { return cells_[spin * size_ + column]; }

  // Drops the oldest column and appends `signs` as the newest.
  void push(std::span<const int> signs) {
    if (signs.size() != spins_) throw DimensionError("sample size does not match window");
    for (std::size_t i = 0; i < spins_; ++i) {
      std::int8_t* row = cells_.data() + i * size_;
      std::copy(row + 1, row + size_, row);
      row[size_ - 1] = static_cast<std::int8_t>(signs[i]);
    }
  }

  std::vector<int> column(std::size_t c) const {
    std::vector<int> out(spins_);
    for (std::size_t i = 0; i < spins_; ++i) out[i] = at(i, c);
    return out;
  }

  bool operator==(const SignWindow&) const = default;

 private:
  std::size_t spins_ = 0;
  std::size_t size_ = 0;
  std::vector<std::int8_t> cells_;
};

struct OscillatorState {
  Vector x;
  Vector y;
  std::uint64_t step = 0;
  SignWindow window;

  std::vector<int> signs() const {
    std::vector<int> s(x.size());
    std::transform(x.begin(), x.end(), s.begin(), [](double v) { return sign(v); });
    return s;
  }
};

inline OscillatorState initial_state(std::size_t spins, const SolverConfig& c) {
  OscillatorState st{Vector(spins, 0.0), Vector(spins, 0.0), 0, SignWindow(spins, c.window)};
  std::mt19937_64 rng(c.seed);
  std::uniform_real_distribution<double> u(-c.init_amplitude, c.init_amplitude);
  for (auto& v : st.x) v = u(rng);
  return st;
}

// One macro-step t_n -> t_{n+1}: `substeps` symplectic Euler updates of the
// Kerr oscillators, then a single coupling and field kick of length dt.
// Bifurcated oscillators settle near x = A(t) s, where the kick is
// xi0 A (J s - c h); c = 1 makes that the descent direction of E(s).
// `scratch` receives J x and must hold model.size() doubles.
inline void advance(OscillatorState& st, const IsingModel& model, const SolverConfig& c,
                    std::span<double> scratch) {
  if (!c.xi0) throw ConfigError("xi0 must be resolved before integrating");
  const std::size_t n = model.size();
  if (st.x.size() != n || st.y.size() != n) throw DimensionError("state size does not match model");

  const double t_next = static_cast<double>(st.step + 1) * c.dt;
  const double detune = c.detuning - pump(c, t_next);
  const double delta_t = c.dt / c.substeps;
  for (std::size_t i = 0; i < n; ++i) {
    double x = st.x[i];
    double y = st.y[i];
    for (int m = 0; m < c.substeps; ++m) {
      x += c.detuning * y * delta_t;
      y -= (c.kerr * x * x * x + detune * x) * delta_t;
    }
    st.x[i] = x;
    st.y[i] = y;
  }

  multiply(model.couplings(), st.x, scratch);
  const double field_gain = c.field_coefficient * feedback_amplitude(c, t_next);
  const double kick = *c.xi0 * c.dt;
  const Vector& h = model.field();
  bool finite = true;
  for (std::size_t i = 0; i < n; ++i) {
    st.y[i] += kick * (scratch[i] - field_gain * h[i]);
    finite = finite && std::isfinite(st.x[i]) && std::isfinite(st.y[i]);
  }
  ++st.step;
  if (!finite) throw NumericalDivergenceError(st.step);
}

inline OscillatorState step(OscillatorState st, const IsingModel& model, const SolverConfig& c) {
  Vector scratch(model.size());
  advance(st, model, c, scratch);
  return st;
}

// Samples sign(x) into the window on multiples of the sampling period.
inline void update_window(OscillatorState& st, const SolverConfig& c) {
  if (st.step % c.sample_period != 0) return;
  if (st.window.spins() != st.x.size() || st.window.size() != c.window)
    throw DimensionError("window shape does not match state and config");
  st.window.push(st.signs());
}

// True once the window is full of samples and every row is a constant +-1.
inline bool check_converged(const SignWindow& w) {
  if (w.size() == 0) return false;
  for (std::size_t i = 0; i < w.spins(); ++i) {
    const int first = w.at(i, 0);
    if (first == 0) return false;
    for (std::size_t c = 1; c < w.size(); ++c)
      if (w.at(i, c) != first) return false;
  }
  return true;
}

inline bool check_converged(const OscillatorState& st) { return check_converged(st.window); }

struct TraceSample {
  std::uint64_t step = 0;
  double t = 0.0;
  std::vector<int> signs;
  double energy = 0.0;  // of the raw signs, zeros contributing nothing
};

struct SolverResult {
  SpinVector spins;
  double energy = 0.0;
  std::uint64_t steps_run = 0;
  bool converged = false;
  double xi0 = 0.0;
  SignWindow final_window;
  std::vector<TraceSample> trace;
};

// Integrates from `st` until every spin has bifurcated or max_steps is hit.
inline SolverResult solve_from(const IsingModel& model, SolverConfig config, OscillatorState st) {
  if (!model.symmetric()) throw ModelError("simulated bifurcation requires a symmetric coupling matrix");
  const SolverConfig c = resolve(std::move(config), model);
  if (st.window.spins() != model.size() || st.window.size() != c.window)
    st.window = SignWindow(model.size(), c.window);

  SolverResult out;
  out.xi0 = *c.xi0;
  Vector scratch(model.size());
  while (st.step < c.max_steps) {
    advance(st, model, c, scratch);
    const double t = static_cast<double>(st.step) * c.dt;
    if (!c.sample_below_threshold && pump(c, t) <= c.detuning) continue;
    if (st.step % c.sample_period != 0) continue;
    update_window(st, c);
    if (c.record_trace) {
      TraceSample s{st.step, t, st.signs(), 0.0};
      s.energy = sign_energy(model, s.signs);
      out.trace.push_back(std::move(s));
    }
    if (check_converged(st)) {
      out.converged = true;
      break;
    }
  }

  std::vector<int> spins = st.signs();
  for (int& v : spins)
    if (v == 0) v = 1;
  out.spins = SpinVector(spins);
  out.energy = energy(model, out.spins);
  out.steps_run = st.step;
  out.final_window = st.window;
  return out;
}

inline SolverResult solve(const IsingModel& model, const SolverConfig& config) {
  validate(config);
  return solve_from(model, config, initial_state(model.size(), config));
}

}  // namespace bifurc
