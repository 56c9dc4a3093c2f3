#include <gtest/gtest.h>

#include "support.hpp"

using namespace bifurc;
using namespace testing_support;

static SolverConfig resolved(SolverConfig c = {}) {
  if (!c.xi0) c.xi0 = 1.0;
  return c;
}

TEST(Schedule, Pump) {
  SolverConfig c;
  EXPECT_EQ(pump(c, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(pump(c, 100.0), 1.0);
  EXPECT_DOUBLE_EQ(pump(c, 250.0), 2.5);
}

TEST(Schedule, FeedbackAmplitude) {
  SolverConfig c;
  EXPECT_EQ(feedback_amplitude(c, 0.0), 0.0);
  EXPECT_EQ(feedback_amplitude(c, 100.0), 0.0);
  EXPECT_DOUBLE_EQ(feedback_amplitude(c, 200.0), 1.0);
}

TEST(Sign, Examples) {
  EXPECT_EQ(sign(0.0), 0);
  EXPECT_EQ(sign(-3.2), -1);
  EXPECT_EQ(sign(1e-300), 1);
}

TEST(Config, Validation) {
  SolverConfig c;
  EXPECT_NO_THROW(validate(c));
  c.substeps = 1;
  EXPECT_THROW(validate(c), ConfigError);
  c = {};
  c.dt = 0.0;
  EXPECT_THROW(validate(c), ConfigError);
  c = {};
  c.xi0 = -1.0;
  EXPECT_THROW(validate(c), ConfigError);
  c = {};
  c.window = 0;
  EXPECT_THROW(validate(c), ConfigError);
}

TEST(Config, AutoXi0) {
  const IsingModel m(Matrix{{0, 1}, {1, 0}}, Vector{0, 0});
  EXPECT_DOUBLE_EQ(coupling_stddev(m), 0.5);
  EXPECT_DOUBLE_EQ(auto_xi0(m, 1.0), 0.7 / (0.5 * std::sqrt(2.0)));
  const IsingModel flat(Matrix(3, 3), Vector(3, 0.0));
  EXPECT_DOUBLE_EQ(auto_xi0(flat, 1.0), 0.7 / std::sqrt(3.0));
}

TEST(Step, OriginIsFixedWithoutField) {
  std::mt19937_64 rng(31);
  const IsingModel m = random_model(4, rng, false);
  OscillatorState st{Vector(4, 0.0), Vector(4, 0.0), 0, {}};
  const auto next = step(st, m, resolved());
  EXPECT_EQ(next.x, Vector(4, 0.0));
  EXPECT_EQ(next.y, Vector(4, 0.0));
  EXPECT_EQ(next.step, 1u);
}

TEST(Step, HandComputedSubsteps) {
  const IsingModel m(Matrix{{0.0}}, Vector{0.0});
  SolverConfig c = resolved();
  c.pump_slope = 0.0;
  c.dt = 0.1;
  c.substeps = 2;
  OscillatorState st{Vector{0.0}, Vector{1.0}, 0, {}};
  const auto next = step(st, m, c);
  EXPECT_NEAR(next.x[0], 0.0998746875, 1e-15);
  const double y1 = 0.99749375;
  const double x2 = 0.0998746875;
  EXPECT_NEAR(next.y[0], y1 - (x2 * x2 * x2 + x2) * 0.05, 1e-15);
  EXPECT_NEAR(next.y[0], 0.99245020, 1e-8);
}

TEST(Step, KickUsesCouplingAndField) {
  const IsingModel m(Matrix{{0, 2}, {2, 0}}, Vector{1.0, -1.0});
  SolverConfig c = resolved();
  c.xi0 = 0.5;
  c.dt = 0.1;
  OscillatorState st{Vector{0.0, 0.0}, Vector{0.0, 0.0}, 20000, {}};  // t = 2000.1, p > Delta
  const auto next = step(st, m, c);
  const double a = feedback_amplitude(c, 20001 * 0.1);
  EXPECT_NEAR(next.y[0], 0.5 * 0.1 * (-c.field_coefficient * a * 1.0), 1e-14);
  EXPECT_NEAR(next.y[1], 0.5 * 0.1 * (c.field_coefficient * a * 1.0), 1e-14);
}

TEST(Step, DivergenceIsReported) {
  const IsingModel m(Matrix{{0.0}}, Vector{0.0});
  SolverConfig c = resolved();
  OscillatorState st{Vector{1e200}, Vector{1e200}, 0, {}};
  EXPECT_THROW(step(st, m, c), NumericalDivergenceError);
}

TEST(Step, OddFlowWithoutField) {
  std::mt19937_64 rng(32);
  for (int trial = 0; trial < 50; ++trial) {
    const IsingModel m = random_model(6, rng, false);
    SolverConfig c = resolved();
    c.xi0 = 0.3;
    OscillatorState a = initial_state(6, c);
    std::normal_distribution<double> g;
    for (auto& v : a.x) v = g(rng);
    for (auto& v : a.y) v = g(rng);
    a.step = 15000;
    OscillatorState b = a;
    for (auto& v : b.x) v = -v;
    for (auto& v : b.y) v = -v;
    for (int k = 0; k < 5; ++k) {
      a = step(a, m, c);
      b = step(b, m, c);
    }
    for (std::size_t i = 0; i < 6; ++i) {
      EXPECT_EQ(a.x[i], -b.x[i]);
      EXPECT_EQ(a.y[i], -b.y[i]);
    }
  }
}

// Test-only reference: explicit Euler, both updates from the old state.
static void plain_euler(OscillatorState& st, const IsingModel& m, const SolverConfig& c) {
  const double t = static_cast<double>(st.step + 1) * c.dt;
  const double detune = c.detuning - pump(c, t);
  const std::size_t n = m.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double x = st.x[i];
    st.x[i] = x + c.detuning * st.y[i] * c.dt;
    st.y[i] -= (c.kerr * x * x * x + detune * x) * c.dt;
  }
  const Vector jx = multiply(m.couplings(), st.x);
  for (std::size_t i = 0; i < n; ++i)
    st.y[i] += *c.xi0 * c.dt * (jx[i] - c.field_coefficient * feedback_amplitude(c, t) * m.field()[i]);
  ++st.step;
}

TEST(Step, SubstepRefinement) {
  std::mt19937_64 rng(33);
  for (int trial = 0; trial < 10; ++trial) {
    const IsingModel m = random_model(5, rng);
    SolverConfig c = resolved();
    c.xi0 = 0.1;
    c.dt = 0.05;
    c.seed = static_cast<std::uint64_t>(trial);
    c.init_amplitude = 0.5;
    const OscillatorState start = initial_state(5, c);
    OscillatorState p1 = start;
    OscillatorState s2 = start;
    OscillatorState s4 = start;
    SolverConfig c2 = c;
    SolverConfig c4 = c;
    c4.substeps = 4;
    for (int k = 0; k < 200; ++k) {
      plain_euler(p1, m, c);
      s2 = step(s2, m, c2);
      s4 = step(s4, m, c4);
    }
    double d21 = 0.0;
    double d42 = 0.0;
    for (std::size_t i = 0; i < 5; ++i) {
      d21 = std::max(d21, std::fabs(s2.x[i] - p1.x[i]));
      d42 = std::max(d42, std::fabs(s4.x[i] - s2.x[i]));
    }
    EXPECT_LT(d42, d21) << "trial " << trial;
  }
}

TEST(Window, OffSampleStepUnchanged) {
  SolverConfig c;
  c.window = 3;
  OscillatorState st = initial_state(2, c);
  st.step = c.sample_period + 1;
  const SignWindow before = st.window;
  update_window(st, c);
  EXPECT_EQ(st.window, before);
}

TEST(Window, FirstSampleLandsInLastColumn) {
  SolverConfig c;
  c.window = 3;
  OscillatorState st{Vector{0.5, -0.5}, Vector(2, 0.0), c.sample_period, SignWindow(2, 3)};
  update_window(st, c);
  EXPECT_EQ(st.window.column(2), (std::vector<int>{1, -1}));
  EXPECT_EQ(st.window.column(0), (std::vector<int>{0, 0}));
  EXPECT_EQ(st.window.column(1), (std::vector<int>{0, 0}));
}

TEST(Window, ShiftsOldestOut) {
  SignWindow w(1, 2);
  const std::vector<int> a{1}, b{-1}, c{1};
  w.push(a);
  w.push(b);
  EXPECT_EQ(w.column(0), a);
  w.push(c);
  EXPECT_EQ(w.column(0), b);
  EXPECT_EQ(w.column(1), c);
}

TEST(Window, ConvergenceRules) {
  SignWindow w(2, 3);
  EXPECT_FALSE(check_converged(w));
  const std::vector<int> s{1, -1};
  w.push(s);
  w.push(s);
  EXPECT_FALSE(check_converged(w));  // zero column remains
  w.push(s);
  EXPECT_TRUE(check_converged(w));
  const std::vector<int> flipped{1, 1};
  w.push(flipped);
  EXPECT_FALSE(check_converged(w));
  SignWindow z(1, 3);
  const std::vector<int> p{1}, m{-1};
  z.push(p);
  z.push(m);
  z.push(p);
  EXPECT_FALSE(check_converged(z));
}

TEST(Window, RandomizedAgainstDefinition) {
  std::mt19937_64 rng(34);
  std::uniform_int_distribution<int> d(-1, 1);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + trial % 4;
    const std::size_t size = 1 + trial % 5;
    SignWindow w(n, size);
    std::vector<std::vector<int>> cols;
    const int pushes = trial % 8;
    for (int k = 0; k < pushes; ++k) {
      std::vector<int> s(n);
      const bool noisy = (trial + k) % 3 == 0;
      for (std::size_t i = 0; i < n; ++i) s[i] = noisy ? d(rng) : (i % 2 ? 1 : -1);
      w.push(s);
      cols.push_back(s);
    }
    std::vector<std::vector<int>> expect(size, std::vector<int>(n, 0));
    for (std::size_t c = 0; c < size && c < cols.size(); ++c) expect[size - 1 - c] = cols[cols.size() - 1 - c];
    bool conv = true;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t c = 0; c < size; ++c) conv = conv && expect[c][i] != 0 && expect[c][i] == expect[0][i];
    for (std::size_t c = 0; c < size; ++c) ASSERT_EQ(w.column(c), expect[c]);
    ASSERT_EQ(check_converged(w), conv);
  }
}

TEST(Solve, SingleSpinAgainstField) {
  const auto r = solve(IsingModel(Matrix{{0.0}}, Vector{5.0}), {});
  EXPECT_EQ(r.spins, SpinVector({-1}));
  EXPECT_TRUE(r.converged);
}

TEST(Solve, NullModelConverges) {
  const auto r = solve(IsingModel(Matrix(3, 3), Vector(3, 0.0)), {});
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.energy, 0.0);
}

TEST(Solve, RejectsAsymmetricModel) {
  EXPECT_THROW(solve(IsingModel(Matrix{{0, 1}, {0, 0}}, Vector{0, 0}), {}), ModelError);
}

TEST(Solve, DeterministicUnderSeed) {
  std::mt19937_64 rng(35);
  for (int trial = 0; trial < 10; ++trial) {
    const IsingModel m = random_model(8, rng);
    SolverConfig c;
    c.seed = static_cast<std::uint64_t>(trial);
    c.record_trace = true;
    const auto a = solve(m, c);
    const auto b = solve(m, c);
    EXPECT_EQ(a.spins, b.spins);
    EXPECT_EQ(a.energy, b.energy);
    EXPECT_EQ(a.steps_run, b.steps_run);
    EXPECT_EQ(a.final_window, b.final_window);
    EXPECT_EQ(a.trace.size(), b.trace.size());
  }
}

TEST(Solve, EnergyRecomputedAndGateHolds) {
  std::mt19937_64 rng(36);
  for (int trial = 0; trial < 10; ++trial) {
    const IsingModel m = random_model(6, rng);
    SolverConfig c;
    c.seed = static_cast<std::uint64_t>(trial);
    const auto r = solve(m, c);
    EXPECT_EQ(r.energy, energy(m, r.spins));
    if (r.converged) {
      EXPECT_TRUE(check_converged(r.final_window));
    }
  }
}

TEST(Solve, GlobalFlipWithoutField) {
  std::mt19937_64 rng(37);
  for (int trial = 0; trial < 10; ++trial) {
    const IsingModel m = random_model(6, rng, false);
    SolverConfig c;
    c.seed = static_cast<std::uint64_t>(trial);
    OscillatorState st = initial_state(6, c);
    OscillatorState neg = st;
    for (auto& v : neg.x) v = -v;
    const auto a = solve_from(m, c, st);
    const auto b = solve_from(m, c, neg);
    EXPECT_EQ(a.spins.negated(), b.spins);
    EXPECT_EQ(a.energy, b.energy);
  }
}

TEST(Solve, MaxStepsWithoutConvergence) {
  std::mt19937_64 rng(38);
  SolverConfig c;
  c.max_steps = 100;
  const auto r = solve(random_model(4, rng), c);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.steps_run, 100u);
}

TEST(Solve, TraceSamplesEnergy) {
  std::mt19937_64 rng(39);
  const IsingModel m = random_model(4, rng);
  SolverConfig c;
  c.record_trace = true;
  const auto r = solve(m, c);
  ASSERT_FALSE(r.trace.empty());
  for (const auto& s : r.trace) {
    EXPECT_EQ(s.step % c.sample_period, 0u);
    EXPECT_EQ(s.energy, sign_energy(m, s.signs));
  }
}

TEST(Solve, FixtureMatchesOracleAcrossSeeds) {
  const auto p = io::problem_from_json(io::read_json_file(data_path("test_dataset.json")));
  const auto red = markowitz_to_ising(p);
  const auto best = brute_force_weights(p);
  int hits = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    SolverConfig c;
    c.seed = seed;
    const auto r = solve(red.model, c);
    hits += std::fabs(utility(p, decode_spins(r.spins, p.assets(), p.alpha())) - best.utility) <= 1e-6;
  }
  EXPECT_GE(hits, 45);
}
