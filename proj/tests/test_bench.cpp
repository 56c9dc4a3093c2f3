#include <gtest/gtest.h>

#include "support.hpp"

using namespace bifurc;
using namespace bifurc::bench;

// Cyclic Jacobi sweeps; returns the eigenvalues of a symmetric matrix.
static Vector eigenvalues(Matrix a) {
  const std::size_t n = a.rows();
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
    }
  }
  Vector ev(n);
  for (std::size_t i = 0; i < n; ++i) ev[i] = a(i, i);
  return ev;
}

TEST(Jacobi, KnownSpectrum) {
  const Vector ev = eigenvalues(Matrix{{2, 1}, {1, 2}});
  EXPECT_NEAR(std::min(ev[0], ev[1]), 1.0, 1e-12);
  EXPECT_NEAR(std::max(ev[0], ev[1]), 3.0, 1e-12);
}

TEST(RelativeGap, Examples) {
  EXPECT_EQ(relative_gap(5, 5), 0.0);
  EXPECT_NEAR(relative_gap(9, 10), 0.1, 1e-15);
  EXPECT_EQ(relative_gap(0.5, 0), 0.5);
  EXPECT_NEAR(relative_gap(-9, -10), 0.1, 1e-15);
}

TEST(RandomInstance, Deterministic) {
  StudySpec s;
  s.seed = 7;
  const auto a = random_instance(s, {5, 2}, 3);
  const auto b = random_instance(s, {5, 2}, 3);
  EXPECT_EQ(a.mu(), b.mu());
  EXPECT_EQ(a.sigma(), b.sigma());
  const auto c = random_instance(s, {5, 2}, 4);
  EXPECT_NE(a.mu(), c.mu());
}

TEST(RandomInstance, CovarianceIsPositiveSemidefinite) {
  StudySpec s;
  for (std::size_t trial = 0; trial < 50; ++trial) {
    const auto p = random_instance(s, {2 + trial % 12, 1}, trial);
    EXPECT_EQ(p.sigma().asymmetry(), 0.0);
    for (double ev : eigenvalues(p.sigma())) EXPECT_GE(ev, -1e-12);
  }
}

TEST(RandomInstance, Magnitudes) {
  StudySpec s;
  for (std::size_t trial = 0; trial < 50; ++trial) {
    const auto p = random_instance(s, {8, 1}, trial);
    for (double m : p.mu()) {
      EXPECT_GE(m, 0.0);
      EXPECT_LE(m, 10 * s.mu_scale);
    }
    for (std::size_t i = 0; i < 8; ++i) EXPECT_LT(p.sigma()(i, i), 10 * s.sigma_scale);
  }
}

TEST(HammingAccuracy, NearestOptimum) {
  const std::vector<SpinVector> optima{{1, 1, 1, 1}, {-1, -1, -1, 1}};
  EXPECT_EQ(hamming_accuracy({1, 1, 1, 1}, optima), 1.0);
  EXPECT_EQ(hamming_accuracy({-1, -1, 1, 1}, optima), 0.75);
}

TEST(Study, SingleTinyCell) {
  StudySpec s;
  s.grid = {{2, 1}};
  s.trials = 1;
  const auto r = run_study(s);
  ASSERT_EQ(r.records.size(), 1u);
  ASSERT_EQ(r.cells.size(), 1u);
  EXPECT_EQ(r.cells[0].trials, 1u);
}

TEST(Study, InvariantsAndExactGaps) {
  StudySpec s;
  s.grid = {{3, 1}, {2, 2}, {4, 1}};
  s.trials = 20;
  const auto r = run_study(s);
  for (const auto& c : r.cells) {
    EXPECT_GE(c.exact_match_pct, 0.0);
    EXPECT_LE(c.exact_match_pct, 100.0);
    EXPECT_GE(c.mean_rel_gap_ising, 0.0);
    EXPECT_GE(c.mean_rel_gap_utility, 0.0);
    EXPECT_GE(c.mean_hamming_accuracy, 0.0);
    EXPECT_LE(c.mean_hamming_accuracy, 1.0);
  }
  for (const auto& t : r.records) {
    EXPECT_LE(t.opt_energy, t.sb_energy + 1e-12);
    EXPECT_GE(t.opt_utility, t.sb_utility - 1e-12);
    if (t.exact_match) {
      EXPECT_EQ(t.rel_gap_ising, 0.0);
      EXPECT_EQ(t.rel_gap_utility, 0.0);
    }
  }
}

TEST(Study, IndependentOfWorkerCount) {
  StudySpec s;
  s.grid = {{4, 1}, {2, 2}};
  s.trials = 8;
  s.threads = 1;
  const auto a = run_study(s);
  s.threads = 3;
  const auto b = run_study(s);
  ASSERT_EQ(a.records.size(), b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    EXPECT_EQ(a.records[i].sb_energy, b.records[i].sb_energy);
    EXPECT_EQ(a.records[i].steps, b.records[i].steps);
  }
}

TEST(Study, Validation) {
  StudySpec s;
  EXPECT_THROW(run_study(s), ConfigError);
  s.grid = {{30, 1}};
  EXPECT_THROW(run_study(s), InstanceTooLargeError);
  s.grid = {{2, 1}};
  s.trials = 0;
  EXPECT_THROW(run_study(s), ConfigError);
}

TEST(Presets, AccuracyGrid) {
  const auto s = accuracy_grid_preset();
  EXPECT_EQ(s.trials, 50u);
  EXPECT_EQ(s.grid.size(), 13u + 6 + 3 + 2 + 1 + 1 + 1);
  EXPECT_EQ(s.grid.front(), (Cell{2, 1}));
  EXPECT_EQ(s.grid.back(), (Cell{2, 7}));
  EXPECT_EQ(gap_grid_preset().trials, 100u);
}

TEST(Presets, OneBitCurve) {
  const auto s = onebit_curve_preset();
  EXPECT_EQ(s.trials, 150u);
  ASSERT_EQ(s.grid.size(), 13u);
  for (std::size_t i = 0; i < 13; ++i) EXPECT_EQ(s.grid[i], (Cell{6 + i, 1}));
}
