#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "bifurc/bifurc.hpp"
#include "bifurc/io.hpp"

namespace testing_support {

using namespace bifurc;

// Plain double loop, the reference for every optimised energy path.
inline double naive_energy(const Matrix& J, const Vector& h, const std::vector<int>& s) {
  double e = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j) e -= 0.5 * s[i] * J(i, j) * s[j];
  for (std::size_t i = 0; i < s.size(); ++i) e += s[i] * h[i];
  return e;
}

inline IsingModel random_model(std::size_t n, std::mt19937_64& rng, bool with_field = true) {
  std::normal_distribution<double> g;
  Matrix J(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) J(i, j) = J(j, i) = g(rng);
  Vector h(n, 0.0);
  if (with_field)
    for (double& v : h) v = g(rng);
  return {J, h};
}

inline SpinVector random_spins(std::size_t n, std::mt19937_64& rng) {
  std::bernoulli_distribution b;
  std::vector<int> v(n);
  for (int& x : v) x = b(rng) ? 1 : -1;
  return SpinVector(v);
}

inline SpinVector spins_from_index(std::uint64_t idx, std::size_t n) {
  std::vector<int> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = (idx >> (n - 1 - i)) & 1 ? 1 : -1;
  return SpinVector(v);
}

inline MarkowitzProblem random_problem(std::size_t n, int alpha, std::mt19937_64& rng, double gamma = 1.0) {
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) = g(rng);
  Matrix s(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) s(i, j) = s(j, i) = 1e-2 * dot(a.row(i), a.row(j)) / static_cast<double>(n);
  Vector mu(n);
  for (double& m : mu) m = 0.1 * u(rng);
  return {mu, s, gamma, alpha};
}

inline std::string data_path(const std::string& name) { return std::string(BIFURC_DATA_DIR) + "/" + name; }

}  // namespace testing_support
