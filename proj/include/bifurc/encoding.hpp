#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bifurc/errors.hpp"
#include "bifurc/ising.hpp"
#include "bifurc/matrix.hpp"

namespace bifurc {

inline constexpr int kMaxAlpha = 52;

// Non-negative integer allocation, one entry per asset.
class WeightVector {
 public:
  WeightVector() = default;
  WeightVector(std::initializer_list<std::int64_t> w) : WeightVector(std::vector<std::int64_t>(w)) {}
  explicit WeightVector(std::vector<std::int64_t> w) : w_(std::move(w)) {
    for (auto v : w_)
      if (v < 0) throw EncodingRangeError("weights must be non-negative");
  }

  std::size_t size() const noexcept { return w_.size(); }
  std::int64_t operator[](std::size_t i) const noexcept { return w_[i]; }
  const std::vector<std::int64_t>& values() const noexcept { return w_; }

  auto operator<=>(const WeightVector&) const = default;
  bool operator==(const WeightVector&) const = default;

 private:
  std::vector<std::int64_t> w_;
};

inline std::int64_t max_weight(int alpha) { return (std::int64_t{1} << alpha) - 1; }

inline void check_alpha(int alpha) {
  if (alpha < 1 || alpha > kMaxAlpha)
    throw DimensionError("bits per weight must be in [1, " + std::to_string(kMaxAlpha) + "], got " +
                         std::to_string(alpha));
}

// Binary-expansion matrix of shape (N*alpha) x N. Row k*alpha + v carries
// 2^v in column k (0-based), least significant bit first.
class EncodingMatrix {
 public:
  EncodingMatrix(std::size_t assets, int alpha) : assets_(assets), alpha_(alpha) {
    if (assets == 0) throw DimensionError("encoding needs at least one asset");
    check_alpha(alpha);
  }

  std::size_t assets() const noexcept { return assets_; }
  int alpha() const noexcept { return alpha_; }
  std::size_t rows() const noexcept { return assets_ * static_cast<std::size_t>(alpha_); }
  std::size_t cols() const noexcept { return assets_; }

  std::size_t asset_of(std::size_t row) const noexcept { return row / static_cast<std::size_t>(alpha_); }
  double bit_value(std::size_t row) const noexcept {
    return std::ldexp(1.0, static_cast<int>(row % static_cast<std::size_t>(alpha_)));
  }

  double operator()(std::size_t row, std::size_t col) const noexcept {
    return asset_of(row) == col ? bit_value(row) : 0.0;
  }

  Matrix dense() const {
    Matrix m(rows(), cols());
    for (std::size_t r = 0; r < rows(); ++r) m(r, asset_of(r)) = bit_value(r);
    return m;
  }

 private:
  std::size_t assets_;
  int alpha_;
};

inline EncodingMatrix build_encoding_matrix(std::size_t assets, int alpha) { return {assets, alpha}; }

// Bits per weight implied by a capital budget C spread over N assets.
inline int alpha_from_capital(double capital, std::size_t assets) {
  if (assets == 0) throw DimensionError("need at least one asset");
  if (!(capital >= static_cast<double>(assets)) || !std::isfinite(capital))
    throw ConfigError("capital must be at least the number of assets");
  const auto per_asset = static_cast<std::uint64_t>(std::floor(capital / static_cast<double>(assets)));
  return static_cast<int>(std::bit_width(per_asset));
}

inline SpinVector encode_weights(const WeightVector& w, int alpha) {
  check_alpha(alpha);
  const std::int64_t top = max_weight(alpha);
  SpinVector s(w.size() * static_cast<std::size_t>(alpha));
  for (std::size_t k = 0; k < w.size(); ++k) {
    if (w[k] > top)
      throw EncodingRangeError("weight " + std::to_string(w[k]) + " of asset " + std::to_string(k) +
                               " exceeds " + std::to_string(top));
    for (int v = 0; v < alpha; ++v)
      s.set(k * static_cast<std::size_t>(alpha) + static_cast<std::size_t>(v),
            ((w[k] >> v) & 1) != 0 ? 1 : -1);
  }
  return s;
}

// w = 1/2 M^T (s + U)
inline WeightVector decode_spins(const SpinVector& s, std::size_t assets, int alpha) {
  check_alpha(alpha);
  if (s.size() != assets * static_cast<std::size_t>(alpha))
    throw DimensionError("spin vector has " + std::to_string(s.size()) + " entries, expected " +
                         std::to_string(assets * static_cast<std::size_t>(alpha)));
  std::vector<std::int64_t> w(assets, 0);
  for (std::size_t r = 0; r < s.size(); ++r) {
    const std::int64_t bit = (s[r] + 1) / 2;
    w[r / static_cast<std::size_t>(alpha)] += bit << (r % static_cast<std::size_t>(alpha));
  }
  return WeightVector(std::move(w));
}

// Mean-variance problem over integer weights in [0, 2^alpha - 1]^N.
class MarkowitzProblem {
 public:
  MarkowitzProblem(Vector mu, Matrix sigma, double gamma, int alpha,
                   std::vector<std::string> tickers = {})
      : mu_(std::move(mu)), sigma_(std::move(sigma)), gamma_(gamma), alpha_(alpha),
        tickers_(std::move(tickers)) {
    if (mu_.empty()) throw DimensionError("problem needs at least one asset");
    if (!sigma_.square() || sigma_.rows() != mu_.size())
      throw DimensionError("covariance must be " + std::to_string(mu_.size()) + "x" +
                           std::to_string(mu_.size()));
    check_alpha(alpha_);
    if (!(gamma_ > 0.0) || !std::isfinite(gamma_))
      throw ModelError("risk aversion must be a positive finite number");
    for (double v : mu_)
      if (!std::isfinite(v)) throw ModelError("non-finite expected return");
    for (double v : sigma_.flat())
      if (!std::isfinite(v)) throw ModelError("non-finite covariance entry");
    if (sigma_.asymmetry() > kSymmetryTolerance) throw ModelError("covariance matrix is not symmetric");
    for (std::size_t i = 0; i < mu_.size(); ++i)
      if (sigma_(i, i) < 0.0) throw ModelError("covariance diagonal must be non-negative");
    if (!tickers_.empty() && tickers_.size() != mu_.size())
      throw DimensionError("ticker count does not match asset count");
  }

  std::size_t assets() const noexcept { return mu_.size(); }
  const Vector& mu() const noexcept { return mu_; }
  const Matrix& sigma() const noexcept { return sigma_; }
  double gamma() const noexcept { return gamma_; }
  int alpha() const noexcept { return alpha_; }
  std::size_t spins() const noexcept { return assets() * static_cast<std::size_t>(alpha_); }
  const std::vector<std::string>& tickers() const noexcept { return tickers_; }

  MarkowitzProblem with_alpha(int alpha) const { return {mu_, sigma_, gamma_, alpha, tickers_}; }
  MarkowitzProblem with_gamma(double gamma) const { return {mu_, sigma_, gamma, alpha_, tickers_}; }
  MarkowitzProblem with_mu(Vector mu) const { return {std::move(mu), sigma_, gamma_, alpha_, tickers_}; }

 private:
  Vector mu_;
  Matrix sigma_;
  double gamma_;
  int alpha_;
  std::vector<std::string> tickers_;
};

// Phi(w) = w.mu - gamma/2 w^T Sigma w
inline double utility(const MarkowitzProblem& p, const WeightVector& w) {
  if (w.size() != p.assets())
    throw DimensionError("weight vector has " + std::to_string(w.size()) + " entries, problem has " +
                         std::to_string(p.assets()));
  const std::size_t n = w.size();
  double lin = 0.0;
  double quad = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (w[i] == 0) continue;
    const double wi = static_cast<double>(w[i]);
    lin += wi * p.mu()[i];
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) acc += p.sigma()(i, j) * static_cast<double>(w[j]);
    quad += wi * acc;
  }
  return lin - 0.5 * p.gamma() * quad;
}

struct IsingReduction {
  IsingModel model;
  // f(U): utility(w(s)) = -(E(s)/2 + offset) for every s.
  double offset = 0.0;
};

// J = -(gamma/2) M Sigma M^T, h = (gamma/2) M Sigma M^T U - M mu.
// M has one power of two per row, so M Sigma M^T is formed exactly.
inline IsingReduction markowitz_to_ising(const MarkowitzProblem& p) {
  if (p.sigma().asymmetry() > kSymmetryTolerance) throw ModelError("covariance matrix is not symmetric");
  const EncodingMatrix M(p.assets(), p.alpha());
  const std::size_t n = M.rows();
  const double g = p.gamma();

  Matrix quad(n, n);  // M Sigma M^T
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      quad(a, b) = M.bit_value(a) * p.sigma()(M.asset_of(a), M.asset_of(b)) * M.bit_value(b);

  Matrix J(n, n);
  Vector h(n);
  double quad_total = 0.0;  // U^T M Sigma M^T U
  double lin_total = 0.0;   // U^T M mu
  for (std::size_t a = 0; a < n; ++a) {
    double row_sum = 0.0;
    for (std::size_t b = 0; b < n; ++b) {
      J(a, b) = -0.5 * g * quad(a, b);
      row_sum += quad(a, b);
    }
    const double m_mu = M.bit_value(a) * p.mu()[M.asset_of(a)];
    h[a] = 0.5 * g * row_sum - m_mu;
    quad_total += row_sum;
    lin_total += m_mu;
  }
  const double offset = g / 8.0 * quad_total - 0.5 * lin_total;
  return {IsingModel(std::move(J), std::move(h)), offset};
}

// Recovers (mu, Sigma) from an Ising model produced by markowitz_to_ising.
// Throws ModelError when the model lacks the binary-expansion structure.
inline MarkowitzProblem ising_to_markowitz(const IsingModel& model, double gamma, int alpha,
                                           std::vector<std::string> tickers = {}) {
  check_alpha(alpha);
  if (!(gamma > 0.0)) throw ModelError("risk aversion must be positive");
  const std::size_t n = model.size();
  const auto a = static_cast<std::size_t>(alpha);
  if (n % a != 0)
    throw DimensionError(std::to_string(n) + " spins is not a multiple of alpha=" + std::to_string(alpha));
  const std::size_t assets = n / a;

  Matrix sigma(assets, assets);
  for (std::size_t k = 0; k < assets; ++k)
    for (std::size_t l = 0; l < assets; ++l) sigma(k, l) = -2.0 / gamma * model.couplings()(k * a, l * a);
  for (std::size_t k = 0; k < assets; ++k)
    for (std::size_t l = k + 1; l < assets; ++l) sigma(k, l) = sigma(l, k) = 0.5 * (sigma(k, l) + sigma(l, k));

  Vector mu(assets);
  for (std::size_t k = 0; k < assets; ++k) {
    double row_sum = 0.0;
    for (std::size_t l = 0; l < assets; ++l) row_sum += sigma(k, l) * static_cast<double>(max_weight(alpha));
    mu[k] = 0.5 * gamma * row_sum - model.field()[k * a];
  }

  MarkowitzProblem p(std::move(mu), std::move(sigma), gamma, alpha, std::move(tickers));
  const IsingReduction back = markowitz_to_ising(p);
  const double tol = 1e-9 * (1.0 + model.energy_scale());
  for (std::size_t i = 0; i < n; ++i) {
    if (std::fabs(back.model.field()[i] - model.field()[i]) > tol)
      throw ModelError("field is not consistent with a mean-variance reduction");
    for (std::size_t j = 0; j < n; ++j)
      if (std::fabs(back.model.couplings()(i, j) - model.couplings()(i, j)) > tol)
        throw ModelError("couplings are not consistent with a mean-variance reduction");
  }
  return p;
}

struct WeightOptimum {
  WeightVector weights;
  double utility = 0.0;
};

// Exhaustive maximisation of the utility over the whole weight box,
// visiting weight vectors in lexicographic order (last asset fastest).
// Ties within rounding keep the first, i.e. lexicographically smallest, vector.
inline WeightOptimum brute_force_weights(const MarkowitzProblem& p, std::size_t ceiling = kDefaultOracleCeiling) {
  if (p.spins() > ceiling) throw InstanceTooLargeError(p.spins(), ceiling);
  const std::size_t n = p.assets();
  const std::int64_t top = max_weight(p.alpha());
  const Matrix& S = p.sigma();
  const double g = p.gamma();

  double scale = 0.0;
  for (double v : p.mu()) scale += std::fabs(v) * static_cast<double>(top);
  for (double v : S.flat()) scale += 0.5 * g * std::fabs(v) * static_cast<double>(top) * static_cast<double>(top);
  const double tol = 1e-12 * scale;

  std::vector<std::int64_t> w(n, 0);
  Vector sw(n, 0.0);  // Sigma w
  double u = 0.0;
  std::vector<std::int64_t> best = w;
  double best_u = 0.0;

  auto resync = [&] {
    u = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += S(i, j) * static_cast<double>(w[j]);
      sw[i] = acc;
      u += static_cast<double>(w[i]) * (p.mu()[i] - 0.5 * g * acc);
    }
  };
  auto change = [&](std::size_t k, std::int64_t delta) {
    const double d = static_cast<double>(delta);
    u += d * p.mu()[k] - 0.5 * g * (2.0 * d * sw[k] + d * d * S(k, k));
    for (std::size_t i = 0; i < n; ++i) sw[i] += S(i, k) * d;
    w[k] += delta;
  };

  for (std::uint64_t visited = 1;; ++visited) {
    std::size_t k = n;
    while (k > 0 && w[k - 1] == top) {
      change(k - 1, -top);
      --k;
    }
    if (k == 0) break;
    change(k - 1, 1);
    if ((visited & 0xfff) == 0) resync();
    if (u > best_u + tol) {
      best_u = u;
      best = w;
    }
  }
  WeightOptimum out{WeightVector(best), 0.0};
  out.utility = utility(p, out.weights);
  return out;
}

}  // namespace bifurc
