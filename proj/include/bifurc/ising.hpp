#pragma once

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "bifurc/errors.hpp"
#include "bifurc/matrix.hpp"

namespace bifurc {

inline constexpr double kSymmetryTolerance = 1e-9;
inline constexpr std::size_t kDefaultOracleCeiling = 26;

// A configuration of n two-state spins. Entries are exactly -1 or +1.
class SpinVector {
 public:
  SpinVector() = default;
  explicit SpinVector(std::size_t n, int fill = -1) : s_(n, static_cast<std::int8_t>(fill)) {
    if (fill != -1 && fill != 1) throw DimensionError("spin fill must be -1 or +1");
  }
  SpinVector(std::initializer_list<int> values) : SpinVector(std::vector<int>(values)) {}
  explicit SpinVector(const std::vector<int>& values) {
    s_.reserve(values.size());
    for (int v : values) {
      if (v != -1 && v != 1) throw DimensionError("spin entries must be -1 or +1");
      s_.push_back(static_cast<std::int8_t>(v));
    }
  }

  std::size_t size() const noexcept { return s_.size(); }
  int operator[](std::size_t i) const noexcept { return s_[i]; }
  void set(std::size_t i, int v) {
    if (v != -1 && v != 1) throw DimensionError("spin entries must be -1 or +1");
    s_[i] = static_cast<std::int8_t>(v);
  }
  void flip(std::size_t i) noexcept { s_[i] = static_cast<std::int8_t>(-s_[i]); }

  SpinVector negated() const {
    SpinVector out = *this;
    for (auto& v : out.s_) v = static_cast<std::int8_t>(-v);
    return out;
  }

  std::vector<int> values() const { return {s_.begin(), s_.end()}; }

  // Lexicographic under -1 < +1.
  auto operator<=>(const SpinVector&) const = default;
  bool operator==(const SpinVector&) const = default;

 private:
  std::vector<std::int8_t> s_;
};

// E(s) = -1/2 s^T J s + s^T h over a dense coupling matrix.
class IsingModel {
 public:
  IsingModel() = default;
  IsingModel(Matrix couplings, Vector field) : J_(std::move(couplings)), h_(std::move(field)) {
    if (!J_.square()) throw DimensionError("coupling matrix must be square");
    if (J_.rows() != h_.size())
      throw DimensionError("field length " + std::to_string(h_.size()) +
                           " does not match coupling side " + std::to_string(J_.rows()));
    if (h_.empty()) throw DimensionError("Ising model needs at least one spin");
    for (double v : J_.flat())
      if (!std::isfinite(v)) throw ModelError("non-finite coupling");
    for (double v : h_)
      if (!std::isfinite(v)) throw ModelError("non-finite field");
    symmetric_ = J_.asymmetry() <= kSymmetryTolerance;
  }

  std::size_t size() const noexcept { return h_.size(); }
  const Matrix& couplings() const noexcept { return J_; }
  const Vector& field() const noexcept { return h_; }
  bool symmetric() const noexcept { return symmetric_; }

  IsingModel with_field(Vector field) const { return {J_, std::move(field)}; }

  // Upper bound on |E| over all configurations.
  double energy_scale() const noexcept {
    double s = 0.0;
    for (double v : J_.flat()) s += std::fabs(v);
    s *= 0.5;
    for (double v : h_) s += std::fabs(v);
    return s;
  }

 private:
  Matrix J_;
  Vector h_;
  bool symmetric_ = true;
};

namespace detail {

// Shared by spin vectors and raw sign samples (which may contain zeros).
template <typename Value>
double ising_energy(const IsingModel& model, std::span<const Value> s) {
  const Matrix& J = model.couplings();
  const Vector& h = model.field();
  double quad = 0.0;
  double lin = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == 0) continue;
    const double* r = J.row(i).data();
    double acc = 0.0;
    for (std::size_t j = 0; j < s.size(); ++j) acc += r[j] * static_cast<double>(s[j]);
    quad += static_cast<double>(s[i]) * acc;
    lin += static_cast<double>(s[i]) * h[i];
  }
  return -0.5 * quad + lin;
}

}  // namespace detail

inline double energy(const IsingModel& model, const SpinVector& s) {
  if (s.size() != model.size())
    throw DimensionError("spin vector has " + std::to_string(s.size()) + " entries, model has " +
                         std::to_string(model.size()));
  const std::vector<int> v = s.values();
  return detail::ising_energy<int>(model, v);
}

// Energy of a sign sample whose entries are in {-1, 0, +1}.
inline double sign_energy(const IsingModel& model, std::span<const int> signs) {
  if (signs.size() != model.size()) throw DimensionError("sign sample size mismatch");
  return detail::ising_energy<int>(model, signs);
}

struct GroundState {
  SpinVector spins;
  double energy = 0.0;
};

// Every configuration within the tie tolerance of the minimum, sorted
// lexicographically, truncated to OracleOptions::max_states.
struct GroundStates {
  std::vector<SpinVector> states;
  double energy = 0.0;
  bool truncated = false;
};

struct OracleOptions {
  std::size_t ceiling = kDefaultOracleCeiling;
  unsigned threads = 0;  // 0: hardware concurrency
  std::size_t max_states = 64;
};

// Ceiling override read from BIFURC_ORACLE_CEILING; falls back to the default.
inline std::size_t oracle_ceiling_from_env() {
  const char* raw = std::getenv("BIFURC_ORACLE_CEILING");
  if (raw == nullptr || *raw == '\0') return kDefaultOracleCeiling;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(raw, &end, 10);
  if (end == raw || *end != '\0' || v == 0 || v > 62)
    throw ConfigError(std::string("invalid BIFURC_ORACLE_CEILING: ") + raw);
  return static_cast<std::size_t>(v);
}

namespace detail {

struct Candidate {
  double energy;
  std::vector<std::int8_t> spins;
};

// Near-minimal configurations seen so far. Energies within `tol` of the best
// are ties; ties are kept in lexicographic order up to `cap` entries.
class TieSet {
 public:
  TieSet(double tol, std::size_t cap) : tol_(tol), cap_(cap) {}

  bool empty() const noexcept { return items_.empty(); }
  double best() const noexcept { return best_; }
  bool truncated() const noexcept { return truncated_; }
  const std::vector<Candidate>& items() const noexcept { return items_; }

  // Cheap pre-filter so the hot loop only copies spins for real contenders.
  bool admits(double e) const noexcept { return items_.empty() || e <= best_ + tol_; }

  void offer(double e, std::span<const std::int8_t> s) {
    if (items_.empty() || e < best_ - tol_) {
      items_.clear();
      truncated_ = false;
      items_.push_back({e, {s.begin(), s.end()}});
      best_ = e;
      return;
    }
    if (e > best_ + tol_) return;
    if (e < best_) {
      best_ = e;
      std::erase_if(items_, [&](const Candidate& c) { return c.energy > best_ + tol_; });
    }
    auto pos = std::lower_bound(items_.begin(), items_.end(), s, [](const Candidate& c, auto key) {
      return std::lexicographical_compare(c.spins.begin(), c.spins.end(), key.begin(), key.end());
    });
    if (items_.size() >= cap_) {
      truncated_ = true;
      if (pos == items_.end()) return;
      items_.pop_back();
    }
    items_.insert(pos, Candidate{e, {s.begin(), s.end()}});
  }

  void merge(const TieSet& other) {
    for (const auto& c : other.items_) offer(c.energy, c.spins);
    if (other.truncated_ && !other.items_.empty() && other.best_ <= best_ + tol_) truncated_ = true;
  }

 private:
  double tol_;
  std::size_t cap_;
  double best_ = std::numeric_limits<double>::infinity();
  bool truncated_ = false;
  std::vector<Candidate> items_;
};

inline constexpr std::size_t kGrayBlockBits = 12;

// Scans the 2^low configurations sharing the high-bit prefix `block`.
// Spin i <-> bit (n-1-i) of the configuration index; bit 1 means +1, so
// increasing index order is lexicographic order. Local fields are rebuilt
// exactly at the start of every block, which bounds incremental drift.
inline TieSet scan_block(const Matrix& sym, const Vector& diag, const Vector& h,
                         std::uint64_t block, std::size_t low, double tol, std::size_t cap) {
  const std::size_t n = h.size();
  const std::size_t high = n - low;
  std::vector<std::int8_t> s(n, -1);
  for (std::size_t i = 0; i < high; ++i)
    if ((block >> (high - 1 - i)) & 1u) s[i] = 1;

  // g_i = sum_{j != i} (J_ij + J_ji) s_j ; E = -1/4 s.g - 1/2 sum J_ii + s.h
  Vector g(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double* r = sym.row(i).data();
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) acc += r[j] * s[j];
    g[i] = acc;
  }
  double e = 0.0;
  for (std::size_t i = 0; i < n; ++i) e += -0.25 * s[i] * g[i] - 0.5 * diag[i] + s[i] * h[i];

  TieSet ties(tol, cap);
  ties.offer(e, s);
  const std::uint64_t count = std::uint64_t{1} << low;
  for (std::uint64_t k = 1; k < count; ++k) {
    const std::size_t idx = n - 1 - static_cast<std::size_t>(std::countr_zero(k));
    const double si = s[idx];
    e += si * g[idx] - 2.0 * h[idx] * si;
    s[idx] = static_cast<std::int8_t>(-s[idx]);
    const double* col = sym.row(idx).data();
    const double d = -2.0 * si;
    for (std::size_t j = 0; j < n; ++j) g[j] += col[j] * d;
    if (ties.admits(e)) ties.offer(e, s);
  }
  return ties;
}

}  // namespace detail

// Exhaustive minimisation over all 2^n configurations, Gray-code ordered with
// O(n) incremental updates. Blocks are reduced in index order, so the result
// does not depend on the thread count.
inline GroundStates brute_force_ground_states(const IsingModel& model, OracleOptions opts = {}) {
  const std::size_t n = model.size();
  if (n > opts.ceiling) throw InstanceTooLargeError(n, opts.ceiling);
  if (opts.max_states == 0) opts.max_states = 1;

  const Matrix& J = model.couplings();
  Matrix sym(n, n);
  Vector diag(n);
  for (std::size_t i = 0; i < n; ++i) {
    diag[i] = J(i, i);
    for (std::size_t j = 0; j < n; ++j) sym(i, j) = i == j ? 0.0 : J(i, j) + J(j, i);
  }
  const double tol = 1e-11 * model.energy_scale();

  const std::size_t low = std::min(n, detail::kGrayBlockBits);
  const std::uint64_t blocks = std::uint64_t{1} << (n - low);
  std::vector<detail::TieSet> partial(blocks, detail::TieSet(tol, opts.max_states));

  unsigned workers = opts.threads != 0 ? opts.threads : std::thread::hardware_concurrency();
  workers = static_cast<unsigned>(std::clamp<std::uint64_t>(workers, 1, blocks));
  std::atomic<std::uint64_t> next{0};
  auto work = [&] {
    for (std::uint64_t b = next++; b < blocks; b = next++)
      partial[b] = detail::scan_block(sym, diag, model.field(), b, low, tol, opts.max_states);
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned t = 0; t < workers; ++t) pool.emplace_back(work);
  }

  detail::TieSet total(tol, opts.max_states);
  for (const auto& p : partial) total.merge(p);

  GroundStates out;
  out.truncated = total.truncated();
  out.energy = std::numeric_limits<double>::infinity();
  for (const auto& c : total.items()) {
    SpinVector s(std::vector<int>(c.spins.begin(), c.spins.end()));
    out.energy = std::min(out.energy, energy(model, s));
    out.states.push_back(std::move(s));
  }
  return out;
}

// Global minimum; ties resolve to the lexicographically smallest spins.
inline GroundState brute_force_ground_state(const IsingModel& model, OracleOptions opts = {}) {
  opts.max_states = 1;
  GroundStates all = brute_force_ground_states(model, opts);
  GroundState gs{std::move(all.states.front()), 0.0};
  gs.energy = energy(model, gs.spins);
  return gs;
}

}  // namespace bifurc
