#ifndef SDRN_SPARSE_GRID_HPP
#define SDRN_SPARSE_GRID_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sdrn/error.hpp"

namespace sdrn {

using Point = std::vector<double>;
using PointView = std::span<const double>;

/// Level vector l = (l_1, ..., l_d) of a tensor hat function.
struct LevelVector {
  std::vector<std::uint32_t> levels;

  std::size_t dimension() const noexcept { return levels.size(); }
  std::uint32_t sum() const noexcept {
    std::uint32_t s = 0;
    for (auto l : levels) s += l;
    return s;
  }
  friend bool operator==(const LevelVector&, const LevelVector&) = default;
};

/// (level, node) pair identifying phi_{l,s}(x) = prod_j phi_{l_j,s_j}(x_j).
struct BasisId {
  LevelVector level;
  std::vector<std::uint32_t> node;

  std::size_t dimension() const noexcept { return node.size(); }

  /// Grid point s * 2^{-l}, componentwise.
  Point grid_point() const {
    Point x(node.size());
    for (std::size_t j = 0; j < node.size(); ++j)
      x[j] = std::ldexp(static_cast<double>(node[j]), -static_cast<int>(level.levels[j]));
    return x;
  }

  bool valid() const noexcept {
    if (level.levels.size() != node.size() || node.empty()) return false;
    for (std::size_t j = 0; j < node.size(); ++j) {
      const auto l = level.levels[j];
      if (l == 0) {
        if (node[j] > 1) return false;
      } else if (l >= 32 || node[j] % 2 == 0 || node[j] >= (std::uint64_t{1} << l)) {
        return false;
      }
    }
    return true;
  }
  friend bool operator==(const BasisId&, const BasisId&) = default;
};

/// I_l: {0, 1} at level 0, the odd integers in [1, 2^l - 1] otherwise.
inline std::vector<std::uint32_t> index_set(std::uint32_t level) {
  if (level == 0) return {0, 1};
  if (level >= 32) throw DomainError("index_set: level must be < 32");
  std::vector<std::uint32_t> out;
  out.reserve(std::size_t{1} << (level - 1));
  for (std::uint64_t s = 1; s < (std::uint64_t{1} << level); s += 2)
    out.push_back(static_cast<std::uint32_t>(s));
  return out;
}

inline std::uint64_t index_set_size(std::uint32_t level) {
  return level == 0 ? 2 : (std::uint64_t{1} << (level - 1));
}

inline constexpr std::uint64_t kDefaultBasisCap = 10'000'000;

/// |V_m^(1)| by dynamic programming over dimensions, without enumerating.
/// Saturates at UINT64_MAX.
inline std::uint64_t basis_size(std::size_t d, std::uint32_t m) {
  if (d == 0) throw DomainError("basis_size: dimension must be >= 1");
  const auto sat_add = [](std::uint64_t a, std::uint64_t b) {
    return a > UINT64_MAX - b ? UINT64_MAX : a + b;
  };
  const auto sat_mul = [](std::uint64_t a, std::uint64_t b) {
    if (a == 0 || b == 0) return std::uint64_t{0};
    return a > UINT64_MAX / b ? UINT64_MAX : a * b;
  };
  // ways[k] = weighted count of level prefixes with sum k
  std::vector<std::uint64_t> ways(m + 1, 0);
  ways[0] = 1;
  for (std::size_t j = 0; j < d; ++j) {
    std::vector<std::uint64_t> next(m + 1, 0);
    for (std::uint32_t k = 0; k <= m; ++k) {
      if (ways[k] == 0) continue;
      for (std::uint32_t l = 0; k + l <= m; ++l)
        next[k + l] = sat_add(next[k + l], sat_mul(ways[k], index_set_size(l)));
    }
    ways = std::move(next);
  }
  std::uint64_t total = 0;
  for (auto w : ways) total = sat_add(total, w);
  return total;
}

/// The family {phi_{l,s} : s in I_l, |l|_1 <= m}, ordered lexicographically in
/// (|l|_1, l, s). Levels and nodes are stored row-major, one row of d entries
/// per basis function.
class SparseGridBasis {
 public:
  SparseGridBasis() = default;

  std::size_t dimension() const noexcept { return dimension_; }
  std::uint32_t max_level_sum() const noexcept { return max_level_sum_; }
  std::size_t size() const noexcept { return dimension_ == 0 ? 0 : levels_.size() / dimension_; }

  std::span<const std::uint32_t> levels(std::size_t i) const {
    return {levels_.data() + i * dimension_, dimension_};
  }
  std::span<const std::uint32_t> nodes(std::size_t i) const {
    return {nodes_.data() + i * dimension_, dimension_};
  }
  BasisId id(std::size_t i) const {
    auto l = levels(i);
    auto s = nodes(i);
    return BasisId{LevelVector{{l.begin(), l.end()}}, {s.begin(), s.end()}};
  }
  friend SparseGridBasis enumerate_basis(std::size_t, std::uint32_t, std::uint64_t);

 private:
  std::size_t dimension_ = 0;
  std::uint32_t max_level_sum_ = 0;
  std::vector<std::uint32_t> levels_;
  std::vector<std::uint32_t> nodes_;
};

namespace detail {

// Level vectors with |l|_1 == total, ascending lexicographic order.
inline void level_vectors_with_sum(std::size_t d, std::uint32_t total, std::vector<std::uint32_t>& prefix,
                                   const std::function<void(const std::vector<std::uint32_t>&)>& emit) {
  if (prefix.size() + 1 == d) {
    prefix.push_back(total);
    emit(prefix);
    prefix.pop_back();
    return;
  }
  for (std::uint32_t first = 0; first <= total; ++first) {
    prefix.push_back(first);
    level_vectors_with_sum(d, total - first, prefix, emit);
    prefix.pop_back();
  }
}

}  // namespace detail

inline SparseGridBasis enumerate_basis(std::size_t d, std::uint32_t m,
                                       std::uint64_t cap = kDefaultBasisCap) {
  if (d == 0) throw DomainError("enumerate_basis: dimension must be >= 1");
  if (m >= 32) throw DomainError("enumerate_basis: m must be < 32");
  const auto count = basis_size(d, m);
  if (count > cap)
    throw CapExceeded("enumerate_basis: " + std::to_string(count) + " basis functions exceed the cap of " +
                      std::to_string(cap));

  SparseGridBasis basis;
  basis.dimension_ = d;
  basis.max_level_sum_ = m;
  basis.levels_.reserve(count * d);
  basis.nodes_.reserve(count * d);

  std::vector<std::uint32_t> prefix;
  std::vector<std::uint32_t> node(d);
  for (std::uint32_t k = 0; k <= m; ++k) {
    detail::level_vectors_with_sum(d, k, prefix, [&](const std::vector<std::uint32_t>& level) {
      // odometer over I_{l_1} x ... x I_{l_d}, last coordinate fastest
      for (std::size_t j = 0; j < d; ++j) node[j] = level[j] == 0 ? 0 : 1;
      while (true) {
        basis.levels_.insert(basis.levels_.end(), level.begin(), level.end());
        basis.nodes_.insert(basis.nodes_.end(), node.begin(), node.end());
        std::size_t j = d;
        while (j > 0) {
          --j;
          const std::uint32_t step = level[j] == 0 ? 1 : 2;
          const std::uint64_t limit = level[j] == 0 ? 1 : (std::uint64_t{1} << level[j]) - 1;
          if (node[j] + step <= limit) {
            node[j] += step;
            break;
          }
          node[j] = level[j] == 0 ? 0 : 1;
          if (j == 0) return;
        }
      }
    });
  }
  return basis;
}

/// Closed-form lower and upper bounds on |V_m^(1)| (multivariate case).
struct CardinalityBounds {
  double lower;
  double upper;
};

inline CardinalityBounds cardinality_bounds(std::size_t d, std::uint32_t m) {
  if (d < 2) throw DomainError("cardinality_bounds: requires d >= 2");
  const double dd = static_cast<double>(d);
  const double mm = static_cast<double>(m);
  const double lower = std::ldexp(std::ldexp(1.0, static_cast<int>(m)) + 1.0, static_cast<int>(d) - 1);
  const double upper = 2.0 * std::sqrt(2.0 / std::numbers::pi) * std::sqrt(dd - 1.0) / (mm + dd) *
                       std::ldexp(1.0, static_cast<int>(m)) *
                       std::pow(4.0 * std::numbers::e * (mm + dd) / (dd - 1.0), dd - 1.0);
  return {lower, upper};
}

/// phi_{l,s}(x) = max(0, 1 - |x 2^l - s|). Off the unit interval the same
/// formula applies, so points outside the support evaluate to 0.
inline double hat_eval(std::uint32_t level, std::uint32_t node, double x) noexcept {
  const double t = std::ldexp(x, static_cast<int>(level)) - static_cast<double>(node);
  return std::max(0.0, 1.0 - std::abs(t));
}

inline double tensor_hat_eval(std::span<const std::uint32_t> levels, std::span<const std::uint32_t> nodes,
                              PointView x) {
  if (levels.size() != x.size() || nodes.size() != x.size())
    throw DimensionMismatch("tensor_hat_eval: point has " + std::to_string(x.size()) + " coordinates, basis has " +
                            std::to_string(levels.size()));
  double v = 1.0;
  for (std::size_t j = 0; j < x.size() && v != 0.0; ++j) v *= hat_eval(levels[j], nodes[j], x[j]);
  return v;
}

inline double tensor_hat_eval(const BasisId& id, PointView x) {
  return tensor_hat_eval(id.level.levels, id.node, x);
}

// ---------------------------------------------------------------------------
// Hierarchical coefficients
// ---------------------------------------------------------------------------

struct GaussRule {
  std::vector<double> nodes;    // on [-1, 1]
  std::vector<double> weights;
};

/// Gauss-Legendre nodes and weights by Newton iteration on P_n. Cached per order.
inline const GaussRule& gauss_legendre(std::size_t order) {
  static std::mutex mutex;
  static std::map<std::size_t, GaussRule> cache;
  std::lock_guard lock(mutex);
  if (auto it = cache.find(order); it != cache.end()) return it->second;
  if (order == 0) throw DomainError("gauss_legendre: order must be >= 1");

  GaussRule rule;
  if (order == 1) {
    rule.nodes = {0.0};
    rule.weights = {2.0};
    return cache.emplace(order, std::move(rule)).first->second;
  }
  rule.nodes.resize(order);
  rule.weights.resize(order);
  const double n = static_cast<double>(order);
  // returns (P_n(x), P_n'(x))
  const auto legendre = [order, n](double x) {
    double p0 = 1.0, p1 = x;
    for (std::size_t k = 2; k <= order; ++k) {
      const double kk = static_cast<double>(k);
      const double p2 = ((2.0 * kk - 1.0) * x * p1 - (kk - 1.0) * p0) / kk;
      p0 = p1;
      p1 = p2;
    }
    return std::pair{p1, n * (x * p1 - p0) / (x * x - 1.0)};
  };
  for (std::size_t i = 0; i < (order + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (n + 0.5));
    for (int iter = 0; iter < 100; ++iter) {
      const auto [p, dp] = legendre(x);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double dp = legendre(x).second;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[order - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[order - 1 - i] = w;
  }
  return cache.emplace(order, std::move(rule)).first->second;
}

/// Mixed second derivative D^2 f = d^{2d} f / (dx_1^2 ... dx_d^2).
using MixedSecondDerivative = std::function<double(PointView)>;
using ScalarField = std::function<double(PointView)>;

struct QuadratureOptions {
  std::size_t order = 8;
  /// Results at `order` and `order + 1` must agree to within this (absolute,
  /// scaled by max(1, |value|)); otherwise NonConvergence is thrown.
  double tolerance = 1e-9;
  bool check_convergence = true;
};

namespace detail {

// Integral over the product support of prod_j(-2^{-(l_j+1)} phi_{l_j,s_j}) * D2f,
// using `order` Gauss points on every linear piece of every hat.
inline double surplus_integral(const MixedSecondDerivative& d2f, const BasisId& id, std::size_t order) {
  const auto& rule = gauss_legendre(order);
  const std::size_t d = id.dimension();

  // 1-D quadrature points and weights (hat value and factor folded in)
  std::vector<std::vector<double>> pts(d), wts(d);
  for (std::size_t j = 0; j < d; ++j) {
    const auto l = id.level.levels[j];
    const auto s = id.node[j];
    const double h = std::ldexp(1.0, -static_cast<int>(l));
    const double centre = s * h;
    const double factor = -std::ldexp(1.0, -static_cast<int>(l) - 1);
    for (const auto& [a0, b0] : {std::pair{centre - h, centre}, std::pair{centre, centre + h}}) {
      const double a = std::max(a0, 0.0);
      const double b = std::min(b0, 1.0);
      if (b <= a) continue;
      const double half = 0.5 * (b - a);
      const double mid = 0.5 * (a + b);
      for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
        const double x = mid + half * rule.nodes[q];
        pts[j].push_back(x);
        wts[j].push_back(half * rule.weights[q] * factor * hat_eval(l, s, x));
      }
    }
  }

  Point x(d);
  std::vector<std::size_t> idx(d, 0);
  double total = 0.0;
  while (true) {
    double w = 1.0;
    for (std::size_t j = 0; j < d; ++j) {
      x[j] = pts[j][idx[j]];
      w *= wts[j][idx[j]];
    }
    total += w * d2f(x);
    std::size_t j = d;
    bool done = true;
    while (j > 0) {
      --j;
      if (++idx[j] < pts[j].size()) {
        done = false;
        break;
      }
      idx[j] = 0;
    }
    if (done) break;
  }
  return total;
}

}  // namespace detail

/// Hierarchical coefficient from the integral representation against D^2 f.
/// The representation holds for functions vanishing on the boundary, i.e.
/// it is exact for ids with every l_j >= 1 once f's boundary part is removed.
inline double hierarchical_coefficient(const MixedSecondDerivative& d2f, const BasisId& id,
                                       const QuadratureOptions& opts = {}) {
  if (!id.valid()) throw DomainError("hierarchical_coefficient: invalid basis id");
  if (opts.order < 2) throw DomainError("hierarchical_coefficient: quadrature order must be >= 2");
  const double value = detail::surplus_integral(d2f, id, opts.order);
  if (opts.check_convergence) {
    const double refined = detail::surplus_integral(d2f, id, opts.order + 1);
    if (std::abs(refined - value) > opts.tolerance * std::max(1.0, std::abs(value)))
      throw NonConvergence("hierarchical_coefficient: orders " + std::to_string(opts.order) + " and " +
                           std::to_string(opts.order + 1) + " differ by " + std::to_string(std::abs(refined - value)));
  }
  return value;
}

/// Hierarchical surplus by the nodal stencil: [-1/2, 1, -1/2] at (x-h, x, x+h)
/// in every coordinate with l_j >= 1, plain nodal value where l_j = 0.
inline double surplus_oracle(const ScalarField& f, const BasisId& id) {
  const std::size_t d = id.dimension();
  std::vector<std::size_t> active;
  Point centre = id.grid_point();
  for (std::size_t j = 0; j < d; ++j)
    if (id.level.levels[j] >= 1) active.push_back(j);

  Point x = centre;
  double total = 0.0;
  std::vector<int> offset(active.size(), -1);
  while (true) {
    double w = 1.0;
    for (std::size_t a = 0; a < active.size(); ++a) {
      const auto j = active[a];
      const double h = std::ldexp(1.0, -static_cast<int>(id.level.levels[j]));
      x[j] = centre[j] + offset[a] * h;
      w *= offset[a] == 0 ? 1.0 : -0.5;
    }
    total += w * f(x);
    std::size_t a = active.size();
    bool done = true;
    while (a > 0) {
      --a;
      if (offset[a] < 1) {
        ++offset[a];
        done = false;
        break;
      }
      offset[a] = -1;
    }
    if (done) break;
  }
  return total;
}

/// Basis plus aligned hierarchical coefficients.
struct SurplusSet {
  SparseGridBasis basis;
  std::vector<double> coefficients;
};

/// Sparse-grid interpolant f_m = sum_{|l|_1 <= m} sum_s gamma_{l,s} phi_{l,s}.
class Interpolant {
 public:
  explicit Interpolant(SurplusSet surpluses) : set_(std::move(surpluses)) {}

  double operator()(PointView x) const {
    const std::size_t d = set_.basis.dimension();
    if (x.size() != d) throw DimensionMismatch("Interpolant: wrong point dimension");
    double total = 0.0;
    for (std::size_t i = 0; i < set_.basis.size(); ++i) {
      if (set_.coefficients[i] == 0.0) continue;
      const auto l = set_.basis.levels(i);
      const auto s = set_.basis.nodes(i);
      double v = 1.0;
      for (std::size_t j = 0; j < d && v != 0.0; ++j) v *= hat_eval(l[j], s[j], x[j]);
      total += set_.coefficients[i] * v;
    }
    return total;
  }

  const SurplusSet& surpluses() const noexcept { return set_; }

 private:
  SurplusSet set_;
};

inline Interpolant interpolate(const ScalarField& f, std::size_t d, std::uint32_t m,
                               std::uint64_t cap = kDefaultBasisCap) {
  SurplusSet set{enumerate_basis(d, m, cap), {}};
  set.coefficients.resize(set.basis.size());
  for (std::size_t i = 0; i < set.basis.size(); ++i) set.coefficients[i] = surplus_oracle(f, set.basis.id(i));
  return Interpolant(std::move(set));
}

/// |gamma_{l,s}| <= 6^{-d/2} 2^{-(3/2)|l|_1} ||D^2 f||_{L2}.
inline double surplus_magnitude_bound(std::size_t d, std::uint32_t level_sum, double norm_d2f) {
  return std::pow(6.0, -0.5 * static_cast<double>(d)) * std::pow(2.0, -1.5 * level_sum) * norm_d2f;
}

/// Bound on ||f_m - f||_2 for d >= 2 (uniform-density constant c_mu).
inline double approximation_bound(std::size_t d, std::uint32_t m, double norm_d2f, double c_mu) {
  if (d < 2) throw DomainError("approximation_bound: requires d >= 2");
  if (norm_d2f < 0.0 || c_mu <= 0.0) throw DomainError("approximation_bound: need norm >= 0 and c_mu > 0");
  const double decay = std::ldexp(1.0, -2 * static_cast<int>(m));
  const double mm = static_cast<double>(m);
  if (d == 2) return c_mu / 18.0 * decay * (mm + 3.0) * norm_d2f;
  const double dd = static_cast<double>(d);
  const double c_tilde = 0.5 * c_mu / (3.0 * std::sqrt(2.0 * std::numbers::pi) * std::numbers::e);
  return c_tilde * decay * std::sqrt(dd - 2.0) * std::pow(std::numbers::e / 3.0 * (mm + dd) / (dd - 2.0), dd - 1.0) *
         norm_d2f;
}

/// Bound on ||f~_R - f||_2 for the network approximator: ReLU product error
/// plus sparse-grid truncation error (d = 2 uses the 9^{-1} constant).
inline double network_approximation_bound(std::size_t d, std::uint32_t m, std::uint32_t R, double norm_d2f,
                                          double c_mu) {
  if (d < 2) throw DomainError("network_approximation_bound: requires d >= 2");
  if (norm_d2f < 0.0 || c_mu <= 0.0) throw DomainError("network_approximation_bound: need norm >= 0 and c_mu > 0");
  const double dd = static_cast<double>(d);
  const double relu = std::sqrt(3.0 / 8.0) * std::ldexp(1.0, -2 * static_cast<int>(R)) * (dd - 1.0) *
                      std::pow(std::sqrt(2.0 / 3.0), dd - 1.0) * norm_d2f;
  if (d == 2) {
    const double grid = c_mu / 9.0 * std::ldexp(1.0, -2 * static_cast<int>(m)) * (m + 3.0) * norm_d2f;
    return relu + grid;
  }
  return relu + approximation_bound(d, m, norm_d2f, c_mu);
}

}  // namespace sdrn

#endif  // SDRN_SPARSE_GRID_HPP
