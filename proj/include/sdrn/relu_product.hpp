#ifndef SDRN_RELU_PRODUCT_HPP
#define SDRN_RELU_PRODUCT_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sdrn/error.hpp"
#include "sdrn/sparse_grid.hpp"

namespace sdrn {

inline double relu(double x) noexcept { return x > 0.0 ? x : 0.0; }

/// Tooth function g(x) = 2x on [0, 1/2), 2(1 - x) on [1/2, 1].
inline double tooth(double x) noexcept { return x < 0.5 ? 2.0 * x : 2.0 * (1.0 - x); }

/// g_r = g o ... o g (r times): a sawtooth with 2^{r-1} teeth.
inline double tooth_iter(std::uint32_t r, double x) noexcept {
  for (std::uint32_t i = 0; i < r; ++i) x = tooth(x);
  return x;
}

/// f_R(x) = x - sum_{r=1}^R g_r(x) / 4^r, within 2^{-2R-2} of x^2 on [0, 1].
inline double square_approx(std::uint32_t R, double x) noexcept {
  double g = x;
  double scale = 1.0;
  double acc = x;
  for (std::uint32_t r = 1; r <= R; ++r) {
    g = tooth(g);
    scale *= 0.25;
    acc -= g * scale;
  }
  return acc;
}

inline double square_error_bound(std::uint32_t R) { return std::ldexp(1.0, -2 * static_cast<int>(R) - 2); }
inline double pair_error_bound(std::uint32_t R) { return 3.0 * square_error_bound(R); }
/// Bound for a q-factor tree product: 3 * 2^{-2R-2} * (q - 1).
inline double tree_error_bound(std::uint32_t R, std::size_t q) {
  return pair_error_bound(R) * static_cast<double>(q == 0 ? 0 : q - 1);
}

/// f~_R(x, y) = 2 { f_R((x+y)/2) - f_R(x)/4 - f_R(y)/4 }, inputs clamped to [0, 1].
inline double pair_product(std::uint32_t R, double x, double y) noexcept {
  x = std::clamp(x, 0.0, 1.0);
  y = std::clamp(y, 0.0, 1.0);
  return 2.0 * (square_approx(R, 0.5 * (x + y)) - 0.25 * (square_approx(R, x) + square_approx(R, y)));
}

/// Binary-tree product of values in [0, 1], evaluated in place. Adjacent
/// values are paired left to right, an unpaired last value is forwarded, and
/// every internal pair output is clamped to [0, 1]. `scratch` is overwritten.
inline double tree_product_inplace(std::uint32_t R, std::span<double> scratch) {
  std::size_t q = scratch.size();
  if (q == 0) throw DomainError("tree_product: empty factor list");
  while (q > 1) {
    const std::size_t half = q / 2;
    const bool final_level = q == 2;
    for (std::size_t k = 0; k < half; ++k) {
      const double v = pair_product(R, scratch[2 * k], scratch[2 * k + 1]);
      scratch[k] = final_level ? v : std::clamp(v, 0.0, 1.0);
    }
    if (q % 2 == 1) scratch[half] = scratch[q - 1];
    q = half + q % 2;
  }
  return scratch[0];
}

inline double tree_product(std::uint32_t R, std::span<const double> values) {
  std::vector<double> scratch(values.begin(), values.end());
  return tree_product_inplace(R, scratch);
}

inline std::size_t tree_levels(std::size_t q) {
  std::size_t levels = 0;
  while (q > 1) {
    q = q / 2 + q % 2;
    ++levels;
  }
  return levels;
}

/// phi~_{l,s}(x): tree product of the d hat-factor values.
inline double approx_basis_eval(std::uint32_t R, std::span<const std::uint32_t> levels,
                                std::span<const std::uint32_t> nodes, PointView x) {
  if (levels.size() != x.size() || nodes.size() != x.size())
    throw DimensionMismatch("approx_basis_eval: point has " + std::to_string(x.size()) + " coordinates, basis has " +
                            std::to_string(levels.size()));
  std::vector<double> factors(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) factors[j] = hat_eval(levels[j], nodes[j], x[j]);
  if (factors.size() == 1) return factors[0];
  return tree_product_inplace(R, factors);
}

inline double approx_basis_eval(std::uint32_t R, const BasisId& id, PointView x) {
  return approx_basis_eval(R, id.level.levels, id.node, x);
}

}  // namespace sdrn

#endif  // SDRN_RELU_PRODUCT_HPP
