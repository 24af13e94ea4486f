#ifndef SDRN_LOSSES_HPP
#define SDRN_LOSSES_HPP

#include <charconv>
#include <cmath>
#include <limits>
#include <string>
#include <string_view>

#include "sdrn/error.hpp"

namespace sdrn {

enum class LossKind { quadratic, huber, quantile, logistic };

/// A convex Lipschitz loss rho(f, y).
struct LossSpec {
  LossKind kind = LossKind::quadratic;
  double delta = 1.0;  // huber
  double tau = 0.5;    // quantile

  static LossSpec quadratic() { return {}; }
  static LossSpec huber(double delta) {
    if (!(delta > 0.0)) throw DomainError("huber loss requires delta > 0");
    return {LossKind::huber, delta, 0.5};
  }
  static LossSpec quantile(double tau) {
    if (!(tau > 0.0 && tau < 1.0)) throw DomainError("quantile loss requires tau in (0, 1)");
    return {LossKind::quantile, 1.0, tau};
  }
  static LossSpec logistic() { return {LossKind::logistic, 1.0, 0.5}; }

  friend bool operator==(const LossSpec&, const LossSpec&) = default;
};

namespace detail {

inline void check_binary(double y) {
  if (y != 0.0 && y != 1.0)
    throw DomainError("logistic loss requires y in {0, 1}, got " + std::to_string(y));
}

// log(1 + e^f) without overflow.
inline double softplus(double f) noexcept { return f > 0.0 ? f + std::log1p(std::exp(-f)) : std::log1p(std::exp(f)); }

}  // namespace detail

inline double sigmoid(double f) noexcept {
  if (f >= 0.0) return 1.0 / (1.0 + std::exp(-f));
  const double e = std::exp(f);
  return e / (1.0 + e);
}

inline double loss_value(const LossSpec& spec, double f, double y) {
  const double r = y - f;
  switch (spec.kind) {
    case LossKind::quadratic:
      return r * r;
    case LossKind::huber:
      return std::abs(r) <= spec.delta ? 0.5 * r * r : spec.delta * std::abs(r) - 0.5 * spec.delta * spec.delta;
    case LossKind::quantile:
      return r * (spec.tau - (r <= 0.0 ? 1.0 : 0.0));
    case LossKind::logistic:
      detail::check_binary(y);
      return detail::softplus(f) - y * f;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

/// d rho / d f. At the quantile kink (y - f = 0) the indicator convention
/// 1{y - f <= 0} gives 1 - tau, i.e. the right derivative in f.
inline double loss_subgradient(const LossSpec& spec, double f, double y) {
  const double r = y - f;
  switch (spec.kind) {
    case LossKind::quadratic:
      return -2.0 * r;
    case LossKind::huber:
      return std::abs(r) <= spec.delta ? -r : (r > 0.0 ? -spec.delta : spec.delta);
    case LossKind::quantile:
      return r <= 0.0 ? 1.0 - spec.tau : -spec.tau;
    case LossKind::logistic:
      detail::check_binary(y);
      return sigmoid(f) - y;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

/// C_rho. For the quadratic loss this is 2M where M bounds |f - y|; pass it in.
inline double lipschitz_constant(const LossSpec& spec, double m_bound = 1.0) {
  switch (spec.kind) {
    case LossKind::quadratic:
      return 2.0 * m_bound;
    case LossKind::huber:
      return spec.delta;
    case LossKind::quantile:
      return 1.0;
    case LossKind::logistic:
      return 2.0;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

namespace detail {

inline double parse_loss_parameter(std::string_view text, std::string_view what) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || text.empty())
    throw DomainError("invalid " + std::string(what) + " parameter '" + std::string(text) + "'");
  return v;
}

inline std::string format_number(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace detail

/// Parses quadratic | huber:<delta> | quantile:<tau> | logistic.
inline LossSpec parse_loss(std::string_view text) {
  if (text == "quadratic") return LossSpec::quadratic();
  if (text == "logistic") return LossSpec::logistic();
  if (text.starts_with("huber:")) return LossSpec::huber(detail::parse_loss_parameter(text.substr(6), "huber"));
  if (text.starts_with("quantile:"))
    return LossSpec::quantile(detail::parse_loss_parameter(text.substr(9), "quantile"));
  throw DomainError("unknown loss '" + std::string(text) +
                    "' (expected quadratic, huber:<delta>, quantile:<tau> or logistic)");
}

inline std::string to_string(const LossSpec& spec) {
  switch (spec.kind) {
    case LossKind::quadratic:
      return "quadratic";
    case LossKind::huber:
      return "huber:" + detail::format_number(spec.delta);
    case LossKind::quantile:
      return "quantile:" + detail::format_number(spec.tau);
    case LossKind::logistic:
      return "logistic";
  }
  return "unknown";
}

}  // namespace sdrn

#endif  // SDRN_LOSSES_HPP
