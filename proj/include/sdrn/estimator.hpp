#ifndef SDRN_ESTIMATOR_HPP
#define SDRN_ESTIMATOR_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "sdrn/error.hpp"
#include "sdrn/losses.hpp"
#include "sdrn/parallel.hpp"
#include "sdrn/random.hpp"
#include "sdrn/relu_product.hpp"
#include "sdrn/sparse_grid.hpp"

namespace sdrn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// ---------------------------------------------------------------------------
// Hyperparameter schedule
// ---------------------------------------------------------------------------

struct GridLevels {
  std::uint32_t m = 0;
  std::uint32_t R = 1;
  friend bool operator==(const GridLevels&, const GridLevels&) = default;
};

/// m = max(floor(0.2 log2 n) + c, 0), R = 3 max(floor(0.2 log2 n), m).
inline GridLevels hyperparams_from_n(std::size_t n, int c) {
  if (n < 2) throw DomainError("hyperparams_from_n: need n >= 2");
  const int base = static_cast<int>(std::floor(0.2 * std::log2(static_cast<double>(n))));
  const int m = std::max(base + c, 0);
  const int R = 3 * std::max(base, m);
  return {static_cast<std::uint32_t>(m), static_cast<std::uint32_t>(std::max(R, 1))};
}

// ---------------------------------------------------------------------------
// Covariate scaling
// ---------------------------------------------------------------------------

/// Per-column min-max map onto [0, 1]; transformed values are clamped.
class MinMaxScaler {
 public:
  MinMaxScaler() = default;
  MinMaxScaler(std::vector<double> min, std::vector<double> max) : min_(std::move(min)), max_(std::move(max)) {
    if (min_.size() != max_.size()) throw DimensionMismatch("MinMaxScaler: min/max length mismatch");
  }

  /// Unit-cube identity scaler for data already in [0, 1]^d.
  static MinMaxScaler unit(std::size_t d) { return {std::vector<double>(d, 0.0), std::vector<double>(d, 1.0)}; }

  static MinMaxScaler fit(const Matrix& X, const std::vector<std::string>& names = {}) {
    if (X.rows() < 2) throw DataError("scale_covariates: need at least 2 rows");
    std::vector<double> lo(X.cols()), hi(X.cols());
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
      lo[j] = X.col(j).minCoeff();
      hi[j] = X.col(j).maxCoeff();
      if (!(hi[j] > lo[j])) {
        const std::string name =
            static_cast<std::size_t>(j) < names.size() ? names[j] : "column " + std::to_string(j);
        throw ConstantColumnError(name);
      }
    }
    return {std::move(lo), std::move(hi)};
  }

  std::size_t dimension() const noexcept { return min_.size(); }
  const std::vector<double>& min() const noexcept { return min_; }
  const std::vector<double>& max() const noexcept { return max_; }

  double transform(std::size_t j, double v) const noexcept {
    return std::clamp((v - min_[j]) / (max_[j] - min_[j]), 0.0, 1.0);
  }

  Matrix transform(const Matrix& X) const {
    if (static_cast<std::size_t>(X.cols()) != dimension())
      throw DimensionMismatch("MinMaxScaler: expected " + std::to_string(dimension()) + " columns, got " +
                              std::to_string(X.cols()));
    Matrix out(X.rows(), X.cols());
    for (Eigen::Index j = 0; j < X.cols(); ++j)
      for (Eigen::Index i = 0; i < X.rows(); ++i) out(i, j) = transform(j, X(i, j));
    return out;
  }

 private:
  std::vector<double> min_, max_;
};

struct ScaledCovariates {
  Matrix scaled;
  MinMaxScaler scaler;
};

inline ScaledCovariates scale_covariates(const Matrix& X, const std::vector<std::string>& names = {}) {
  auto scaler = MinMaxScaler::fit(X, names);
  Matrix scaled = scaler.transform(X);
  return {std::move(scaled), std::move(scaler)};
}

// ---------------------------------------------------------------------------
// Features
// ---------------------------------------------------------------------------

/// x -> phi~(x): one approximated basis value per sparse-grid basis function,
/// in basis order.
class FeatureMap {
 public:
  FeatureMap(SparseGridBasis basis, std::uint32_t R) : basis_(std::move(basis)), R_(R) {
    if (R_ == 0) throw DomainError("FeatureMap: R must be >= 1");
    for (std::uint32_t l = 0; l < pow2_.size(); ++l) pow2_[l] = std::ldexp(1.0, static_cast<int>(l));
    if (basis_.max_level_sum() >= pow2_.size()) throw DomainError("FeatureMap: level too large");
  }

  FeatureMap(std::size_t d, std::uint32_t m, std::uint32_t R, std::uint64_t cap = kDefaultBasisCap)
      : FeatureMap(enumerate_basis(d, m, cap), R) {}

  const SparseGridBasis& basis() const noexcept { return basis_; }
  std::uint32_t accuracy_level() const noexcept { return R_; }
  std::size_t dimension() const noexcept { return basis_.dimension(); }
  std::size_t size() const noexcept { return basis_.size(); }

  /// Writes phi~(x) into `out` (length size()). x must already lie in [0, 1]^d.
  void evaluate_into(PointView x, std::span<double> out) const {
    const std::size_t d = dimension();
    if (x.size() != d)
      throw DimensionMismatch("FeatureMap: point has " + std::to_string(x.size()) + " coordinates, expected " +
                              std::to_string(d));
    if (out.size() != size()) throw DimensionMismatch("FeatureMap: output span has wrong length");
    std::array<double, 64> small{};
    std::vector<double> large(d > small.size() ? d : 0);
    const std::span<double> scratch = d > small.size() ? std::span<double>(large) : std::span<double>(small.data(), d);
    for (std::size_t i = 0; i < size(); ++i) {
      const auto l = basis_.levels(i);
      const auto s = basis_.nodes(i);
      for (std::size_t j = 0; j < d; ++j)
        scratch[j] = std::max(0.0, 1.0 - std::abs(x[j] * pow2_[l[j]] - static_cast<double>(s[j])));
      out[i] = d == 1 ? scratch[0] : tree_product_inplace(R_, scratch);
    }
  }

  std::vector<double> evaluate(PointView x) const {
    std::vector<double> out(size());
    evaluate_into(x, out);
    return out;
  }

 private:
  SparseGridBasis basis_;
  std::uint32_t R_;
  std::array<double, 32> pow2_{};
};

/// Phi with row i = phi~(X_i). Rows are computed in parallel; the result does
/// not depend on the worker count.
inline Matrix feature_matrix(const FeatureMap& map, const Matrix& X, std::size_t workers = worker_count()) {
  if (X.rows() > 0 && static_cast<std::size_t>(X.cols()) != map.dimension())
    throw DimensionMismatch("feature_matrix: X has " + std::to_string(X.cols()) + " columns, basis dimension is " +
                            std::to_string(map.dimension()));
  const auto n = static_cast<std::size_t>(X.rows());
  const std::size_t p = map.size();
  // row-major scratch so each row is contiguous, then one transpose copy
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows(n, p);
  parallel_for(
      n,
      [&](std::size_t i) {
        std::vector<double> x(map.dimension());
        for (std::size_t j = 0; j < x.size(); ++j) x[j] = X(i, j);
        map.evaluate_into(x, std::span<double>(rows.row(i).data(), p));
      },
      workers);
  return Matrix(rows);
}

// ---------------------------------------------------------------------------
// Objective
// ---------------------------------------------------------------------------

namespace detail {

inline void check_shapes(const Vector& gamma, const Matrix& Phi, const Vector& y) {
  if (Phi.cols() != gamma.size() || Phi.rows() != y.size())
    throw DimensionMismatch("objective: Phi is " + std::to_string(Phi.rows()) + "x" + std::to_string(Phi.cols()) +
                            ", gamma has " + std::to_string(gamma.size()) + ", y has " + std::to_string(y.size()));
}

inline double loss_sum(const Vector& f, const Vector& y, const LossSpec& loss) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < f.size(); ++i) total += loss_value(loss, f[i], y[i]);
  return total;
}

}  // namespace detail

/// sum_i rho(phi~(X_i)' gamma, Y_i) + lambda* gamma'gamma / 2.
inline double objective(const Vector& gamma, const Matrix& Phi, const Vector& y, const LossSpec& loss,
                        double lambda_star) {
  detail::check_shapes(gamma, Phi, y);
  if (lambda_star < 0.0) throw DomainError("objective: lambda* must be >= 0");
  const Vector f = Phi * gamma;
  return detail::loss_sum(f, y, loss) + 0.5 * lambda_star * gamma.squaredNorm();
}

/// (Sub)gradient of objective() with respect to gamma.
inline Vector objective_gradient(const Vector& gamma, const Matrix& Phi, const Vector& y, const LossSpec& loss,
                                 double lambda_star) {
  detail::check_shapes(gamma, Phi, y);
  const Vector f = Phi * gamma;
  Vector w(f.size());
  for (Eigen::Index i = 0; i < f.size(); ++i) w[i] = loss_subgradient(loss, f[i], y[i]);
  Vector g = Phi.transpose() * w;
  g += lambda_star * gamma;
  return g;
}

// ---------------------------------------------------------------------------
// ADAM
// ---------------------------------------------------------------------------

struct AdamParams {
  double alpha = 0.1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const {
    if (!(alpha > 0.0)) throw DomainError("adam: alpha must be > 0");
    if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0))
      throw DomainError("adam: beta1 and beta2 must lie in (0, 1)");
    if (!(epsilon > 0.0)) throw DomainError("adam: epsilon must be > 0");
  }
};

struct FitConfig {
  LossSpec loss;
  double kappa = 1.0;  // lambda* = n * lambda = kappa
  int c_offset = 0;
  std::size_t epochs = 5000;
  /// Stop once max_k |gamma_t - gamma_{t-1}| <= tolerance.
  double tolerance = 1e-8;
  std::uint64_t seed = 20240229;
  AdamParams adam;
  /// 0 = full batch. Otherwise each epoch takes ceil(n / batch_size) steps on
  /// shuffled mini-batches with the gradient rescaled by n / |batch|.
  std::size_t batch_size = 0;
  bool record_history = false;

  void validate() const {
    adam.validate();
    if (epochs == 0) throw DomainError("adam_fit: epochs must be >= 1");
    if (kappa < 0.0) throw DomainError("adam_fit: kappa must be >= 0");
    if (tolerance < 0.0) throw DomainError("adam_fit: tolerance must be >= 0");
  }
};

/// m_t, v_t and the step counter t.
struct AdamState {
  Vector m;
  Vector v;
  std::size_t t = 0;
  double beta1_power = 1.0;
  double beta2_power = 1.0;

  explicit AdamState(Eigen::Index p) : m(Vector::Zero(p)), v(Vector::Zero(p)) {}

  /// One update; returns max |gamma_t - gamma_{t-1}|.
  double step(Vector& gamma, const Vector& h, const AdamParams& params) {
    ++t;
    beta1_power *= params.beta1;
    beta2_power *= params.beta2;
    m = params.beta1 * m + (1.0 - params.beta1) * h;
    v = params.beta2 * v + (1.0 - params.beta2) * h.cwiseProduct(h);
    const double c1 = 1.0 - beta1_power;
    const double c2 = 1.0 - beta2_power;
    double max_step = 0.0;
    for (Eigen::Index k = 0; k < gamma.size(); ++k) {
      const double m_hat = m[k] / c1;
      const double v_hat = v[k] / c2;
      const double delta = params.alpha * m_hat / (std::sqrt(v_hat) + params.epsilon);
      gamma[k] -= delta;
      max_step = std::max(max_step, std::abs(delta));
    }
    return max_step;
  }
};

struct AdamResult {
  Vector gamma;
  double objective = 0.0;
  std::size_t epochs_run = 0;
  bool converged = false;
  std::vector<double> history;  // objective at gamma_{t-1}, per epoch, when recorded
};

/// Minimises objective() from gamma_0 = 0 with ADAM.
inline AdamResult adam_fit(const Matrix& Phi, const Vector& y, const FitConfig& config) {
  config.validate();
  if (Phi.rows() != y.size()) throw DimensionMismatch("adam_fit: Phi and y row counts differ");
  const double lambda_star = config.kappa;
  const Eigen::Index n = Phi.rows();
  const Eigen::Index p = Phi.cols();

  AdamResult result;
  result.gamma = Vector::Zero(p);
  AdamState state(p);
  Vector f(n), w(n), h(p);

  const auto fail = [&](double value) {
    throw NonConvergence("adam_fit: non-finite objective " + std::to_string(value) + " at epoch " +
                         std::to_string(result.epochs_run) + " (loss " + to_string(config.loss) + ", kappa " +
                         std::to_string(config.kappa) + ", p " + std::to_string(p) + ")");
  };

  const bool batched = config.batch_size > 0 && static_cast<Eigen::Index>(config.batch_size) < n;
  if (!batched) {
    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
      f.noalias() = Phi * result.gamma;
      double obj = 0.5 * lambda_star * result.gamma.squaredNorm();
      for (Eigen::Index i = 0; i < n; ++i) {
        obj += loss_value(config.loss, f[i], y[i]);
        w[i] = loss_subgradient(config.loss, f[i], y[i]);
      }
      if (!std::isfinite(obj)) fail(obj);
      if (config.record_history) result.history.push_back(obj);
      h.noalias() = Phi.transpose() * w;
      h += lambda_star * result.gamma;
      const double max_step = state.step(result.gamma, h, config.adam);
      result.epochs_run = epoch;
      if (max_step <= config.tolerance) {
        result.converged = true;
        break;
      }
    }
  } else {
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows = Phi;
    std::vector<Eigen::Index> order(n);
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    CounterRng rng(config.seed, Stream::minibatch);
    const auto b = static_cast<Eigen::Index>(config.batch_size);
    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
      if (config.record_history) result.history.push_back(objective(result.gamma, Phi, y, config.loss, lambda_star));
      for (Eigen::Index i = n - 1; i > 0; --i)
        std::swap(order[i], order[rng.below(static_cast<std::uint64_t>(i) + 1)]);
      double max_step = 0.0;
      for (Eigen::Index start = 0; start < n; start += b) {
        const Eigen::Index stop = std::min(n, start + b);
        h.setZero();
        for (Eigen::Index k = start; k < stop; ++k) {
          const Eigen::Index i = order[k];
          const double fi = rows.row(i).dot(result.gamma);
          h += loss_subgradient(config.loss, fi, y[i]) * rows.row(i).transpose();
        }
        h *= static_cast<double>(n) / static_cast<double>(stop - start);
        h += lambda_star * result.gamma;
        max_step = std::max(max_step, state.step(result.gamma, h, config.adam));
      }
      result.epochs_run = epoch;
      if (max_step <= config.tolerance) {
        result.converged = true;
        break;
      }
    }
  }
  result.objective = objective(result.gamma, Phi, y, config.loss, lambda_star);
  if (!std::isfinite(result.objective)) fail(result.objective);
  return result;
}

// ---------------------------------------------------------------------------
// Fitted model
// ---------------------------------------------------------------------------

struct FitDiagnostics {
  double final_objective = 0.0;
  double train_sup_norm = 0.0;  // max_i |f(X_i)|, proxy for B
  double max_abs_residual = 0.0;  // M for the quadratic Lipschitz constant
  double lipschitz_constant = 0.0;
  std::size_t epochs_run = 0;
  bool converged = false;
  std::size_t n_train = 0;
  std::vector<double> train_predictions_head;  // first fitted values, for round-trip checks
};

/// Fitted estimator: gamma aligned to enumerate_basis(d, m) plus the scaler.
class SdrnModel {
 public:
  static constexpr int kSchemaVersion = 1;

  SdrnModel(std::uint32_t m, std::uint32_t R, LossSpec loss, double kappa, MinMaxScaler scaler, Vector gamma,
            std::vector<std::string> covariates = {}, std::string target = {})
      : m_(m),
        R_(R),
        loss_(loss),
        kappa_(kappa),
        scaler_(std::move(scaler)),
        gamma_(std::move(gamma)),
        covariates_(std::move(covariates)),
        target_(std::move(target)),
        features_(scaler_.dimension(), m, R) {
    if (static_cast<std::size_t>(gamma_.size()) != features_.size())
      throw DimensionMismatch("SdrnModel: gamma has " + std::to_string(gamma_.size()) + " entries, basis has " +
                              std::to_string(features_.size()));
    if (covariates_.empty())
      for (std::size_t j = 0; j < scaler_.dimension(); ++j) covariates_.push_back("x" + std::to_string(j + 1));
    if (covariates_.size() != scaler_.dimension()) throw DimensionMismatch("SdrnModel: covariate name count");
  }

  std::size_t dimension() const noexcept { return scaler_.dimension(); }
  std::uint32_t m() const noexcept { return m_; }
  std::uint32_t R() const noexcept { return R_; }
  const LossSpec& loss() const noexcept { return loss_; }
  double kappa() const noexcept { return kappa_; }
  const MinMaxScaler& scaler() const noexcept { return scaler_; }
  const Vector& gamma() const noexcept { return gamma_; }
  const FeatureMap& features() const noexcept { return features_; }
  const std::vector<std::string>& covariates() const noexcept { return covariates_; }
  const std::string& target() const noexcept { return target_; }
  FitDiagnostics& diagnostics() noexcept { return diagnostics_; }
  const FitDiagnostics& diagnostics() const noexcept { return diagnostics_; }

  /// Score phi~(x)' gamma for a raw (unscaled) point; out-of-range coordinates are clamped.
  double predict(PointView raw) const {
    if (raw.size() != dimension())
      throw DimensionMismatch("predict: point has " + std::to_string(raw.size()) + " coordinates, model expects " +
                              std::to_string(dimension()));
    std::vector<double> x(raw.size());
    for (std::size_t j = 0; j < x.size(); ++j) x[j] = scaler_.transform(j, raw[j]);
    std::vector<double> phi(features_.size());
    features_.evaluate_into(x, phi);
    double score = 0.0;
    for (std::size_t k = 0; k < phi.size(); ++k) score += phi[k] * gamma_[static_cast<Eigen::Index>(k)];
    return score;
  }

  Vector predict(const Matrix& raw) const {
    const Matrix Phi = feature_matrix(features_, scaler_.transform(raw));
    return Phi * gamma_;
  }

  /// sigmoid(score) for the logistic loss.
  double probability(PointView raw) const { return sigmoid(predict(raw)); }

  /// 1 when sigmoid(score) >= threshold.
  int predict_class(PointView raw, double threshold = 0.5) const { return probability(raw) >= threshold ? 1 : 0; }

 private:
  std::uint32_t m_;
  std::uint32_t R_;
  LossSpec loss_;
  double kappa_;
  MinMaxScaler scaler_;
  Vector gamma_;
  std::vector<std::string> covariates_;
  std::string target_;
  FeatureMap features_;
  FitDiagnostics diagnostics_;
};

struct FitOptions {
  FitConfig config;
  std::optional<std::uint32_t> m;  // overrides the n-derived schedule
  std::optional<std::uint32_t> R;
  std::vector<std::string> covariates;
  std::string target;
  /// Use the identity scaler (data already in [0, 1]^d) instead of min-max.
  bool unit_cube = false;
  std::uint64_t basis_cap = kDefaultBasisCap;
};

inline GridLevels resolve_levels(std::size_t n, const FitOptions& opts) {
  GridLevels levels{};
  if (!opts.m || !opts.R) levels = hyperparams_from_n(n, opts.config.c_offset);
  if (opts.m) levels.m = *opts.m;
  if (opts.R) levels.R = *opts.R;
  if (levels.R == 0) throw DomainError("R must be >= 1");
  return levels;
}

inline SdrnModel assemble_model(const Matrix& Phi, const Vector& y, const GridLevels& levels, MinMaxScaler scaler,
                                AdamResult fit, const FitOptions& opts) {
  SdrnModel model(levels.m, levels.R, opts.config.loss, opts.config.kappa, std::move(scaler), std::move(fit.gamma),
                  opts.covariates, opts.target);
  auto& diag = model.diagnostics();
  const Vector fitted = Phi * model.gamma();
  diag.final_objective = fit.objective;
  diag.epochs_run = fit.epochs_run;
  diag.converged = fit.converged;
  diag.n_train = static_cast<std::size_t>(y.size());
  diag.train_sup_norm = fitted.size() > 0 ? fitted.cwiseAbs().maxCoeff() : 0.0;
  diag.max_abs_residual = fitted.size() > 0 ? (fitted - y).cwiseAbs().maxCoeff() : 0.0;
  diag.lipschitz_constant = lipschitz_constant(opts.config.loss, diag.max_abs_residual);
  for (Eigen::Index i = 0; i < std::min<Eigen::Index>(fitted.size(), 10); ++i)
    diag.train_predictions_head.push_back(fitted[i]);
  return model;
}

/// Scale, featurise and fit on raw covariates.
inline SdrnModel fit_sdrn(const Matrix& X, const Vector& y, const FitOptions& opts) {
  if (X.rows() != y.size()) throw DimensionMismatch("fit_sdrn: X and y row counts differ");
  const GridLevels levels = resolve_levels(static_cast<std::size_t>(X.rows()), opts);
  MinMaxScaler scaler = opts.unit_cube ? MinMaxScaler::unit(X.cols()) : MinMaxScaler::fit(X, opts.covariates);
  const FeatureMap map(X.cols(), levels.m, levels.R, opts.basis_cap);
  const Matrix Phi = feature_matrix(map, scaler.transform(X));
  AdamResult fit = adam_fit(Phi, y, opts.config);
  return assemble_model(Phi, y, levels, std::move(scaler), std::move(fit), opts);
}

}  // namespace sdrn

#endif  // SDRN_ESTIMATOR_HPP
