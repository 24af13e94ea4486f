#ifndef SDRN_EVALSUITE_HPP
#define SDRN_EVALSUITE_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sdrn/csv.hpp"
#include "sdrn/error.hpp"
#include "sdrn/estimator.hpp"
#include "sdrn/random.hpp"
#include "sdrn/relu_product.hpp"
#include "sdrn/sparse_grid.hpp"

namespace sdrn {

// ---------------------------------------------------------------------------
// Data-generating models
// ---------------------------------------------------------------------------

enum class Noise { normal, laplace, none };

inline Noise parse_noise(const std::string& s) {
  if (s == "normal") return Noise::normal;
  if (s == "laplace") return Noise::laplace;
  if (s == "none") return Noise::none;
  throw DomainError("unknown noise '" + s + "' (expected normal, laplace or none)");
}

inline std::string to_string(Noise n) {
  switch (n) {
    case Noise::normal:
      return "normal";
    case Noise::laplace:
      return "laplace";
    case Noise::none:
      return "none";
  }
  return "unknown";
}

struct SimModelSpec {
  int model_id = 1;
  std::size_t n = 2000;
  Noise noise = Noise::normal;
  std::uint64_t seed = 1;
};

inline std::size_t model_dimension(int model_id) {
  switch (model_id) {
    case 1:
      return 5;
    case 2:
      return 7;
    case 3:
    case 4:
      return 10;
    default:
      throw DomainError("unknown model id " + std::to_string(model_id) + " (expected 1..4)");
  }
}

inline bool is_classification_model(int model_id) { return model_id == 4; }

/// Log-odds mu(x) of the binary model (model 4).
inline double model4_log_odds(PointView x) {
  return x[4] * std::cos(x[0] * x[1] + x[2] + x[3]) + x[2] * x[2] * x[6] * std::sqrt(x[5] * x[7] + x[8] + 0.1) +
         x[6] / (2.0 + x[4] * x[4] + std::pow(x[9], 4)) - 3.0 * x[4] + 1.0;
}

/// E(Y | X = x). For model 4 this is P(Y = 1 | x).
inline double regression_function(int model_id, PointView x) {
  constexpr double pi = std::numbers::pi;
  switch (model_id) {
    case 1: {
      const double r2 = x[0] * x[0] + x[1] * x[1];
      return r2 + 1.5 * std::sin(std::sqrt(1.5) * pi * (x[0] + x[1])) + x[2] / (r2 + 1.0) + 1.0;
    }
    case 2:
      return x[0] * x[1] + std::exp(std::sin(2.0 * pi * (x[2] + x[3]))) / (1.0 + std::exp(std::cos(2.0 * pi * x[4]))) +
             std::tan(x[0] / (x[1] * x[1] + std::pow(x[3], 4) + 2.0));
    case 3:
      return 1.5 * x[4] * std::cos(x[0] * x[1] + x[2] + x[3]) +
             x[2] * x[2] * x[6] * std::sqrt(x[5] * x[7] + x[8] + 0.1) +
             2.0 * x[6] / (2.0 + x[4] * x[4] + std::pow(x[9], 4)) + 1.0;
    case 4:
      return sigmoid(model4_log_odds(x));
    default:
      throw DomainError("unknown model id " + std::to_string(model_id) + " (expected 1..4)");
  }
}

/// Y = 1 with probability sigmoid(mu), decided by one uniform draw.
inline double bernoulli_logistic(double mu, CounterRng& rng) { return rng.uniform() < sigmoid(mu) ? 1.0 : 0.0; }

struct SimSample {
  Matrix X;
  Vector y;
  Vector truth;  // E(Y | X_i)
};

namespace detail {

inline SimSample draw_sample(int model_id, std::size_t n, Noise noise, std::uint64_t key, Stream covariate_stream,
                             Stream noise_stream) {
  const std::size_t d = model_dimension(model_id);
  SimSample s{Matrix(n, d), Vector(n), Vector(n)};
  CounterRng cov(key, covariate_stream);
  CounterRng eps(key, noise_stream);
  std::vector<double> x(d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) x[j] = s.X(i, j) = cov.uniform();
    if (is_classification_model(model_id)) {
      s.truth[i] = regression_function(4, x);
      s.y[i] = bernoulli_logistic(model4_log_odds(x), eps);
    } else {
      s.truth[i] = regression_function(model_id, x);
      const double e = noise == Noise::normal ? eps.normal() : noise == Noise::laplace ? eps.laplace() : 0.0;
      s.y[i] = s.truth[i] + e;
    }
  }
  return s;
}

}  // namespace detail

struct SimDataset {
  SimSample train;
  /// Regression: the evaluation design x* (y holds noisy draws, truth = f(x*)).
  /// Classification: an independent test sample of the same size.
  SimSample evaluation;
};

/// Training sample from `spec.seed`; the evaluation design is drawn from
/// `design_seed` (defaults to spec.seed) so it can be shared across
/// replications. For the binary model the evaluation set is a test sample
/// drawn from spec.seed.
inline SimDataset generate(const SimModelSpec& spec, std::optional<std::uint64_t> design_seed = std::nullopt) {
  if (spec.n == 0) throw DomainError("generate: n must be >= 1");
  model_dimension(spec.model_id);
  SimDataset data;
  data.train = detail::draw_sample(spec.model_id, spec.n, spec.noise, spec.seed, Stream::covariates, Stream::noise);
  if (is_classification_model(spec.model_id)) {
    data.evaluation =
        detail::draw_sample(spec.model_id, spec.n, spec.noise, spec.seed, Stream::test_covariates, Stream::test_noise);
  } else {
    data.evaluation = detail::draw_sample(spec.model_id, spec.n, spec.noise, design_seed.value_or(spec.seed),
                                          Stream::evaluation_design, Stream::test_noise);
  }
  return data;
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

/// Regression or classification summary; fields that do not apply (or are
/// undefined, e.g. specificity with no negatives) are empty.
struct MetricSet {
  std::optional<double> avg_bias2, avg_variance, avg_mse;
  std::optional<double> accuracy, sensitivity, specificity, precision, recall, f1, auc;
  /// Share of predicted labels equal to the Bayes rule 1{P(Y=1|x) >= 1/2}
  /// (simulation only, where the truth is known).
  std::optional<double> bayes_agreement;
};

/// Averages over evaluation points of bias^2, variance (divisor n_rep) and
/// MSE across replications. predictions is reps x n.
inline MetricSet regression_metrics(const Matrix& predictions, const Vector& truth) {
  if (predictions.rows() < 1) throw DomainError("regression_metrics: need at least one replication");
  if (predictions.cols() != truth.size())
    throw DimensionMismatch("regression_metrics: predictions have " + std::to_string(predictions.cols()) +
                            " columns, truth has " + std::to_string(truth.size()));
  const double reps = static_cast<double>(predictions.rows());
  const auto n = truth.size();
  double bias2 = 0.0, variance = 0.0, mse = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double mean = 0.0, mean_sq = 0.0, err_sq = 0.0;
    for (Eigen::Index r = 0; r < predictions.rows(); ++r) {
      const double f = predictions(r, i);
      mean += f;
      mean_sq += f * f;
      err_sq += (f - truth[i]) * (f - truth[i]);
    }
    mean /= reps;
    mean_sq /= reps;
    err_sq /= reps;
    bias2 += (mean - truth[i]) * (mean - truth[i]);
    variance += mean_sq - mean * mean;
    mse += err_sq;
  }
  const double nn = static_cast<double>(n);
  MetricSet out;
  out.avg_bias2 = bias2 / nn;
  out.avg_variance = variance / nn;
  out.avg_mse = mse / nn;
  return out;
}

/// Area under the ROC curve as the Mann-Whitney rank statistic (ties get
/// average ranks). Empty when one class is absent.
inline std::optional<double> auc_rank(std::span<const double> scores, std::span<const int> labels) {
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] < scores[b]; });
  std::vector<double> rank(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = avg;
    i = j + 1;
  }
  double pos = 0.0, rank_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    if (labels[i] == 1) {
      pos += 1.0;
      rank_sum += rank[i];
    }
  const double neg = static_cast<double>(n) - pos;
  if (pos == 0.0 || neg == 0.0) return std::nullopt;
  return (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

/// Confusion-matrix rates with class 1 as positive, plus AUC over `scores`.
inline MetricSet classification_metrics(std::span<const int> y_hat, std::span<const int> y_true,
                                        std::span<const double> scores) {
  if (y_hat.size() != y_true.size() || scores.size() != y_true.size())
    throw DimensionMismatch("classification_metrics: length mismatch");
  double tp = 0, tn = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    if ((y_true[i] != 0 && y_true[i] != 1) || (y_hat[i] != 0 && y_hat[i] != 1))
      throw DomainError("classification_metrics: labels must be 0 or 1");
    if (y_true[i] == 1) (y_hat[i] == 1 ? tp : fn) += 1;
    else (y_hat[i] == 1 ? fp : tn) += 1;
  }
  const auto ratio = [](double num, double den) -> std::optional<double> {
    if (den == 0.0) return std::nullopt;
    return num / den;
  };
  MetricSet out;
  out.accuracy = ratio(tp + tn, tp + tn + fp + fn);
  out.sensitivity = ratio(tp, tp + fn);
  out.recall = out.sensitivity;
  out.specificity = ratio(tn, tn + fp);
  out.precision = ratio(tp, tp + fp);
  if (out.precision && out.recall && (*out.precision + *out.recall) > 0.0)
    out.f1 = 2.0 * *out.precision * *out.recall / (*out.precision + *out.recall);
  else if (out.precision && out.recall)
    out.f1 = 0.0;
  out.auc = auc_rank(scores, y_true);
  return out;
}

// ---------------------------------------------------------------------------
// Replication harness
// ---------------------------------------------------------------------------

struct ReplicationConfig {
  SimModelSpec model;  // model.seed is the master seed
  FitConfig fit;       // kappa and c_offset are taken from the grids below
  std::size_t reps = 1;
  std::vector<double> kappas{0.1, 0.5, 1.0, 2.0, 4.0};
  std::vector<int> cs{-2, -1, 0, 1, 2};
  std::size_t workers = worker_count();
};

struct CellReport {
  double kappa = 0.0;
  int c = 0;
  GridLevels levels;
  std::size_t basis_size = 0;
  MetricSet metrics;
  std::size_t fits_converged = 0;
};

struct ReplicationReport {
  ReplicationConfig config;
  bool classification = false;
  std::vector<CellReport> cells;  // kappa-major, then c, in grid order

  const CellReport& cell(double kappa, int c) const {
    for (const auto& x : cells)
      if (x.kappa == kappa && x.c == c) return x;
    throw DomainError("no report cell for the requested (kappa, c)");
  }

  /// Smallest avg_mse (regression) or largest accuracy (classification).
  const CellReport& best() const {
    if (cells.empty()) throw DomainError("empty report");
    const CellReport* out = &cells.front();
    for (const auto& x : cells) {
      if (classification ? x.metrics.accuracy.value_or(-1.0) > out->metrics.accuracy.value_or(-1.0)
                         : x.metrics.avg_mse.value_or(HUGE_VAL) < out->metrics.avg_mse.value_or(HUGE_VAL))
        out = &x;
    }
    return *out;
  }
};

namespace detail {

inline MetricSet average_metrics(const std::vector<MetricSet>& sets) {
  const auto avg = [&](auto member) -> std::optional<double> {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& s : sets)
      if (const auto& v = s.*member) {
        sum += *v;
        ++count;
      }
    if (count == 0) return std::nullopt;
    return sum / static_cast<double>(count);
  };
  MetricSet out;
  out.accuracy = avg(&MetricSet::accuracy);
  out.sensitivity = avg(&MetricSet::sensitivity);
  out.specificity = avg(&MetricSet::specificity);
  out.precision = avg(&MetricSet::precision);
  out.recall = avg(&MetricSet::recall);
  out.f1 = avg(&MetricSet::f1);
  out.auc = avg(&MetricSet::auc);
  out.bayes_agreement = avg(&MetricSet::bayes_agreement);
  return out;
}

}  // namespace detail

/// Fits every (kappa, c) cell on `reps` fresh training samples. Replication r
/// uses data seed derive_seed(master, r + 1); the regression evaluation design
/// comes from the master seed and is shared by all cells and replications.
inline ReplicationReport run_replications(const ReplicationConfig& cfg) {
  if (cfg.reps == 0) throw DomainError("run_replications: reps must be >= 1");
  if (cfg.kappas.empty() || cfg.cs.empty()) throw DomainError("run_replications: empty kappa or c grid");
  for (double k : cfg.kappas)
    if (!(k >= 0.0)) throw DomainError("run_replications: kappa must be >= 0");
  const int model_id = cfg.model.model_id;
  const std::size_t d = model_dimension(model_id);
  const bool classification = is_classification_model(model_id);
  const std::size_t n = cfg.model.n;
  if (n < 2) throw DomainError("run_replications: n must be >= 2");

  const std::size_t n_cells = cfg.kappas.size() * cfg.cs.size();
  std::vector<GridLevels> levels;
  std::vector<FeatureMap> maps;
  for (int c : cfg.cs) {
    levels.push_back(hyperparams_from_n(n, c));
    maps.emplace_back(d, levels.back().m, levels.back().R);
  }

  // shared regression evaluation design and its features
  SimModelSpec design_spec = cfg.model;
  const SimDataset design = generate(design_spec);
  std::vector<Matrix> eval_features;
  if (!classification)
    for (const auto& map : maps) eval_features.push_back(feature_matrix(map, design.evaluation.X, 1));

  // per cell, per replication: predictions on x* (regression) or metrics (classification)
  std::vector<Matrix> predictions(n_cells, Matrix(cfg.reps, classification ? 0 : n));
  std::vector<std::vector<MetricSet>> class_metrics(n_cells, std::vector<MetricSet>(cfg.reps));
  std::vector<std::vector<char>> converged(n_cells, std::vector<char>(cfg.reps, 0));

  parallel_for(
      cfg.reps,
      [&](std::size_t rep) {
        SimModelSpec spec = cfg.model;
        spec.seed = derive_seed(cfg.model.seed, rep + 1);
        const SimDataset data = generate(spec, cfg.model.seed);
        for (std::size_t ci = 0; ci < cfg.cs.size(); ++ci) {
          const Matrix Phi = feature_matrix(maps[ci], data.train.X, 1);
          const Matrix Phi_test = classification ? feature_matrix(maps[ci], data.evaluation.X, 1) : Matrix();
          for (std::size_t ki = 0; ki < cfg.kappas.size(); ++ki) {
            const std::size_t cell = ki * cfg.cs.size() + ci;
            FitConfig fc = cfg.fit;
            fc.kappa = cfg.kappas[ki];
            fc.c_offset = cfg.cs[ci];
            fc.seed = spec.seed;
            AdamResult fit;
            try {
              fit = adam_fit(Phi, data.train.y, fc);
            } catch (const Error& e) {
              throw Error(std::string(e.what()) + " [kappa=" + format_double(fc.kappa) + ", c=" +
                          std::to_string(fc.c_offset) + ", rep=" + std::to_string(rep) + "]");
            }
            converged[cell][rep] = fit.converged ? 1 : 0;
            if (classification) {
              const Vector scores = Phi_test * fit.gamma;
              std::vector<double> prob(scores.size());
              std::vector<int> y_hat(scores.size()), y_true(scores.size());
              double agree = 0.0;
              for (Eigen::Index i = 0; i < scores.size(); ++i) {
                prob[i] = sigmoid(scores[i]);
                y_hat[i] = prob[i] >= 0.5 ? 1 : 0;
                y_true[i] = data.evaluation.y[i] > 0.5 ? 1 : 0;
                agree += y_hat[i] == (data.evaluation.truth[i] >= 0.5 ? 1 : 0) ? 1.0 : 0.0;
              }
              class_metrics[cell][rep] = classification_metrics(y_hat, y_true, prob);
              class_metrics[cell][rep].bayes_agreement = agree / static_cast<double>(scores.size());
            } else {
              predictions[cell].row(rep) = (eval_features[ci] * fit.gamma).transpose();
            }
          }
        }
      },
      cfg.workers);

  ReplicationReport report;
  report.config = cfg;
  report.classification = classification;
  for (std::size_t ki = 0; ki < cfg.kappas.size(); ++ki) {
    for (std::size_t ci = 0; ci < cfg.cs.size(); ++ci) {
      const std::size_t cell = ki * cfg.cs.size() + ci;
      CellReport cr;
      cr.kappa = cfg.kappas[ki];
      cr.c = cfg.cs[ci];
      cr.levels = levels[ci];
      cr.basis_size = maps[ci].size();
      cr.metrics = classification ? detail::average_metrics(class_metrics[cell])
                                  : regression_metrics(predictions[cell], design.evaluation.truth);
      for (char ok : converged[cell]) cr.fits_converged += ok ? 1 : 0;
      report.cells.push_back(cr);
    }
  }
  return report;
}

namespace detail {

inline std::string metric_text(const std::optional<double>& v) { return v ? format_double(*v) : "NA"; }

inline nlohmann::json metric_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

inline nlohmann::json config_json(const ReplicationConfig& cfg) {
  return {{"model", cfg.model.model_id},
          {"n", cfg.model.n},
          {"noise", to_string(cfg.model.noise)},
          {"seed", cfg.model.seed},
          {"reps", cfg.reps},
          {"loss", to_string(cfg.fit.loss)},
          {"kappas", cfg.kappas},
          {"cs", cfg.cs},
          {"epochs", cfg.fit.epochs},
          {"tolerance", cfg.fit.tolerance},
          {"batch_size", cfg.fit.batch_size},
          {"adam",
           {{"alpha", cfg.fit.adam.alpha},
            {"beta1", cfg.fit.adam.beta1},
            {"beta2", cfg.fit.adam.beta2},
            {"epsilon", cfg.fit.adam.epsilon}}},
          {"evaluation_design", is_classification_model(cfg.model.model_id)
                                    ? "independent test sample per replication"
                                    : "drawn once from the master seed, shared by all cells and replications"},
          {"laplace_scale", 1.0}};
}

}  // namespace detail

/// One row per (kappa, c) cell; '#' lines echo the configuration.
inline void write_report_csv(const ReplicationReport& report, std::ostream& out) {
  out << "# sdrn simulate " << detail::config_json(report.config).dump() << '\n';
  out << "kappa,c,m,R,basis_size,fits_converged,";
  if (report.classification)
    out << "accuracy,sensitivity,specificity,precision,recall,f1,auc,bayes_agreement\n";
  else
    out << "avg_bias2,avg_variance,avg_mse\n";
  for (const auto& cell : report.cells) {
    out << format_double(cell.kappa) << ',' << cell.c << ',' << cell.levels.m << ',' << cell.levels.R << ','
        << cell.basis_size << ',' << cell.fits_converged << ',';
    const auto& m = cell.metrics;
    using detail::metric_text;
    if (report.classification)
      out << metric_text(m.accuracy) << ',' << metric_text(m.sensitivity) << ',' << metric_text(m.specificity) << ','
          << metric_text(m.precision) << ',' << metric_text(m.recall) << ',' << metric_text(m.f1) << ','
          << metric_text(m.auc) << ',' << metric_text(m.bayes_agreement) << '\n';
    else
      out << metric_text(m.avg_bias2) << ',' << metric_text(m.avg_variance) << ',' << metric_text(m.avg_mse) << '\n';
  }
}

inline nlohmann::json report_to_json(const ReplicationReport& report) {
  using detail::metric_json;
  nlohmann::json cells = nlohmann::json::array();
  const auto cell_json = [&](const CellReport& cell) {
    nlohmann::json j = {{"kappa", cell.kappa},         {"c", cell.c},
                        {"m", cell.levels.m},          {"R", cell.levels.R},
                        {"basis_size", cell.basis_size}, {"fits_converged", cell.fits_converged}};
    const auto& m = cell.metrics;
    if (report.classification) {
      j["accuracy"] = metric_json(m.accuracy);
      j["sensitivity"] = metric_json(m.sensitivity);
      j["specificity"] = metric_json(m.specificity);
      j["precision"] = metric_json(m.precision);
      j["recall"] = metric_json(m.recall);
      j["f1"] = metric_json(m.f1);
      j["auc"] = metric_json(m.auc);
      j["bayes_agreement"] = metric_json(m.bayes_agreement);
    } else {
      j["avg_bias2"] = metric_json(m.avg_bias2);
      j["avg_variance"] = metric_json(m.avg_variance);
      j["avg_mse"] = metric_json(m.avg_mse);
    }
    return j;
  };
  for (const auto& cell : report.cells) cells.push_back(cell_json(cell));
  return {{"config", detail::config_json(report.config)},
          {"task", report.classification ? "classification" : "regression"},
          {"cells", std::move(cells)},
          {"best", cell_json(report.best())}};
}

// ---------------------------------------------------------------------------
// Bound verification
// ---------------------------------------------------------------------------

/// Reference sparse-grid basis counts for d = 2..8 (rows), m = 0..4 (columns).
inline constexpr std::array<std::array<std::uint64_t, 5>, 7> kSparseGridCountTable{{
    {4, 8, 17, 37, 81},
    {8, 20, 50, 123, 297},
    {16, 48, 136, 368, 961},
    {32, 112, 352, 1032, 2882},
    {64, 256, 880, 2768, 8204},
    {128, 576, 2144, 7184, 22472},
    {256, 1280, 5120, 18176, 59744},
}};

struct BoundCheck {
  std::string name;
  double measured = 0.0;
  double bound = 0.0;
  bool passed = false;
  std::string detail;
};

struct BoundReport {
  std::vector<BoundCheck> checks;
  bool all_passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
  }
};

struct BoundsConfig {
  std::uint32_t max_square_R = 8;
  std::size_t square_grid = 10001;  // points on [0, 1]
  std::uint32_t max_pair_R = 6;
  std::size_t pair_grid = 201;  // per axis
  std::vector<std::size_t> factor_dims{2, 3, 4, 5, 8};
  std::vector<std::uint32_t> factor_Rs{2, 4, 6};
  std::size_t factor_samples = 1000;
  std::uint32_t interpolation_max_m = 6;
  std::size_t interpolation_samples = 200000;
  std::uint64_t seed = 7;
};

/// Max of |f_R(x) - x^2| over a uniform grid plus the point 2^{-R-1}, and
/// the smallest maximising x.
inline std::pair<double, double> square_sweep(std::uint32_t R, std::size_t grid) {
  std::vector<double> xs(grid);
  for (std::size_t i = 0; i < grid; ++i) xs[i] = static_cast<double>(i) / static_cast<double>(grid - 1);
  xs.push_back(std::ldexp(1.0, -static_cast<int>(R) - 1));
  std::sort(xs.begin(), xs.end());
  double worst = -1.0, arg = 0.0;
  for (double x : xs) {
    const double e = std::abs(square_approx(R, x) - x * x);
    if (e > worst + 1e-15) {
      worst = e;
      arg = x;
    }
  }
  return {worst, arg};
}

inline double pair_sweep(std::uint32_t R, std::size_t grid) {
  double worst = 0.0;
  for (std::size_t i = 0; i < grid; ++i)
    for (std::size_t k = 0; k < grid; ++k) {
      const double x = static_cast<double>(i) / static_cast<double>(grid - 1);
      const double y = static_cast<double>(k) / static_cast<double>(grid - 1);
      worst = std::max(worst, std::abs(pair_product(R, x, y) - x * y));
    }
  return worst;
}

/// Max |phi~ - phi| over random (id, x); x is drawn inside the id's support
/// in each coordinate with probability 3/4 so the sample is not dominated by zeros.
inline double factor_sweep(std::size_t d, std::uint32_t R, std::size_t samples, std::uint64_t seed,
                           std::uint32_t m = 3) {
  const auto basis = enumerate_basis(d, m);
  CounterRng rng(derive_seed(seed, d * 1000 + R), Stream::general);
  double worst = 0.0;
  std::vector<double> x(d);
  for (std::size_t k = 0; k < samples; ++k) {
    const std::size_t i = rng.below(basis.size());
    const auto l = basis.levels(i);
    const auto s = basis.nodes(i);
    for (std::size_t j = 0; j < d; ++j) {
      if (rng.uniform() < 0.75) {
        const double h = std::ldexp(1.0, -static_cast<int>(l[j]));
        const double lo = std::max(0.0, s[j] * h - h), hi = std::min(1.0, s[j] * h + h);
        x[j] = lo + (hi - lo) * rng.uniform();
      } else {
        x[j] = rng.uniform();
      }
    }
    worst = std::max(worst, std::abs(approx_basis_eval(R, l, s, x) - tensor_hat_eval(l, s, x)));
  }
  return worst;
}

/// 16 x(1-x) y(1-y): mixed second derivative 64, so ||D^2 f||_{L2} = 64.
inline double bump_2d(PointView x) { return 16.0 * x[0] * (1.0 - x[0]) * x[1] * (1.0 - x[1]); }

/// Monte-Carlo L2 error of the sparse-grid interpolant of bump_2d.
inline double interpolation_error(std::uint32_t m, std::size_t samples, std::uint64_t seed) {
  const Interpolant fm = interpolate(bump_2d, 2, m);
  CounterRng rng(seed, Stream::general);
  double sum = 0.0;
  std::array<double, 2> x{};
  for (std::size_t k = 0; k < samples; ++k) {
    x[0] = rng.uniform();
    x[1] = rng.uniform();
    const double e = fm(x) - bump_2d(x);
    sum += e * e;
  }
  return std::sqrt(sum / static_cast<double>(samples));
}

inline BoundReport verify_bounds(const BoundsConfig& cfg = {}) {
  BoundReport report;
  const auto add = [&](std::string name, double measured, double bound, bool ok, std::string detail = {}) {
    report.checks.push_back({std::move(name), measured, bound, ok, std::move(detail)});
  };

  for (std::size_t d = 2; d <= 8; ++d)
    for (std::uint32_t m = 0; m <= 4; ++m) {
      const auto count = static_cast<double>(enumerate_basis(d, m).size());
      const auto expected = static_cast<double>(kSparseGridCountTable[d - 2][m]);
      add("cardinality_table d=" + std::to_string(d) + " m=" + std::to_string(m), count, expected, count == expected);
    }

  for (std::size_t d = 2; d <= 8; ++d)
    for (std::uint32_t m = 1; m <= 6; ++m) {
      const auto count = static_cast<double>(enumerate_basis(d, m).size());
      const auto b = cardinality_bounds(d, m);
      add("cardinality_sandwich d=" + std::to_string(d) + " m=" + std::to_string(m), count, b.upper,
          b.lower <= count && count <= b.upper, "lower=" + format_double(b.lower));
    }

  for (std::uint32_t R = 1; R <= cfg.max_square_R; ++R) {
    const auto [worst, arg] = square_sweep(R, cfg.square_grid);
    add("square R=" + std::to_string(R), worst, square_error_bound(R), worst <= square_error_bound(R),
        "argmax=" + format_double(arg));
  }

  for (std::uint32_t R = 1; R <= cfg.max_pair_R; ++R) {
    const double worst = pair_sweep(R, cfg.pair_grid);
    add("pair R=" + std::to_string(R), worst, pair_error_bound(R), worst <= pair_error_bound(R));
  }
  {
    const double worst = pair_sweep(1, cfg.pair_grid);
    add("pair R=1 non-vacuous (> 1/32)", worst, 1.0 / 32.0, worst > 1.0 / 32.0);
  }

  for (auto d : cfg.factor_dims)
    for (auto R : cfg.factor_Rs) {
      const double worst = factor_sweep(d, R, cfg.factor_samples, cfg.seed);
      add("basis_product d=" + std::to_string(d) + " R=" + std::to_string(R), worst, tree_error_bound(R, d),
          worst <= tree_error_bound(R, d));
    }

  for (std::uint32_t m = 1; m <= cfg.interpolation_max_m; ++m) {
    const double err = interpolation_error(m, cfg.interpolation_samples, cfg.seed);
    const double bound = approximation_bound(2, m, 64.0, 1.0);
    add("interpolation m=" + std::to_string(m), err, bound, err <= bound);
  }
  return report;
}

inline void write_bound_report(const BoundReport& report, std::ostream& out) {
  out << "check,measured,bound,passed,detail\n";
  for (const auto& c : report.checks)
    out << c.name << ',' << format_double(c.measured) << ',' << format_double(c.bound) << ','
        << (c.passed ? "pass" : "FAIL") << ',' << c.detail << '\n';
}

}  // namespace sdrn

#endif  // SDRN_EVALSUITE_HPP
