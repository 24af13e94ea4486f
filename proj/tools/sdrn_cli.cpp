// sdrn: fit / predict / simulate / basis-info / verify-bounds

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sdrn/sdrn.hpp"

namespace {

constexpr std::uint64_t kDefaultSeed = 20240229;

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kBoundViolation = 3 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Writes to the named file, or stdout for "" / "-".
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty() && path != "-") {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw sdrn::DataError("cannot write '" + path + "'");
    }
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

// ---------------------------------------------------------------- fit

struct FitArgs {
  std::string input, target, model_out, report_out;
  std::vector<std::string> covariates;
  std::string loss = "quadratic";
  double kappa = 1.0;
  int c = 0;
  std::optional<std::uint32_t> m, R;
  std::size_t epochs = 5000;
  double tolerance = 1e-8;
  std::size_t batch_size = 0;
  std::uint64_t seed = kDefaultSeed;
};

sdrn::Matrix numeric_columns(const sdrn::CsvTable& table, const std::vector<std::size_t>& cols) {
  sdrn::Matrix X(static_cast<Eigen::Index>(table.rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < table.rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j) X(i, j) = table.number(i, cols[j]);
  return X;
}

int run_fit(const FitArgs& a, bool c_given) {
  if (a.m && a.R && c_given) throw UsageError("--c has no effect when both --m and --r are given");
  if (a.R && *a.R == 0) throw UsageError("--r must be >= 1");
  const sdrn::LossSpec loss = sdrn::parse_loss(a.loss);

  const sdrn::CsvTable table = sdrn::read_csv(a.input);
  const std::size_t target_col = table.column_index(a.target);
  std::vector<std::string> names = a.covariates;
  if (names.empty())
    for (const auto& h : table.header)
      if (h != a.target) names.push_back(h);
  if (names.empty()) throw sdrn::DataError("no covariate columns");
  std::vector<std::size_t> cols;
  for (const auto& name : names) {
    if (name == a.target) throw UsageError("target column '" + a.target + "' listed as a covariate");
    cols.push_back(table.column_index(name));
  }
  if (table.rows.empty()) throw sdrn::DataError("'" + a.input + "' has no data rows");

  const sdrn::Matrix X = numeric_columns(table, cols);
  sdrn::Vector y(X.rows());
  for (std::size_t i = 0; i < table.rows.size(); ++i) y[i] = table.number(i, target_col);

  sdrn::FitOptions opts;
  opts.config.loss = loss;
  opts.config.kappa = a.kappa;
  opts.config.c_offset = a.c;
  opts.config.epochs = a.epochs;
  opts.config.tolerance = a.tolerance;
  opts.config.batch_size = a.batch_size;
  opts.config.seed = a.seed;
  opts.m = a.m;
  opts.R = a.R;
  opts.covariates = names;
  opts.target = a.target;
  const sdrn::SdrnModel model = sdrn::fit_sdrn(X, y, opts);
  sdrn::save_model(model, a.model_out);

  const auto& diag = model.diagnostics();
  const auto net = sdrn::sdrn_network_complexity(model.R(), model.dimension(), model.features().size());
  Output out(a.report_out);
  auto& os = out.stream();
  os << "# sdrn fit input=" << a.input << " target=" << a.target << " loss=" << sdrn::to_string(loss)
     << " kappa=" << sdrn::format_double(a.kappa) << " c=" << a.c << " epochs=" << a.epochs
     << " tolerance=" << sdrn::format_double(a.tolerance) << " batch_size=" << a.batch_size << " seed=" << a.seed
     << '\n';
  os << "n: " << diag.n_train << '\n'
     << "d: " << model.dimension() << '\n'
     << "m: " << model.m() << '\n'
     << "R: " << model.R() << '\n'
     << "basis_size: " << model.features().size() << '\n'
     << "objective: " << sdrn::format_double(diag.final_objective) << '\n'
     << "epochs_run: " << diag.epochs_run << '\n'
     << "converged: " << (diag.converged ? "yes" : "no") << '\n'
     << "network_depth: " << net.depth << '\n'
     << "network_units: " << net.units << '\n'
     << "network_weights: " << net.weights << '\n'
     << "train_sup_norm: " << sdrn::format_double(diag.train_sup_norm) << '\n'
     << "lipschitz_constant: " << sdrn::format_double(diag.lipschitz_constant) << '\n'
     << "model: " << a.model_out << '\n';
  return kOk;
}

// ---------------------------------------------------------------- predict

struct PredictArgs {
  std::string model_path, input, output;
};

int run_predict(const PredictArgs& a) {
  const sdrn::SdrnModel model = sdrn::load_model(a.model_path);
  const sdrn::CsvTable table = sdrn::read_csv(a.input);
  std::vector<std::size_t> cols;
  for (const auto& name : model.covariates()) {
    if (!table.has_column(name)) throw sdrn::DataError("input lacks model covariate column '" + name + "'");
    cols.push_back(table.column_index(name));
  }
  for (const auto& reserved : {"prediction", "probability"})
    if (table.has_column(reserved)) throw sdrn::DataError(std::string("input already has a '") + reserved + "' column");
  const bool logistic = model.loss().kind == sdrn::LossKind::logistic;
  const sdrn::Matrix X = numeric_columns(table, cols);
  const sdrn::Vector score = X.rows() > 0 ? model.predict(X) : sdrn::Vector();

  Output out(a.output);
  auto& os = out.stream();
  os << "# sdrn predict model=" << a.model_path << " input=" << a.input << '\n';
  for (std::size_t j = 0; j < table.header.size(); ++j) os << table.header[j] << ',';
  os << "prediction" << (logistic ? ",probability" : "") << '\n';
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    for (const auto& cell : table.rows[i]) os << cell << ',';
    os << sdrn::format_double(score[i]);
    if (logistic) os << ',' << sdrn::format_double(sdrn::sigmoid(score[i]));
    os << '\n';
  }
  return kOk;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  int model = 1;
  std::size_t n = 2000;
  std::size_t reps = 1;
  std::uint64_t seed = kDefaultSeed;
  std::string noise, loss;
  std::vector<double> kappas{0.1, 0.5, 1.0, 2.0, 4.0};
  std::vector<int> cs{-2, -1, 0, 1, 2};
  std::size_t epochs = 5000;
  double tolerance = 1e-8;
  std::size_t batch_size = 0;
  std::string output, json_out;
};

int run_simulate(const SimulateArgs& a) {
  if (a.model < 1 || a.model > 4) throw UsageError("--model must be 1, 2, 3 or 4");
  if (a.n < 2) throw UsageError("--n must be >= 2");
  if (a.reps < 1) throw UsageError("--reps must be >= 1");
  for (double k : a.kappas)
    if (!(k >= 0.0)) throw UsageError("--kappas values must be >= 0");
  const bool classification = sdrn::is_classification_model(a.model);
  sdrn::ReplicationConfig cfg;
  cfg.model.model_id = a.model;
  cfg.model.n = a.n;
  cfg.model.seed = a.seed;
  cfg.model.noise = a.noise.empty() ? (classification ? sdrn::Noise::none : sdrn::Noise::normal)
                                    : sdrn::parse_noise(a.noise);
  cfg.fit.loss = sdrn::parse_loss(a.loss.empty() ? (classification ? "logistic" : "quadratic") : a.loss);
  if (classification != (cfg.fit.loss.kind == sdrn::LossKind::logistic))
    throw UsageError(classification ? "model 4 requires the logistic loss" : "logistic loss needs model 4");
  cfg.fit.epochs = a.epochs;
  cfg.fit.tolerance = a.tolerance;
  cfg.fit.batch_size = a.batch_size;
  cfg.reps = a.reps;
  cfg.kappas = a.kappas;
  cfg.cs = a.cs;

  const auto report = sdrn::run_replications(cfg);
  {
    Output out(a.output);
    sdrn::write_report_csv(report, out.stream());
  }
  if (!a.json_out.empty()) {
    Output out(a.json_out);
    out.stream() << sdrn::report_to_json(report).dump(2) << '\n';
  }
  return kOk;
}

// ---------------------------------------------------------------- basis-info

struct BasisInfoArgs {
  std::size_t d = 2;
  std::uint32_t m = 2;
  std::optional<std::uint32_t> R;
  std::string csv_out;
};

int run_basis_info(const BasisInfoArgs& a) {
  if (a.d == 0) throw UsageError("--d must be >= 1");
  const std::uint32_t R = a.R.value_or(3 * std::max<std::uint32_t>(a.m, 1));
  if (R == 0) throw UsageError("--r must be >= 1");
  const std::size_t count = sdrn::enumerate_basis(a.d, a.m).size();
  std::optional<sdrn::CardinalityBounds> bounds;
  if (a.d >= 2) bounds = sdrn::cardinality_bounds(a.d, a.m);
  const auto net = sdrn::sdrn_network_complexity(R, a.d, count);
  const auto per_basis = sdrn::sdrn_network_complexity(R, a.d, 1);

  std::cout << "# sdrn basis-info d=" << a.d << " m=" << a.m << " R=" << R << '\n'
            << "basis_size: " << count << '\n';
  if (bounds)
    std::cout << "cardinality_lower_bound: " << sdrn::format_double(bounds->lower) << '\n'
              << "cardinality_upper_bound: " << sdrn::format_double(bounds->upper) << '\n';
  std::cout << "network_depth: " << net.depth << '\n'
            << "network_units: " << net.units << '\n'
            << "network_weights: " << net.weights << '\n'
            << "single_basis_units: " << per_basis.units - 1 << '\n';
  if (!a.csv_out.empty()) {
    Output out(a.csv_out);
    auto& os = out.stream();
    os << "# sdrn basis-info d=" << a.d << " m=" << a.m << " R=" << R << '\n'
       << "d,m,R,basis_size,lower_bound,upper_bound,depth,units,weights\n"
       << a.d << ',' << a.m << ',' << R << ',' << count << ','
       << (bounds ? sdrn::format_double(bounds->lower) : "NA") << ','
       << (bounds ? sdrn::format_double(bounds->upper) : "NA") << ',' << net.depth << ',' << net.units << ','
       << net.weights << '\n';
  }
  return kOk;
}

// ---------------------------------------------------------------- verify-bounds

struct VerifyArgs {
  std::uint64_t seed = 7;
  std::string csv_out;
};

int run_verify(const VerifyArgs& a) {
  sdrn::BoundsConfig cfg;
  cfg.seed = a.seed;
  const auto report = sdrn::verify_bounds(cfg);
  std::cout << "# sdrn verify-bounds seed=" << a.seed << '\n';
  sdrn::write_bound_report(report, std::cout);
  std::size_t failed = 0;
  for (const auto& c : report.checks) failed += c.passed ? 0 : 1;
  std::cout << "# " << report.checks.size() - failed << "/" << report.checks.size() << " checks passed\n";
  if (!a.csv_out.empty()) {
    Output out(a.csv_out);
    out.stream() << "# sdrn verify-bounds seed=" << a.seed << '\n';
    sdrn::write_bound_report(report, out.stream());
  }
  return failed == 0 ? kOk : kBoundViolation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse deep ReLU network estimator"};
  app.require_subcommand(1);

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a model to a CSV file");
  fit_cmd->add_option("--input,-i", fit.input, "Training CSV")->required()->check(CLI::ExistingFile);
  fit_cmd->add_option("--target,-t", fit.target, "Response column")->required();
  fit_cmd->add_option("--model,-o", fit.model_out, "Model JSON to write")->required();
  fit_cmd->add_option("--report", fit.report_out, "Report file (default stdout)");
  fit_cmd->add_option("--covariates", fit.covariates, "Covariate columns (default: all but the target)")
      ->delimiter(',');
  fit_cmd->add_option("--loss", fit.loss, "quadratic | huber:<delta> | quantile:<tau> | logistic")->capture_default_str();
  fit_cmd->add_option("--kappa", fit.kappa, "Ridge weight lambda* = kappa")->capture_default_str()->check(CLI::NonNegativeNumber);
  auto* c_opt = fit_cmd->add_option("--c", fit.c, "Level offset c in m = floor(0.2 log2 n) + c")->capture_default_str();
  fit_cmd->add_option("--m", fit.m, "Sparse-grid level (overrides the schedule)");
  fit_cmd->add_option("--r", fit.R, "Product accuracy level R (overrides the schedule)");
  fit_cmd->add_option("--epochs", fit.epochs, "ADAM epoch cap")->capture_default_str()->check(CLI::PositiveNumber);
  fit_cmd->add_option("--tolerance", fit.tolerance, "Stop when max |gamma step| <= tolerance")->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  fit_cmd->add_option("--batch-size", fit.batch_size, "Mini-batch size (0 = full batch)")->capture_default_str();
  fit_cmd->add_option("--seed", fit.seed, "Random seed")->capture_default_str();

  PredictArgs pred;
  auto* pred_cmd = app.add_subcommand("predict", "Predict with a saved model");
  pred_cmd->add_option("--model,-m", pred.model_path, "Model JSON")->required()->check(CLI::ExistingFile);
  pred_cmd->add_option("--input,-i", pred.input, "CSV with the model's covariate columns")
      ->required()
      ->check(CLI::ExistingFile);
  pred_cmd->add_option("--output,-o", pred.output, "Output CSV (default stdout)");

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Replicated simulation on models 1-4");
  sim_cmd->add_option("--model", sim.model, "Model id 1-4")->capture_default_str();
  sim_cmd->add_option("--n", sim.n, "Sample size")->capture_default_str();
  sim_cmd->add_option("--reps", sim.reps, "Replications")->capture_default_str();
  sim_cmd->add_option("--seed", sim.seed, "Master seed")->capture_default_str();
  sim_cmd->add_option("--noise", sim.noise, "normal | laplace | none (default: normal, none for model 4)");
  sim_cmd->add_option("--loss", sim.loss, "Loss (default: quadratic, logistic for model 4)");
  sim_cmd->add_option("--kappas", sim.kappas, "kappa grid")->capture_default_str()->delimiter(',');
  sim_cmd->add_option("--cs", sim.cs, "c grid")->capture_default_str()->delimiter(',');
  sim_cmd->add_option("--epochs", sim.epochs, "ADAM epoch cap")->capture_default_str()->check(CLI::PositiveNumber);
  sim_cmd->add_option("--tolerance", sim.tolerance, "ADAM step tolerance")->capture_default_str()->check(CLI::NonNegativeNumber);
  sim_cmd->add_option("--batch-size", sim.batch_size, "Mini-batch size (0 = full batch)")->capture_default_str();
  sim_cmd->add_option("--output,-o", sim.output, "Metric CSV (default stdout)");
  sim_cmd->add_option("--json", sim.json_out, "JSON summary");

  BasisInfoArgs info;
  auto* info_cmd = app.add_subcommand("basis-info", "Sparse-grid size, bounds and network complexity");
  info_cmd->add_option("--d", info.d, "Dimension")->capture_default_str();
  info_cmd->add_option("--m", info.m, "Level")->capture_default_str();
  info_cmd->add_option("--r", info.R, "Product accuracy level (default 3 max(m, 1))");
  info_cmd->add_option("--csv", info.csv_out, "Also write a one-row CSV");

  VerifyArgs verify;
  auto* verify_cmd = app.add_subcommand("verify-bounds", "Run the bound-verification sweeps");
  verify_cmd->add_option("--seed", verify.seed, "Seed for the random sweeps")->capture_default_str();
  verify_cmd->add_option("--csv", verify.csv_out, "Also write the report as CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  try {
    if (*fit_cmd) return run_fit(fit, c_opt->count() > 0);
    if (*pred_cmd) return run_predict(pred);
    if (*sim_cmd) return run_simulate(sim);
    if (*info_cmd) return run_basis_info(info);
    if (*verify_cmd) return run_verify(verify);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const sdrn::DomainError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const sdrn::CapExceeded& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  }
  return kUsage;
}
