// Acceptance run: one PASS/FAIL line per criterion, plus indented info lines.
// Exit status is nonzero when a criterion outside kKnownRed fails.

#include <sys/wait.h>

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "sdrn/sdrn.hpp"

using namespace sdrn;
namespace fs = std::filesystem;

namespace {

// See README "Acceptance status": 7 misses its ratio band at m = 2 for the
// exact errors, 9 has a plug-in bias2 inflated by var/reps, 12 cannot pass on drawn labels.
const std::set<int> kKnownRed{7, 9, 12};

int unexpected_failures = 0;

void verdict(int id, const std::string& name, bool pass, const std::string& detail) {
  std::cout << (pass ? "PASS" : "FAIL") << "  criterion " << id << "  " << name << "  | " << detail;
  if (!pass && kKnownRed.count(id)) std::cout << "  [known]";
  std::cout << std::endl;
  if (!pass && !kKnownRed.count(id)) ++unexpected_failures;
}

void info(const std::string& text) { std::cout << "      " << text << std::endl; }

std::string fmt(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// Reference basis counts, rows d = 2..8, columns m = 0..4.
constexpr std::array<std::array<std::uint64_t, 5>, 7> kReferenceCounts{{
    {4, 8, 17, 37, 81},
    {8, 20, 50, 123, 297},
    {16, 48, 136, 368, 961},
    {32, 112, 352, 1032, 2882},
    {64, 256, 880, 2768, 8204},
    {128, 576, 2144, 7184, 22472},
    {256, 1280, 5120, 18176, 59744},
}};

void criterion1() {
  Stopwatch sw;
  int matched = 0;
  std::string first_bad;
  for (std::size_t d = 2; d <= 8; ++d)
    for (std::uint32_t m = 0; m <= 4; ++m) {
      const auto count = enumerate_basis(d, m).size();
      if (count == kReferenceCounts[d - 2][m])
        ++matched;
      else if (first_bad.empty())
        first_bad = " first mismatch d=" + std::to_string(d) + " m=" + std::to_string(m);
    }
  const double t = sw.seconds();
  verdict(1, "cardinality table", matched == 35 && t < 5.0,
          std::to_string(matched) + "/35 cells, " + fmt(t, 3) + " s (limit 5 s)" + first_bad);
}

void criterion2() {
  int inside = 0;
  for (std::size_t d = 2; d <= 8; ++d)
    for (std::uint32_t m = 1; m <= 6; ++m) {
      const auto count = static_cast<double>(enumerate_basis(d, m).size());
      const auto b = cardinality_bounds(d, m);
      inside += (b.lower <= count && count <= b.upper) ? 1 : 0;
    }
  verdict(2, "cardinality sandwich", inside == 42, std::to_string(inside) + "/42 (d, m) pairs within bounds");
  for (std::size_t d = 2; d <= 3; ++d) {
    const auto b = cardinality_bounds(d, 0);
    info("m=0 edge, d=" + std::to_string(d) + ": count " + std::to_string(enumerate_basis(d, 0).size()) +
         ", lower " + fmt(b.lower) + ", upper " + fmt(b.upper) + " (reported, not asserted)");
  }
}

void criterion3() {
  bool ok = true;
  std::string detail;
  for (std::uint32_t R = 1; R <= 8; ++R) {
    const double bound = std::ldexp(1.0, -2 * static_cast<int>(R) - 2);
    const double peak = std::ldexp(1.0, -static_cast<int>(R) - 1);
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
      const double x = i / 9999.0;
      worst = std::max(worst, std::abs(square_approx(R, x) - x * x));
    }
    const double at_peak = std::abs(square_approx(R, peak) - peak * peak);
    worst = std::max(worst, at_peak);
    const bool r_ok = worst <= bound && worst - at_peak <= 1e-12;
    ok = ok && r_ok;
    if (R == 1 || R == 8 || !r_ok)
      detail += "R=" + std::to_string(R) + " max " + fmt(worst, 8) + " bound " + fmt(bound, 8) + " err(2^-R-1) " +
                fmt(at_peak, 8) + "; ";
  }
  verdict(3, "square approximator", ok, detail + "R=1..8 on 10^4 grid plus 2^-R-1");
}

void criterion4() {
  bool ok = true;
  std::string detail;
  for (std::uint32_t R = 1; R <= 6; ++R) {
    double worst = 0.0;
    for (int i = 0; i <= 200; ++i)
      for (int k = 0; k <= 200; ++k) {
        const double x = i / 200.0, y = k / 200.0;
        worst = std::max(worst, std::abs(pair_product(R, x, y) - x * y));
      }
    const double bound = 3.0 * std::ldexp(1.0, -2 * static_cast<int>(R) - 2);
    ok = ok && worst <= bound;
    detail += "R=" + std::to_string(R) + " " + fmt(worst, 4) + "/" + fmt(bound, 4) + "; ";
  }
  verdict(4, "pair product", ok, detail + "201x201 grid");
}

void criterion5() {
  std::mt19937_64 gen(505);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  bool ok = true;
  double worst_ratio = 0.0;
  for (std::size_t d : {2, 3, 4, 5, 8}) {
    const auto basis = enumerate_basis(d, 4);
    std::uniform_int_distribution<std::size_t> pick(0, basis.size() - 1);
    for (std::uint32_t R : {2, 4, 6}) {
      const double bound = 3.0 * std::ldexp(1.0, -2 * static_cast<int>(R) - 2) * static_cast<double>(d - 1);
      double worst = 0.0;
      for (int k = 0; k < 1000; ++k) {
        const BasisId id = basis.id(pick(gen));
        Point x(d);
        for (std::size_t j = 0; j < d; ++j) {
          const double h = std::ldexp(1.0, -static_cast<int>(id.level.levels[j]));
          const double lo = std::max(0.0, (id.node[j] - 1.0) * h), hi = std::min(1.0, (id.node[j] + 1.0) * h);
          x[j] = u(gen) < 0.8 ? lo + (hi - lo) * u(gen) : u(gen);
        }
        double exact = 1.0;
        for (std::size_t j = 0; j < d; ++j) {
          const double t = std::ldexp(x[j], static_cast<int>(id.level.levels[j])) - id.node[j];
          exact *= std::max(0.0, 1.0 - std::abs(t));
        }
        worst = std::max(worst, std::abs(approx_basis_eval(R, id, x) - exact));
      }
      ok = ok && worst <= bound;
      worst_ratio = std::max(worst_ratio, worst / bound);
    }
  }
  verdict(5, "d-factor basis", ok,
          "15 (d, R) settings x 10^3 random (id, x), worst error/bound " + fmt(worst_ratio, 4));
}

void criterion6() {
  std::mt19937_64 gen(606);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  int networks = 0;
  const auto check = [&](const ReluGraph& g, std::size_t arity, auto&& closed_form) {
    ++networks;
    std::vector<double> x(arity);
    for (int k = 0; k < 1000; ++k) {
      for (auto& v : x) v = u(gen);
      worst = std::max(worst, std::abs(g.evaluate_scalar(x) - closed_form(x)));
    }
  };
  for (std::uint32_t R : {1, 3, 6, 10}) {
    check(build_square_network(R), 1, [&](const std::vector<double>& x) { return square_approx(R, x[0]); });
    check(build_pair_network(R), 2, [&](const std::vector<double>& x) { return pair_product(R, x[0], x[1]); });
  }
  for (std::size_t q : {2, 3, 5, 8})
    check(build_tree_network(4, q), q, [&](const std::vector<double>& x) { return tree_product(4, x); });
  for (std::size_t d : {1, 2, 3, 5}) {
    const auto basis = enumerate_basis(d, 3);
    for (std::size_t i = 0; i < basis.size(); i += std::max<std::size_t>(1, basis.size() / 4)) {
      const BasisId id = basis.id(i);
      check(build_basis_network(5, id), d, [&](const std::vector<double>& x) { return approx_basis_eval(5, id, x); });
    }
  }
  int complexity_ok = 0;
  for (std::uint32_t R = 1; R <= 20; ++R) {
    const auto c = build_square_network(R).complexity();
    complexity_ok += (c.depth == R + 2 && c.units == 3 * R + 1 && c.weights == 15 * R - 4) ? 1 : 0;
  }
  verdict(6, "graph vs recursion", worst <= 1e-12 && complexity_ok == 20,
          std::to_string(networks) + " networks x 10^3 inputs, max |graph - recursion| " + fmt(worst, 3) +
              "; square-network complexity exact for " + std::to_string(complexity_ok) + "/20 R");
}

void criterion7() {
  Stopwatch sw;
  const auto f = [](PointView x) { return 16.0 * x[0] * (1.0 - x[0]) * x[1] * (1.0 - x[1]); };
  std::array<double, 7> err{};
  bool below = true;
  std::string detail;
  for (std::uint32_t m = 1; m <= 6; ++m) {
    const Interpolant fm = interpolate(f, 2, m);
    std::mt19937_64 gen(700 + m);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double sum = 0.0;
    const int samples = 200000;
    for (int k = 0; k < samples; ++k) {
      const std::array<double, 2> x{u(gen), u(gen)};
      const double e = fm(x) - f(x);
      sum += e * e;
    }
    err[m] = std::sqrt(sum / samples);
    const double bound = approximation_bound(2, m, 64.0, 1.0);
    below = below && err[m] <= bound;
    detail += "m=" + std::to_string(m) + " " + fmt(err[m], 4) + "/" + fmt(bound, 4) + "; ";
  }
  bool ratios = true;
  std::string ratio_text;
  for (std::uint32_t m = 2; m <= 5; ++m) {
    const double r = err[m] / err[m + 1];
    ratios = ratios && r >= 3.0 && r <= 5.5;
    ratio_text += fmt(r, 3) + (m < 5 ? "," : "");
  }
  const double t = sw.seconds();
  // Exact L2 errors by separable midpoint quadrature: f_m - f is a sum of
  // products u(x) v(y) built from the 1-D surpluses 4^{1-l} of 4x(1-x).
  const int q = 1 << 14;
  const auto level_row = [&](std::uint32_t l) {
    std::vector<double> row(q);
    for (int i = 0; i < q; ++i) {
      const double x = (i + 0.5) / q, h = std::ldexp(1.0, -static_cast<int>(l));
      row[i] = std::ldexp(4.0, -2 * static_cast<int>(l)) * (1.0 - std::abs(std::fmod(x / h, 2.0) - 1.0));
    }
    return row;
  };
  std::vector<double> g(q);
  for (int i = 0; i < q; ++i) g[i] = 4.0 * (i + 0.5) / q * (1.0 - (i + 0.5) / q);
  std::array<double, 7> exact{};
  for (std::uint32_t m = 1; m <= 6; ++m) {
    std::vector<std::vector<double>> U, V;
    for (std::uint32_t l1 = 1; l1 < m; ++l1)
      for (std::uint32_t l2 = 1; l1 + l2 <= m; ++l2) {
        U.push_back(level_row(l1));
        V.push_back(level_row(l2));
      }
    U.push_back(g);
    V.push_back(g);
    for (auto& v : V.back()) v = -v;
    double total = 0.0;
    for (std::size_t a = 0; a < U.size(); ++a)
      for (std::size_t b = 0; b < U.size(); ++b) {
        double su = 0.0, sv = 0.0;
        for (int i = 0; i < q; ++i) {
          su += U[a][i] * U[b][i];
          sv += V[a][i] * V[b][i];
        }
        total += su / q * sv / q;
      }
    exact[m] = std::sqrt(total);
  }
  std::string exact_text;
  for (std::uint32_t m = 2; m <= 5; ++m) exact_text += fmt(exact[m] / exact[m + 1], 4) + (m < 5 ? "," : "");
  verdict(7, "interpolation decay", below && ratios && t < 30.0,
          detail + "ratios m=2..5 [" + ratio_text + "] vs band [3, 5.5], " + fmt(t, 3) + " s (limit 30 s)");
  info("exact ratios from separable quadrature [" + exact_text + "]; the m=2 ratio is below 3 for the exact errors too");
}

void criterion8() {
  std::mt19937_64 gen(808);
  std::uniform_real_distribution<double> u(0.0, 1.0), v(-2.0, 2.0);
  Matrix Phi(50, 20);
  Vector y(50);
  for (Eigen::Index i = 0; i < 50; ++i) {
    for (Eigen::Index j = 0; j < 20; ++j) Phi(i, j) = u(gen);
    y[i] = v(gen);
  }
  const double lambda = 1.0;
  const Vector oracle = (2.0 * Phi.transpose() * Phi + lambda * Matrix::Identity(20, 20))
                            .ldlt()
                            .solve(2.0 * Phi.transpose() * y);
  FitConfig cfg;
  cfg.kappa = lambda;
  cfg.epochs = 10000;
  const auto fit = adam_fit(Phi, y, cfg);
  const double gap = (fit.gamma - oracle).cwiseAbs().maxCoeff();
  verdict(8, "ridge-quadratic oracle", gap <= 1e-4,
          "sup |gamma - closed form| " + fmt(gap, 3) + " after " + std::to_string(fit.epochs_run) + " epochs");
}

ReplicationReport simulate(int model, std::size_t n, Noise noise, const LossSpec& loss, std::vector<double> kappas,
                           std::vector<int> cs, std::size_t reps, std::uint64_t seed) {
  ReplicationConfig cfg;
  cfg.model = {model, n, noise, seed};
  cfg.fit.loss = loss;
  cfg.reps = reps;
  cfg.kappas = std::move(kappas);
  cfg.cs = std::move(cs);
  return run_replications(cfg);
}

std::string cell_text(const CellReport& c) {
  return "kappa=" + fmt(c.kappa) + " c=" + std::to_string(c.c) + " mse " + fmt(*c.metrics.avg_mse, 4);
}

constexpr std::uint64_t kSeed = 20240229;

ReplicationReport criterion9() {
  Stopwatch sw;
  auto report = simulate(1, 2000, Noise::normal, LossSpec::quadratic(), {1.0}, {-2, -1, 0, 1, 2}, 20, kSeed);
  const double t = sw.seconds();
  bool bias_down = true, var_up = true;
  for (std::size_t i = 0; i + 1 < report.cells.size(); ++i) {
    const auto& a = report.cells[i].metrics;
    const auto& b = report.cells[i + 1].metrics;
    bias_down = bias_down && *b.avg_bias2 < *a.avg_bias2;
    var_up = var_up && *b.avg_variance > *a.avg_variance;
  }
  const double mse = *report.cell(1.0, 0).metrics.avg_mse;
  const bool in_band = mse >= 0.07 && mse <= 0.16;
  verdict(9, "model 1 desk-scale reproduction", in_band && bias_down && var_up && t < 900.0,
          "avg_mse(1, 0) " + fmt(mse, 4) + " in [0.07, 0.16] (reference 0.1042); bias2 decreasing " +
              (bias_down ? "yes" : "no") + ", variance increasing " + (var_up ? "yes" : "no") + "; " + fmt(t, 4) +
              " s (limit 900 s)");
  for (const auto& c : report.cells)
    info("c=" + std::to_string(c.c) + " m=" + std::to_string(c.levels.m) + " R=" + std::to_string(c.levels.R) +
         " bias2 " + fmt(*c.metrics.avg_bias2, 4) + " var " + fmt(*c.metrics.avg_variance, 4) + " mse " +
         fmt(*c.metrics.avg_mse, 4) + " converged " + std::to_string(c.fits_converged) + "/20" +
         " bias2 - var/19 " + fmt(*c.metrics.avg_bias2 - *c.metrics.avg_variance / 19.0, 4));
  return report;
}

void criterion10(const ReplicationReport& n2000) {
  const auto n5000 = simulate(1, 5000, Noise::normal, LossSpec::quadratic(), {1.0}, {-1, 0, 1}, 10, kSeed);
  const auto& small = n2000.best();
  const auto& large = n5000.best();
  verdict(10, "sample-size trend", *large.metrics.avg_mse < *small.metrics.avg_mse,
          "n=5000 best " + cell_text(large) + " < n=2000 best " + cell_text(small));
  info("n=2000: kappa=1, c in -2..2, 20 reps (criterion 9 runs); n=5000: kappa=1, c in -1..1, 10 reps");
}

void criterion11() {
  const std::vector<double> kappas{0.5, 1.0, 2.0};
  const std::vector<int> cs{-1, 0};
  const auto quad = simulate(1, 2000, Noise::laplace, LossSpec::quadratic(), kappas, cs, 20, kSeed);
  const auto quant = simulate(1, 2000, Noise::laplace, LossSpec::quantile(0.5), kappas, cs, 20, kSeed);
  const auto& q = quad.best();
  const auto& r = quant.best();
  verdict(11, "laplace robustness", *r.metrics.avg_mse < *q.metrics.avg_mse,
          "quantile(0.5) best " + cell_text(r) + " < quadratic best " + cell_text(q) +
              "; grid kappa {0.5,1,2} x c {-1,0}, 20 reps");
}

void criterion12() {
  const std::size_t reps = 10;
  const auto report = simulate(4, 2000, Noise::none, LossSpec::logistic(), {1.0, 4.0}, {-2, -1}, reps, kSeed);
  const auto& best = report.best();
  const double acc = *best.metrics.accuracy;
  verdict(12, "classification accuracy", acc >= 0.89,
          "best kappa=" + fmt(best.kappa) + " c=" + std::to_string(best.c) + " test accuracy " + fmt(acc, 4) +
              " (threshold 0.89, reference 0.9328), 10 reps");
  double bayes = 0.0;
  for (std::size_t rep = 0; rep < reps; ++rep) {
    SimModelSpec spec{4, 2000, Noise::none, derive_seed(kSeed, rep + 1)};
    const auto test = generate(spec).evaluation;
    double hits = 0.0;
    for (Eigen::Index i = 0; i < test.y.size(); ++i) hits += ((test.truth[i] >= 0.5) == (test.y[i] > 0.5)) ? 1.0 : 0.0;
    bayes += hits / static_cast<double>(test.y.size());
  }
  bayes /= static_cast<double>(reps);
  info("Bayes-rule accuracy on the same test samples " + fmt(bayes, 4) + " (ceiling for any classifier)");
  info("bayes_agreement (fitted labels vs 1{p >= 0.5}) " + fmt(*best.metrics.bayes_agreement, 4));
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool run_cli(const std::string& args) {
  const std::string cmd = std::string(SDRN_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) && WEXITSTATUS(status) == 0;
}

void criterion13() {
  const fs::path dir = fs::temp_directory_path() / "sdrn_acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  {
    const auto data = generate(SimModelSpec{1, 400, Noise::normal, 13});
    std::ofstream out(dir / "train.csv");
    out << "x1,x2,x3,x4,x5,y\n";
    for (Eigen::Index i = 0; i < data.train.X.rows(); ++i) {
      for (int j = 0; j < 5; ++j) out << format_double(data.train.X(i, j)) << ',';
      out << format_double(data.train.y[i]) << '\n';
    }
  }
  const std::string d = dir.string() + "/";
  const std::string fit = "fit -i " + d + "train.csv -t y -o " + d + "model.json --report " + d + "report.txt --seed 5";
  const std::string fit_batch = "fit -i " + d + "train.csv -t y -o " + d + "model.json --report " + d +
                                "report.txt --seed 5 --batch-size 64 --epochs 300 --loss huber:1";
  const std::string sim =
      "simulate --model 1 --n 500 --reps 3 --seed 7 --kappas 0.5,1 --cs -1,0 -o " + d + "sim.csv --json " + d + "sim.json";
  const std::string sim4 = "simulate --model 4 --n 300 --reps 2 --seed 7 --kappas 1 --cs -2 -o " + d + "sim.csv --json " +
                           d + "sim.json";
  int identical = 0, runs = 0;
  bool all_ok = true;
  for (const auto& [args, files] : std::vector<std::pair<std::string, std::vector<std::string>>>{
           {fit, {"model.json", "report.txt"}},
           {fit_batch, {"model.json", "report.txt"}},
           {sim, {"sim.csv", "sim.json"}},
           {sim4, {"sim.csv", "sim.json"}}}) {
    ++runs;
    std::vector<std::string> first, second;
    all_ok = run_cli(args) && all_ok;
    for (const auto& f : files) first.push_back(slurp(dir / f));
    for (const auto& f : files) fs::remove(dir / f);
    all_ok = run_cli(args) && all_ok;
    for (const auto& f : files) second.push_back(slurp(dir / f));
    bool same = true;
    for (std::size_t k = 0; k < files.size(); ++k) same = same && !first[k].empty() && first[k] == second[k];
    identical += same ? 1 : 0;
  }
  fs::remove_all(dir);
  verdict(13, "determinism", all_ok && identical == runs,
          std::to_string(identical) + "/" + std::to_string(runs) +
              " CLI invocations byte-identical across two runs (fit, mini-batch fit, simulate, classification simulate)");
}

}  // namespace

int main() {
  std::cout << "sdrn acceptance run (SDRN_THREADS=" << worker_count() << ")" << std::endl;
  Stopwatch total;
  try {
    criterion1();
    criterion2();
    criterion3();
    criterion4();
    criterion5();
    criterion6();
    criterion7();
    criterion8();
    const auto n2000 = criterion9();
    criterion10(n2000);
    criterion11();
    criterion12();
    criterion13();
  } catch (const std::exception& e) {
    std::cout << "FAIL  aborted: " << e.what() << std::endl;
    return 1;
  }
  std::cout << "total " << fmt(total.seconds(), 4) << " s; unexpected failures: " << unexpected_failures << std::endl;
  return unexpected_failures == 0 ? 0 : 1;
}
