// Fit an SDRN estimator to one draw from simulation model 1 and report the
// error on the evaluation design.

#include <cstdio>

#include "sdrn/sdrn.hpp"

int main() {
  sdrn::SimModelSpec spec{.model_id = 1, .n = 1000, .noise = sdrn::Noise::normal, .seed = 42};
  const auto data = sdrn::generate(spec);

  sdrn::FitOptions opts;
  opts.config.kappa = 1.0;
  opts.config.epochs = 2000;
  opts.unit_cube = true;
  const auto model = sdrn::fit_sdrn(data.train.X, data.train.y, opts);

  const sdrn::Vector pred = model.predict(data.evaluation.X);
  const double mse = (pred - data.evaluation.truth).squaredNorm() / static_cast<double>(pred.size());
  const auto net = sdrn::sdrn_network_complexity(model.R(), model.dimension(), model.features().size());

  std::printf("m=%u R=%u basis=%zu epochs=%zu\n", model.m(), model.R(), model.features().size(),
              model.diagnostics().epochs_run);
  std::printf("network depth=%zu units=%zu weights=%zu\n", net.depth, net.units, net.weights);
  std::printf("mse on evaluation design: %.4f\n", mse);
}
