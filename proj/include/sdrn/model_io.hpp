#ifndef SDRN_MODEL_IO_HPP
#define SDRN_MODEL_IO_HPP

#include <fstream>
#include <string>

#include <json.hpp>

#include "sdrn/estimator.hpp"

namespace sdrn {

/// Model document; field names are stable (see README "Model JSON").
inline nlohmann::json model_to_json(const SdrnModel& model) {
  const auto& diag = model.diagnostics();
  std::vector<double> gamma(model.gamma().data(), model.gamma().data() + model.gamma().size());
  return {
      {"schema_version", SdrnModel::kSchemaVersion},
      {"d", model.dimension()},
      {"m", model.m()},
      {"R", model.R()},
      {"loss", to_string(model.loss())},
      {"kappa", model.kappa()},
      {"covariates", model.covariates()},
      {"target", model.target()},
      {"scaler", {{"min", model.scaler().min()}, {"max", model.scaler().max()}}},
      {"gamma", gamma},
      {"diagnostics",
       {{"final_objective", diag.final_objective},
        {"train_sup_norm", diag.train_sup_norm},
        {"max_abs_residual", diag.max_abs_residual},
        {"lipschitz_constant", diag.lipschitz_constant},
        {"epochs_run", diag.epochs_run},
        {"converged", diag.converged},
        {"n_train", diag.n_train},
        {"train_predictions_head", diag.train_predictions_head}}},
  };
}

inline SdrnModel model_from_json(const nlohmann::json& j) {
  try {
    const int version = j.at("schema_version").get<int>();
    if (version != SdrnModel::kSchemaVersion)
      throw DataError("model schema_version " + std::to_string(version) + " is not supported (expected " +
                      std::to_string(SdrnModel::kSchemaVersion) + ")");
    const auto gamma_values = j.at("gamma").get<std::vector<double>>();
    Vector gamma = Eigen::Map<const Vector>(gamma_values.data(), static_cast<Eigen::Index>(gamma_values.size()));
    MinMaxScaler scaler(j.at("scaler").at("min").get<std::vector<double>>(),
                        j.at("scaler").at("max").get<std::vector<double>>());
    if (scaler.dimension() != j.at("d").get<std::size_t>()) throw DataError("model: d disagrees with scaler length");
    SdrnModel model(j.at("m").get<std::uint32_t>(), j.at("R").get<std::uint32_t>(),
                    parse_loss(j.at("loss").get<std::string>()), j.at("kappa").get<double>(), std::move(scaler),
                    std::move(gamma), j.at("covariates").get<std::vector<std::string>>(),
                    j.value("target", std::string{}));
    if (j.contains("diagnostics")) {
      const auto& jd = j.at("diagnostics");
      auto& diag = model.diagnostics();
      diag.final_objective = jd.value("final_objective", 0.0);
      diag.train_sup_norm = jd.value("train_sup_norm", 0.0);
      diag.max_abs_residual = jd.value("max_abs_residual", 0.0);
      diag.lipschitz_constant = jd.value("lipschitz_constant", 0.0);
      diag.epochs_run = jd.value("epochs_run", std::size_t{0});
      diag.converged = jd.value("converged", false);
      diag.n_train = jd.value("n_train", std::size_t{0});
      diag.train_predictions_head = jd.value("train_predictions_head", std::vector<double>{});
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed model document: ") + e.what());
  } catch (const DimensionMismatch& e) {
    throw DataError(std::string("inconsistent model document: ") + e.what());
  }
}

inline void save_model(const SdrnModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write model file '" + path + "'");
  out << model_to_json(model).dump(2) << '\n';
}

inline SdrnModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read model file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("model file '" + path + "' is not valid JSON: " + e.what());
  }
  return model_from_json(j);
}

}  // namespace sdrn

#endif  // SDRN_MODEL_IO_HPP
