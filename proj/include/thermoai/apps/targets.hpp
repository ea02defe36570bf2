#pragma once

#include <memory>
#include <string>

#include "thermoai/core/json_io.hpp"
#include "thermoai/demon/potential.hpp"

namespace thermoai::apps {

/// Target distribution pi(x) = exp(-U(x)) / Z, described by its potential.
using Target = demon::PotentialPtr;

inline Target gaussian_target(Vector mean, Matrix cov) {
  require(mean.size() == cov.rows() && cov.rows() == cov.cols(), "gaussian_target: shape mismatch");
  if (!is_spd(cov)) throw ContractError("gaussian_target: covariance must be SPD");
  const Matrix prec = cov.llt().solve(Matrix::Identity(cov.rows(), cov.cols()));
  return std::make_shared<demon::QuadraticPotential>(0.5 * (prec + prec.transpose()), std::move(mean));
}

inline Target standard_normal_target(Eigen::Index n) {
  return gaussian_target(Vector::Zero(n), Matrix::Identity(n, n));
}

inline Target mixture_target(demon::GaussianMixture m) {
  return std::make_shared<demon::GaussianMixtureNll>(std::move(m));
}

/// Symmetric 1D mixture of N(-c, s^2) and N(c, s^2) with equal weights.
inline demon::GaussianMixture symmetric_mixture_1d(double c, double s) {
  return demon::GaussianMixture({0.5, 0.5}, {demon::Gaussian::isotropic(vector_of({-c}), s * s),
                                             demon::Gaussian::isotropic(vector_of({c}), s * s)});
}

/// U(x) = a * sum_i (x_i^2 - b)^2.
inline Target double_well_target(Eigen::Index n = 1, double a = 1.0, double b = 1.0) {
  return std::make_shared<demon::DoubleWellPotential>(n, a, b);
}

/// Double well with a linear tilt: (x^2 - 1)^2 + k x in 1D. k > 0 makes the
/// left basin the global one.
inline Target tilted_double_well_target(double k) {
  return std::make_shared<demon::FunctionPotential>(
      1, [k](double, const Vector& x) { return std::pow(x(0) * x(0) - 1.0, 2) + k * x(0); },
      [k](double, const Vector& x) { return vector_of({4.0 * x(0) * (x(0) * x(0) - 1.0) + k}); },
      "tilted_double_well");
}

/// {"kind": "gaussian", "mean": [...], "cov": [[...]]}
/// {"kind": "mixture", "weights": [...], "means": [[...]], "variances": [...]}
/// {"kind": "double_well", "dim": n, "a": 1, "b": 1}
/// {"kind": "tilted_double_well", "tilt": k}
inline Target target_from_json(const Json& j, const std::string& field = "target") {
  if (!j.is_object() || !j.contains("kind")) throw ConfigError(field + "/kind", "missing target kind");
  const auto kind = j.at("kind").get<std::string>();
  try {
    if (kind == "gaussian") {
      const Vector mean = vector_from_json(j.at("mean"), field + "/mean");
      const Matrix cov = j.contains("cov") ? matrix_from_json(j.at("cov"), field + "/cov")
                                           : Matrix(Matrix::Identity(mean.size(), mean.size()));
      return gaussian_target(mean, cov);
    }
    if (kind == "mixture") {
      const auto w = j.at("weights").get<std::vector<double>>();
      const auto& means = j.at("means");
      const auto vars = j.at("variances").get<std::vector<double>>();
      if (means.size() != w.size() || vars.size() != w.size())
        throw ConfigError(field + "/weights", "weights, means and variances must have equal length");
      std::vector<demon::Gaussian> comps;
      for (std::size_t k = 0; k < w.size(); ++k)
        comps.push_back(demon::Gaussian::isotropic(vector_from_json(means[k], field + "/means"), vars[k]));
      return mixture_target(demon::GaussianMixture(w, comps));
    }
    if (kind == "double_well")
      return double_well_target(j.value("dim", 1), j.value("a", 1.0), j.value("b", 1.0));
    if (kind == "tilted_double_well") return tilted_double_well_target(j.at("tilt").get<double>());
  } catch (const Json::exception& e) {
    throw ConfigError(field, e.what());
  } catch (const ContractError& e) {
    throw ConfigError(field, e.what());
  }
  throw ConfigError(field + "/kind", "unknown target '" + kind + "'");
}

}  // namespace thermoai::apps
