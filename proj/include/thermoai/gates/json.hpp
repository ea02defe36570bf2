#pragma once

#include <map>
#include <string>

#include "thermoai/core/json_io.hpp"
#include "thermoai/gates/program.hpp"

namespace thermoai::gates {

inline Json scalar_function_to_json(const ScalarFunction& f) {
  switch (f.kind()) {
    case ScalarFunction::Kind::Constant: return {{"kind", "constant"}, {"value", f.a()}};
    case ScalarFunction::Kind::Affine: return {{"kind", "affine"}, {"a", f.a()}, {"b", f.b()}};
    case ScalarFunction::Kind::SqrtAffine: return {{"kind", "sqrt_affine"}, {"a", f.a()}, {"b", f.b()}};
    case ScalarFunction::Kind::ExpAffine: return {{"kind", "exp_affine"}, {"a", f.a()}, {"b", f.b()}};
    case ScalarFunction::Kind::PiecewiseLinear:
      return {{"kind", "piecewise_linear"}, {"knots", f.knots()}, {"values", f.values()}};
  }
  return {};
}

inline ScalarFunction scalar_function_from_json(const Json& j, const std::string& field) {
  if (j.is_number()) return ScalarFunction::constant(j.get<double>());
  const auto kind = j.value("kind", std::string{});
  try {
    if (kind == "constant") return ScalarFunction::constant(j.at("value").get<double>());
    if (kind == "affine") return ScalarFunction::affine(j.at("a").get<double>(), j.at("b").get<double>());
    if (kind == "sqrt_affine") return ScalarFunction::sqrt_affine(j.at("a").get<double>(), j.at("b").get<double>());
    if (kind == "exp_affine") return ScalarFunction::exp_affine(j.at("a").get<double>(), j.at("b").get<double>());
    if (kind == "piecewise_linear")
      return ScalarFunction::piecewise_linear(j.at("knots").get<std::vector<double>>(),
                                              j.at("values").get<std::vector<double>>());
  } catch (const Json::exception& e) {
    throw ConfigError(field, e.what());
  }
  throw ConfigError(field + "/kind", "unknown function kind '" + kind + "'");
}

inline Json segment_to_json(Target target, const GateSegment& s) {
  Json j{{"target", to_string(target)}, {"t_start", s.t_start()}, {"t_end", s.t_end()}};
  switch (s.form()) {
    case GateSegment::Form::Generator: {
      const auto& k = s.generator_op();
      switch (k.form()) {
        case Operator::Form::Scalar:
          j["form"] = "generator_scalar";
          j["payload"] = {{"dim", k.dim()}, {"kappa", k.scalar_value()}};
          break;
        case Operator::Form::Diagonal:
          j["form"] = "generator_diagonal";
          j["payload"] = {{"k", vector_to_json(k.diagonal_values())}};
          break;
        case Operator::Form::Dense:
          j["form"] = "generator_dense";
          j["payload"] = {{"K", matrix_to_json(k.dense_values())}};
          break;
      }
      break;
    }
    case GateSegment::Form::FunctionScalar:
      j["form"] = "function_scalar";
      j["payload"] = {{"dim", s.dim()}, {"function", scalar_function_to_json(s.function())}};
      break;
    case GateSegment::Form::FunctionEntry:
      j["form"] = "function_entry";
      j["payload"] = {{"dim", s.dim()}, {"entry", s.entry()}, {"function", scalar_function_to_json(s.function())}};
      break;
  }
  return j;
}

inline Json program_to_json(const GateProgram& p) {
  Json segs = Json::array();
  bool compose = true;
  for (Target t : {Target::DriftSuper, Target::DriftVec, Target::DiffusionSuper, Target::DemonCouplingSuper}) {
    if (const auto& s = p.schedule(t)) {
      compose = compose && s->compose();
      for (const auto& seg : s->segments()) segs.push_back(segment_to_json(t, seg));
    }
  }
  return Json{{"compose", compose}, {"segments", std::move(segs)}};
}

inline GateSegment segment_from_json(const Json& j, const std::string& field) {
  try {
    const double t0 = j.at("t_start").get<double>();
    const double t1 = j.at("t_end").get<double>();
    const auto form = j.at("form").get<std::string>();
    const auto& payload = j.at("payload");
    if (form == "generator_scalar")
      return GateSegment::generator(
          Operator::scalar(payload.at("dim").get<Eigen::Index>(), payload.at("kappa").get<double>()), t0, t1);
    if (form == "generator_diagonal")
      return GateSegment::generator(Operator::diagonal(vector_from_json(payload.at("k"), field + "/payload/k")), t0,
                                    t1);
    if (form == "generator_dense")
      return GateSegment::generator(Operator::dense(matrix_from_json(payload.at("K"), field + "/payload/K")), t0, t1);
    if (form == "function_scalar")
      return GateSegment::function_scalar(payload.at("dim").get<Eigen::Index>(),
                                          scalar_function_from_json(payload.at("function"), field + "/payload/function"),
                                          t0, t1);
    if (form == "function_entry")
      return GateSegment::function_entry(payload.at("dim").get<Eigen::Index>(), payload.at("entry").get<Eigen::Index>(),
                                         scalar_function_from_json(payload.at("function"), field + "/payload/function"),
                                         t0, t1);
    throw ConfigError(field + "/form", "unknown segment form '" + form + "'");
  } catch (const Json::exception& e) {
    throw ConfigError(field, e.what());
  } catch (const ContractError& e) {
    throw ConfigError(field, e.what());
  }
}

/// Segments are grouped per target in document order.
inline GateProgram program_from_json(const Json& j, const std::string& field = "program") {
  if (!j.is_object() || !j.contains("segments") || !j.at("segments").is_array())
    throw ConfigError(field + "/segments", "expected an array of segments");
  const bool compose = j.value("compose", true);
  std::map<int, std::vector<GateSegment>> grouped;
  const auto& segs = j.at("segments");
  for (std::size_t i = 0; i < segs.size(); ++i) {
    const std::string f = field + "/segments/" + std::to_string(i);
    Target t;
    try {
      t = target_from_string(segs[i].at("target").get<std::string>());
    } catch (const std::exception& e) {
      throw ConfigError(f + "/target", e.what());
    }
    grouped[static_cast<int>(t)].push_back(segment_from_json(segs[i], f));
  }
  GateProgram p;
  for (auto& [t, list] : grouped) {
    try {
      p.set(Schedule(static_cast<Target>(t), std::move(list), compose));
    } catch (const ContractError& e) {
      throw ConfigError(field, e.what());
    }
  }
  return p;
}

}  // namespace thermoai::gates
