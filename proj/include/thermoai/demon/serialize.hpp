#pragma once

#include <fstream>
#include <string>

#include "thermoai/core/json_io.hpp"
#include "thermoai/demon/score_network.hpp"

namespace thermoai::demon {

/// {"sizes": [...], "activation": "tanh", "layers": [{"W": {shape, data}, "b": [...]}]}
inline Json mlp_to_json(const Mlp& net) {
  Json layers = Json::array();
  for (std::size_t l = 0; l < net.n_layers(); ++l)
    layers.push_back({{"W", matrix_to_json(net.weight(l))}, {"b", vector_to_json(net.bias(l))}});
  return Json{{"sizes", net.sizes()}, {"activation", "tanh"}, {"layers", std::move(layers)}};
}

inline Mlp mlp_from_json(const Json& j, const std::string& field = "network") {
  try {
    if (j.value("activation", std::string("tanh")) != "tanh")
      throw ConfigError(field + "/activation", "only tanh is supported");
    Mlp net(j.at("sizes").get<std::vector<Eigen::Index>>());
    const auto& layers = j.at("layers");
    if (layers.size() != net.n_layers()) throw ConfigError(field + "/layers", "layer count does not match sizes");
    for (std::size_t l = 0; l < net.n_layers(); ++l) {
      const std::string f = field + "/layers/" + std::to_string(l);
      const Matrix w = matrix_from_json(layers[l].at("W"), f + "/W");
      const Vector b = vector_from_json(layers[l].at("b"), f + "/b");
      if (w.rows() != net.weight(l).rows() || w.cols() != net.weight(l).cols() || b.size() != net.bias(l).size())
        throw ConfigError(f, "parameter shape does not match sizes");
      net.weight(l) = w;
      net.bias(l) = b;
    }
    return net;
  } catch (const Json::exception& e) {
    throw ConfigError(field, e.what());
  } catch (const ContractError& e) {
    throw ConfigError(field, e.what());
  }
}

inline Json score_network_to_json(const ScoreNetworkDemon& d) {
  const auto& e = d.embedding();
  return Json{{"kind", "score_network"},
              {"dim", d.input_dim()},
              {"embedding", {{"kind", to_string(e.kind)}, {"size", e.size}, {"scale", e.scale},
                             {"max_frequency", e.max_frequency}}},
              {"network", mlp_to_json(d.network())}};
}

inline ScoreNetworkDemon score_network_from_json(const Json& j, const std::string& field = "demon") {
  try {
    if (j.value("kind", std::string("score_network")) != "score_network")
      throw ConfigError(field + "/kind", "expected score_network");
    TimeEmbedding e;
    const auto& ej = j.at("embedding");
    const auto kind = ej.at("kind").get<std::string>();
    if (kind == "affine") e = TimeEmbedding::affine(ej.value("scale", 1.0));
    else if (kind == "sinusoidal") e = TimeEmbedding::sinusoidal(ej.at("size").get<int>(), ej.value("max_frequency", 64.0));
    else throw ConfigError(field + "/embedding/kind", "unknown embedding '" + kind + "'");
    return ScoreNetworkDemon(j.at("dim").get<Eigen::Index>(), e, mlp_from_json(j.at("network"), field + "/network"));
  } catch (const Json::exception& e) {
    throw ConfigError(field, e.what());
  } catch (const ContractError& e) {
    throw ConfigError(field, e.what());
  }
}

inline void save_json(const std::string& path, const Json& j) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << j.dump(1) << '\n';
}

inline Json load_json(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError(path, "cannot open file");
  try {
    return Json::parse(is);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path, e.what());
  }
}

}  // namespace thermoai::demon
