#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "thermoai/core/json_io.hpp"
#include "thermoai/sde/model.hpp"

namespace thermoai::circuit {

inline constexpr double kBoltzmann = 1.380649e-23;
inline constexpr double kElementaryCharge = 1.602176634e-19;

/// Johnson-Nyquist voltage amplitude sqrt(4 k_B T R df).
inline double thermal_noise_amplitude(double r, double temperature, double bandwidth) {
  require(r >= 0.0 && temperature >= 0.0 && bandwidth >= 0.0,
          "thermal_noise_amplitude: R, T and bandwidth must be nonnegative");
  return std::sqrt(4.0 * kBoltzmann * temperature * r * bandwidth);
}

/// Shot-noise current amplitude sqrt(2 q |I| df).
inline double shot_noise_amplitude(double current, double bandwidth) {
  require(bandwidth >= 0.0, "shot_noise_amplitude: bandwidth must be nonnegative");
  return std::sqrt(2.0 * kElementaryCharge * std::abs(current) * bandwidth);
}

struct NoiseSourceSpec {
  enum class Kind { Thermal, Shot };
  Kind kind = Kind::Thermal;
  double r = 0.0;
  double temperature = 0.0;
  double current = 0.0;
  double bandwidth = 0.0;

  double amplitude() const {
    return kind == Kind::Thermal ? thermal_noise_amplitude(r, temperature, bandwidth)
                                 : shot_noise_amplitude(current, bandwidth);
  }
};

struct Cell {
  double r;  // ohms
  double c;  // farads
  double temperature = 0.0;  // kelvin
};

enum class CouplingKind { Resistive, Capacitive };

struct Coupling {
  int i;
  int j;
  CouplingKind kind;
  double value;  // R_ij in ohms or C_ij in farads
  bool closed = true;
};

struct RCNetlist {
  std::vector<Cell> cells;
  std::vector<Coupling> couplings;
};

inline void validate(const RCNetlist& net) {
  require(!net.cells.empty(), "RCNetlist: needs at least one cell");
  for (std::size_t k = 0; k < net.cells.size(); ++k) {
    const auto& c = net.cells[k];
    if (!(c.r > 0.0 && c.c > 0.0 && std::isfinite(c.r) && std::isfinite(c.c)))
      throw ContractError("RCNetlist: cell " + std::to_string(k) + " needs R > 0 and C > 0");
    if (!(c.temperature >= 0.0)) throw ContractError("RCNetlist: cell " + std::to_string(k) + " has negative T");
  }
  const int n = static_cast<int>(net.cells.size());
  for (std::size_t k = 0; k < net.couplings.size(); ++k) {
    const auto& e = net.couplings[k];
    const std::string tag = "RCNetlist: coupling " + std::to_string(k);
    require(e.i >= 0 && e.i < n && e.j >= 0 && e.j < n, tag + " endpoint out of range");
    require(e.i != e.j, tag + " connects a cell to itself");
    require(e.kind == net.couplings.front().kind, "RCNetlist: mixed resistive and capacitive couplings are not supported");
    if (e.kind == CouplingKind::Resistive) require(e.value > 0.0, tag + " needs R_ij > 0");
    else require(e.value >= 0.0, tag + " needs C_ij >= 0");
  }
}

/// Single noisy RC cell: dv = -v/(RC) dt + sqrt(2 k_B T R)/(RC) dW.
inline sde::SDEModel compile_rc_cell(double r, double c, double temperature) {
  require(r > 0.0 && c > 0.0, "compile_rc_cell: R and C must be positive");
  require(temperature >= 0.0, "compile_rc_cell: T must be nonnegative");
  const double rc = r * c;
  return sde::SDEModel(Matrix::Constant(1, 1, -1.0 / rc), Vector::Zero(1),
                       Matrix::Constant(1, 1, std::sqrt(2.0 * kBoltzmann * temperature * r) / rc));
}

struct CompiledNetwork {
  sde::SDEModel model;
  /// Eigenvalues of A0 (real parts are what matter for stability).
  Eigen::VectorXcd eigenvalues;
  /// Conductance matrix J (resistive) or capacitance matrix (capacitive).
  Matrix coupling_matrix;

  bool stable() const { return (eigenvalues.real().array() < 0.0).all(); }
};

/// Resistive: A0 = -C^{-1} J with J_ii = 1/R_i + sum 1/R_ij, J_ij = -1/R_ij.
/// Capacitive: A0 = -Cmat^{-1} R^{-1} with Cmat_ii = C_i + sum C_ij, Cmat_ij = -C_ij.
/// Diffusion in both cases: Cmat^{-1} R^{-1} diag(sqrt(2 k_B T_i R_i)).
inline CompiledNetwork compile_network(const RCNetlist& net) {
  validate(net);
  const auto n = static_cast<Eigen::Index>(net.cells.size());
  Matrix cap = Matrix::Zero(n, n);
  Matrix rinv = Matrix::Zero(n, n);
  Matrix noise = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& c = net.cells[static_cast<std::size_t>(i)];
    cap(i, i) = c.c;
    rinv(i, i) = 1.0 / c.r;
    noise(i, i) = std::sqrt(2.0 * kBoltzmann * c.temperature * c.r);
  }
  const bool capacitive = !net.couplings.empty() && net.couplings.front().kind == CouplingKind::Capacitive;
  Matrix j = rinv;
  for (const auto& e : net.couplings) {
    if (!e.closed) continue;
    if (e.kind == CouplingKind::Resistive) {
      const double g = 1.0 / e.value;
      j(e.i, e.i) += g;
      j(e.j, e.j) += g;
      j(e.i, e.j) -= g;
      j(e.j, e.i) -= g;
    } else {
      cap(e.i, e.i) += e.value;
      cap(e.j, e.j) += e.value;
      cap(e.i, e.j) -= e.value;
      cap(e.j, e.i) -= e.value;
    }
  }
  Eigen::FullPivLU<Matrix> lu(cap);
  if (!lu.isInvertible()) {
    Eigen::Index worst = 0;
    cap.rowwise().norm().minCoeff(&worst);
    throw ContractError("compile_network: capacitance matrix is singular (check cell " + std::to_string(worst) + ")");
  }
  const Matrix cinv = lu.inverse();
  Matrix a0 = capacitive ? Matrix(-cinv * rinv) : Matrix(-cinv * j);
  Matrix c0 = cinv * rinv * noise;
  CompiledNetwork out{sde::SDEModel(a0, Vector::Zero(n), c0), a0.eigenvalues(), capacitive ? cap : j};
  return out;
}

/// Closes coupling (i,j) iff adjacency(i,j) or adjacency(j,i) is nonzero.
inline RCNetlist apply_adjacency(const RCNetlist& net, const Matrix& adjacency) {
  const auto n = static_cast<Eigen::Index>(net.cells.size());
  require(adjacency.rows() == n && adjacency.cols() == n, "apply_adjacency: adjacency must be N x N");
  for (Eigen::Index i = 0; i < n; ++i) require(adjacency(i, i) == 0.0, "apply_adjacency: diagonal must be zero");
  Matrix wired = Matrix::Zero(n, n);
  for (const auto& e : net.couplings) wired(e.i, e.j) = wired(e.j, e.i) = 1.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < n; ++k)
      if (adjacency(i, k) != 0.0 && wired(i, k) == 0.0)
        throw ContractError("apply_adjacency: no hard-wired coupling between cells " + std::to_string(i) + " and " +
                            std::to_string(k));
  RCNetlist out = net;
  for (auto& e : out.couplings) e.closed = adjacency(e.i, e.j) != 0.0 || adjacency(e.j, e.i) != 0.0;
  return out;
}

/// Netlist with every open coupling removed.
inline RCNetlist remove_open_couplings(const RCNetlist& net) {
  RCNetlist out{net.cells, {}};
  for (const auto& e : net.couplings)
    if (e.closed) out.couplings.push_back(e);
  return out;
}

inline std::string to_string(CouplingKind k) { return k == CouplingKind::Resistive ? "resistive" : "capacitive"; }

inline Json netlist_to_json(const RCNetlist& net) {
  Json cells = Json::array(), cps = Json::array();
  for (const auto& c : net.cells) cells.push_back({{"R", c.r}, {"C", c.c}, {"T", c.temperature}});
  for (const auto& e : net.couplings)
    cps.push_back({{"i", e.i}, {"j", e.j}, {"kind", to_string(e.kind)}, {"value", e.value}, {"switch", e.closed}});
  return Json{{"cells", std::move(cells)}, {"couplings", std::move(cps)}};
}

/// {cells: [{R, C, T}], couplings: [{i, j, kind, value, switch}]}; indices are 0-based.
inline RCNetlist netlist_from_json(const Json& j, const std::string& field = "netlist") {
  RCNetlist net;
  try {
    const auto& cells = j.at("cells");
    for (std::size_t k = 0; k < cells.size(); ++k)
      net.cells.push_back({cells[k].at("R").get<double>(), cells[k].at("C").get<double>(), cells[k].value("T", 0.0)});
    if (j.contains("couplings")) {
      const auto& cps = j.at("couplings");
      for (std::size_t k = 0; k < cps.size(); ++k) {
        const auto kind = cps[k].at("kind").get<std::string>();
        if (kind != "resistive" && kind != "capacitive")
          throw ConfigError(field + "/couplings/" + std::to_string(k) + "/kind", "expected resistive or capacitive");
        net.couplings.push_back({cps[k].at("i").get<int>(), cps[k].at("j").get<int>(),
                                 kind == "resistive" ? CouplingKind::Resistive : CouplingKind::Capacitive,
                                 cps[k].at("value").get<double>(), cps[k].value("switch", true)});
      }
    }
    validate(net);
  } catch (const Json::exception& e) {
    throw ConfigError(field, e.what());
  } catch (const ContractError& e) {
    throw ConfigError(field, e.what());
  }
  return net;
}

}  // namespace thermoai::circuit
