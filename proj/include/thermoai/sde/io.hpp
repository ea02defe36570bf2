#pragma once

#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>

#include "thermoai/core/json_io.hpp"
#include "thermoai/sde/model.hpp"

namespace thermoai::sde {

/// CSV with header t,v1,...,vN; values printed with round-trip precision.
inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  require(!traj.empty(), "write_trajectory_csv: empty trajectory");
  const auto n = traj.front().v.size();
  os << "t";
  for (Eigen::Index i = 0; i < n; ++i) os << ",v" << (i + 1);
  os << '\n' << std::setprecision(17);
  for (const auto& s : traj) {
    os << s.t;
    for (Eigen::Index i = 0; i < n; ++i) os << ',' << s.v(i);
    os << '\n';
  }
}

inline Json summary_to_json(const EnsembleSummary& s) {
  Json mean = Json::array();
  Json cov = Json::array();
  for (std::size_t k = 0; k < s.times.size(); ++k) {
    mean.push_back(vector_to_json(s.mean[k]));
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < s.cov[k].rows(); ++i) rows.push_back(vector_to_json(s.cov[k].row(i).transpose()));
    cov.push_back(std::move(rows));
  }
  return Json{{"n_traj", s.n_traj}, {"times", s.times}, {"mean", std::move(mean)}, {"cov", std::move(cov)}};
}

inline Json moments_to_json(const std::vector<GaussianMoments>& ms) {
  EnsembleSummary s;
  for (const auto& m : ms) {
    s.times.push_back(m.t);
    s.mean.push_back(m.mean);
    s.cov.push_back(m.cov);
  }
  Json j = summary_to_json(s);
  j.erase("n_traj");
  return j;
}

}  // namespace thermoai::sde
