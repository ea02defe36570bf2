#pragma once

#include <algorithm>
#include <set>

#include "thermoai/core/linalg.hpp"
#include "thermoai/sbit/system.hpp"

namespace thermoai::sbit {

inline constexpr int kMaxDenseBits = 12;

inline void check_dense_size(const SBitSystem& system, const char* what) {
  if (system.n_bits() > kMaxDenseBits)
    throw ContractError(std::string(what) + ": N=" + std::to_string(system.n_bits()) + " would need a 2^N x 2^N = " +
                        "2^" + std::to_string(2 * system.n_bits()) + " entry matrix; limit is N <= " +
                        std::to_string(kMaxDenseBits));
}

/// Generator G(t): G(x,y) = rate of x -> y, rows sum to zero.
inline Matrix dense_generator(const SBitSystem& system, double t) {
  check_dense_size(system, "dense_generator");
  const Eigen::Index n = Eigen::Index{1} << system.n_bits();
  Matrix g = Matrix::Zero(n, n);
  const auto& trs = system.transitions();
  for (Eigen::Index x = 0; x < n; ++x) {
    const auto sx = static_cast<State>(x);
    for (std::size_t k = 0; k < trs.size(); ++k) {
      if (!trs[k].enabled(sx)) continue;
      const double r = trs[k].rate(t);
      if (r == 0.0) continue;
      g(x, static_cast<Eigen::Index>(system.fire(k, sx))) += r;
    }
  }
  for (Eigen::Index x = 0; x < n; ++x) {
    double row = 0.0;
    for (Eigen::Index y = 0; y < n; ++y)
      if (y != x) row += g(x, y);
    g(x, x) = -row;
  }
  return g;
}

/// p(t) = p0 exp(int G). Exact exponential on pieces where every rate is
/// constant; pieces with a linear rate use midpoint substeps.
inline Vector transient_distribution(const SBitSystem& system, const Vector& p0, double t, double t_start = 0.0,
                                     int substeps_per_piece = 256) {
  check_dense_size(system, "transient_distribution");
  const Eigen::Index n = Eigen::Index{1} << system.n_bits();
  require(p0.size() == n, "transient_distribution: p0 must have 2^N entries");
  require(p0.allFinite() && (p0.array() >= 0.0).all() && std::abs(p0.sum() - 1.0) <= 1e-9,
          "transient_distribution: p0 is not a probability distribution");
  require(t >= t_start, "transient_distribution: t before start");
  for (const auto& tr : system.transitions())
    require(tr.rate.covers(t_start, t), "transient_distribution: schedule for '" + tr.label + "' does not cover [0, t]");
  if (t == t_start) return p0;

  std::set<double> cuts{t_start, t};
  bool all_constant_everywhere = true;
  for (const auto& tr : system.transitions())
    for (const auto& s : tr.rate.segments()) {
      if (s.t_start > t_start && s.t_start < t) cuts.insert(s.t_start);
      if (!s.constant()) all_constant_everywhere = false;
    }
  std::vector<double> pts(cuts.begin(), cuts.end());
  Eigen::RowVectorXd p = p0.transpose();
  for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
    const double a = pts[k], b = pts[k + 1];
    bool constant_piece = all_constant_everywhere;
    if (!constant_piece) {
      constant_piece = true;
      for (const auto& tr : system.transitions())
        if (!tr.rate.segments()[tr.rate.segment_index(0.5 * (a + b))].constant()) constant_piece = false;
    }
    if (constant_piece) {
      p = p * expm(dense_generator(system, 0.5 * (a + b)) * (b - a));
    } else {
      const double h = (b - a) / substeps_per_piece;
      for (int i = 0; i < substeps_per_piece; ++i) p = p * expm(dense_generator(system, a + (i + 0.5) * h) * h);
    }
  }
  Vector out = p.transpose();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (out(i) < 0.0) {
      require(out(i) >= -1e-12, "transient_distribution: negative probability beyond round-off");
      out(i) = 0.0;
    }
  }
  return out / out.sum();
}

/// Total-variation distance between two distributions.
inline double total_variation(const Vector& p, const Vector& q) {
  require(p.size() == q.size(), "total_variation: size mismatch");
  return 0.5 * (p - q).cwiseAbs().sum();
}

}  // namespace thermoai::sbit
