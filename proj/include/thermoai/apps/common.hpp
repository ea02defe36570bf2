#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

#include "thermoai/core/errors.hpp"
#include "thermoai/core/linalg.hpp"

namespace thermoai::apps {

/// Default burn-in: first 20% of a chain.
inline constexpr double kDefaultBurnIn = 0.2;

/// Samples stored column-wise (dim x n).
struct Chain {
  Matrix samples;
  std::vector<double> times;
  /// Fraction of proposals accepted (HMC only; 1 otherwise).
  double acceptance = 1.0;

  Eigen::Index dim() const { return samples.rows(); }
  Eigen::Index size() const { return samples.cols(); }
};

/// Index of the first kept sample after dropping `fraction` of n.
inline Eigen::Index burn_in_count(Eigen::Index n, double fraction) {
  require(fraction >= 0.0 && fraction < 1.0, "burn-in fraction must lie in [0, 1)");
  return static_cast<Eigen::Index>(std::floor(fraction * static_cast<double>(n)));
}

inline Vector sample_mean(const Matrix& x) {
  require(x.cols() >= 1, "sample_mean: no samples");
  return x.rowwise().mean();
}

inline Matrix sample_cov(const Matrix& x) {
  require(x.cols() >= 2, "sample_cov: need at least two samples");
  const Matrix c = x.colwise() - x.rowwise().mean();
  return c * c.transpose() / static_cast<double>(x.cols() - 1);
}

/// ||mean - mu|| + ||cov - sigma||_F of the samples against a target law.
inline double moment_error(const Matrix& x, const Vector& mu, const Matrix& sigma) {
  return (sample_mean(x) - mu).norm() + (sample_cov(x) - sigma).norm();
}

/// fn(i) for i in [0, n) on up to `threads` workers. Work items must write
/// only to their own slot; the first exception (lowest index) is rethrown.
inline void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn) {
  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::size_t failed_at = n;
  std::exception_ptr failure;
  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (i < failed_at) {
          failed_at = i;
          failure = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

/// Total variation between the histogram of 1D samples on [lo, hi] (n_bins
/// bins) and the normalized density exp(-u(x)) integrated per bin by
/// Simpson's rule. Samples outside [lo, hi] count toward the mismatch.
inline double histogram_tv(const std::vector<double>& xs, const std::function<double(double)>& u, double lo, double hi,
                           int n_bins = 60, int simpson_points = 64) {
  require(hi > lo && n_bins >= 1 && !xs.empty(), "histogram_tv: bad arguments");
  const int m = simpson_points + (simpson_points % 2);
  const double w = (hi - lo) / n_bins;
  std::vector<double> mass(static_cast<std::size_t>(n_bins));
  double z = 0.0;
  for (int b = 0; b < n_bins; ++b) {
    const double a = lo + b * w;
    const double h = w / m;
    double s = 0.0;
    for (int k = 0; k <= m; ++k) {
      const double c = (k == 0 || k == m) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
      s += c * std::exp(-u(a + k * h));
    }
    mass[static_cast<std::size_t>(b)] = s * h / 3.0;
    z += mass[static_cast<std::size_t>(b)];
  }
  std::vector<double> counts(static_cast<std::size_t>(n_bins), 0.0);
  double outside = 0.0;
  for (double x : xs) {
    if (x < lo || x >= hi) {
      outside += 1.0;
      continue;
    }
    const auto b = std::min<std::size_t>(static_cast<std::size_t>((x - lo) / w), counts.size() - 1);
    counts[b] += 1.0;
  }
  const double n = static_cast<double>(xs.size());
  double tv = outside / n;
  for (std::size_t b = 0; b < counts.size(); ++b) tv += std::abs(counts[b] / n - mass[b] / z);
  return 0.5 * tv;
}

}  // namespace thermoai::apps
