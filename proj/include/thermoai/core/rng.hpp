#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>

namespace thermoai {

/// Counter-based generator (Philox4x32-10). A (seed, stream) pair selects an
/// independent sequence, so trajectory i of an ensemble can be replayed
/// without touching the draws of any other trajectory.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0, std::uint64_t stream = 0) noexcept
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        stream_(stream) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    if (buffered_ == 0) refill();
    return block_[--buffered_];
  }

  /// Uniform in the open interval (0, 1).
  double uniform() noexcept {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal by the 128-layer ziggurat. Each attempt uses one 64-bit
  /// draw: the low 7 bits pick the layer, the top 53 the abscissa.
  double normal() noexcept {
    const auto& z = ziggurat();
    for (;;) {
      const std::uint64_t bits = (*this)();
      const auto i = static_cast<std::size_t>(bits & 0x7f);
      const double u = 2.0 * ((static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53) - 1.0;
      if (std::abs(u) < z.ratio[i]) return u * z.x[i];
      if (i == 0) return normal_tail(u < 0.0);
      const double x = u * z.x[i];
      const double f0 = std::exp(-0.5 * (z.x[i] * z.x[i] - x * x));
      const double f1 = std::exp(-0.5 * (z.x[i + 1] * z.x[i + 1] - x * x));
      if (f1 + uniform() * (f0 - f1) < 1.0) return x;
    }
  }

  double exponential(double rate) noexcept { return -std::log(uniform()) / rate; }

  /// Uniform integer in [0, n), n >= 1, by rejection (no modulo bias).
  std::uint64_t uniform_index(std::uint64_t n) noexcept {
    const std::uint64_t threshold = (0 - n) % n;  // 2^64 mod n
    for (;;) {
      const std::uint64_t r = (*this)();
      if (r >= threshold) return r % n;
    }
  }

  std::uint64_t stream() const noexcept { return stream_; }

 private:
  static void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) noexcept {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
  }

  static constexpr double kZigR = 3.442619855899;
  static constexpr double kZigV = 9.91256303526217e-3;

  struct Ziggurat {
    std::array<double, 129> x{};
    std::array<double, 128> ratio{};
  };

  static const Ziggurat& ziggurat() noexcept {
    static const Ziggurat z = [] {
      Ziggurat t;
      double f = std::exp(-0.5 * kZigR * kZigR);
      t.x[0] = kZigV / f;
      t.x[1] = kZigR;
      t.x[128] = 0.0;
      for (std::size_t i = 2; i < 128; ++i) {
        t.x[i] = std::sqrt(-2.0 * std::log(kZigV / t.x[i - 1] + f));
        f = std::exp(-0.5 * t.x[i] * t.x[i]);
      }
      for (std::size_t i = 0; i < 128; ++i) t.ratio[i] = t.x[i + 1] / t.x[i];
      return t;
    }();
    return z;
  }

  double normal_tail(bool negative) noexcept {
    double x, y;
    do {
      x = std::log(uniform()) / kZigR;
      y = std::log(uniform());
    } while (-2.0 * y < x * x);
    return negative ? x - kZigR : kZigR - x;
  }

  void refill() noexcept {
    std::array<std::uint32_t, 4> c{static_cast<std::uint32_t>(counter_),
                                   static_cast<std::uint32_t>(counter_ >> 32),
                                   static_cast<std::uint32_t>(stream_),
                                   static_cast<std::uint32_t>(stream_ >> 32)};
    std::array<std::uint32_t, 2> k = key_;
    for (int round = 0; round < 10; ++round) {
      std::uint32_t hi0, lo0, hi1, lo1;
      mulhilo(0xD2511F53u, c[0], hi0, lo0);
      mulhilo(0xCD9E8D57u, c[2], hi1, lo1);
      c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
      k[0] += 0x9E3779B9u;
      k[1] += 0xBB67AE85u;
    }
    ++counter_;
    block_[0] = (static_cast<std::uint64_t>(c[1]) << 32) | c[0];
    block_[1] = (static_cast<std::uint64_t>(c[3]) << 32) | c[2];
    buffered_ = 2;
  }

  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  std::array<std::uint64_t, 2> block_{};
  int buffered_ = 0;
};

/// Mixes a parent seed and a label into a child seed (SplitMix64 finalizer).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t label) noexcept {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (label + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace thermoai
