#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "thermoai/core/linalg.hpp"
#include "thermoai/sbit/rate_schedule.hpp"

namespace thermoai::sbit {

/// Bit i of the word is s-bit i+1.
using State = std::uint64_t;

inline bool bit(State x, int i) { return ((x >> i) & 1u) != 0; }

/// Renders s-bit 1 first, e.g. "011".
inline std::string state_string(State x, int n_bits) {
  std::string s(static_cast<std::size_t>(n_bits), '0');
  for (int i = 0; i < n_bits; ++i)
    if (bit(x, i)) s[static_cast<std::size_t>(i)] = '1';
  return s;
}

struct Transition {
  std::function<bool(State)> enabled;
  std::function<State(State)> successor;
  RateSchedule rate;
  std::string label;
};

class SBitSystem {
 public:
  static constexpr int kMaxBits = 64;

  SBitSystem(int n_bits, std::vector<Transition> transitions) : n_bits_(n_bits), transitions_(std::move(transitions)) {
    require(n_bits >= 1 && n_bits <= kMaxBits, "SBitSystem: n_bits must be in 1..64");
    for (const auto& tr : transitions_)
      require(static_cast<bool>(tr.enabled) && static_cast<bool>(tr.successor), "SBitSystem: incomplete transition");
  }

  int n_bits() const { return n_bits_; }
  const std::vector<Transition>& transitions() const { return transitions_; }

  bool valid_state(State x) const { return n_bits_ == 64 || (x >> n_bits_) == 0; }

  /// Common schedule domain.
  double t0() const {
    double t = -std::numeric_limits<double>::infinity();
    for (const auto& tr : transitions_) t = std::max(t, tr.rate.t0());
    return transitions_.empty() ? 0.0 : t;
  }
  double tf() const {
    double t = std::numeric_limits<double>::infinity();
    for (const auto& tr : transitions_) t = std::min(t, tr.rate.tf());
    return t;
  }

  /// Successor of x through transition k, checked for self-loops and range.
  State fire(std::size_t k, State x) const {
    const State y = transitions_[k].successor(x);
    if (y == x) throw ContractError("SBitSystem: transition '" + transitions_[k].label + "' is a self-loop");
    if (!valid_state(y)) throw ContractError("SBitSystem: transition '" + transitions_[k].label + "' leaves the state space");
    return y;
  }

 private:
  int n_bits_;
  std::vector<Transition> transitions_;
};

/// Transition flipping bit i (0-based) from `from` to 1-from, optionally gated
/// by a predicate on the whole state.
inline Transition flip_transition(int i, bool from, RateSchedule rate, std::function<bool(State)> guard = {}) {
  Transition t;
  const State mask = State{1} << i;
  t.enabled = [mask, from, guard](State x) { return (((x & mask) != 0) == from) && (!guard || guard(x)); };
  t.successor = [mask](State x) { return x ^ mask; };
  t.rate = std::move(rate);
  t.label = std::string(from ? "down_" : "up_") + std::to_string(i + 1);
  return t;
}

/// Independent single-flip system: up[i] drives 0->1 on bit i, down[i] drives 1->0.
/// Transitions are ordered up_1, down_1, up_2, down_2, ...
inline SBitSystem single_flip_system(const std::vector<RateSchedule>& up, const std::vector<RateSchedule>& down) {
  require(up.size() == down.size() && !up.empty(), "single_flip_system: need one up and one down schedule per bit");
  std::vector<Transition> trs;
  for (std::size_t i = 0; i < up.size(); ++i) {
    trs.push_back(flip_transition(static_cast<int>(i), false, up[i]));
    trs.push_back(flip_transition(static_cast<int>(i), true, down[i]));
  }
  return SBitSystem(static_cast<int>(up.size()), std::move(trs));
}

struct SBitTrajectory {
  int n_bits = 1;
  State x0 = 0;
  double t0 = 0.0;
  double horizon = 0.0;
  std::vector<std::pair<double, State>> jumps;

  State state_at(double t) const {
    State x = x0;
    for (const auto& [tj, y] : jumps) {
      if (tj > t) break;
      x = y;
    }
    return x;
  }

  /// Fraction of [t0, horizon] spent in each state (indexed by the state word).
  std::vector<double> occupancy() const {
    require(n_bits <= 20, "SBitTrajectory::occupancy: too many bits");
    std::vector<double> occ(std::size_t{1} << n_bits, 0.0);
    double t = t0;
    State x = x0;
    for (const auto& [tj, y] : jumps) {
      occ[x] += tj - t;
      t = tj;
      x = y;
    }
    occ[x] += horizon - t;
    for (auto& o : occ) o /= (horizon - t0);
    return occ;
  }
};

inline void write_sbit_csv(std::ostream& os, const SBitTrajectory& tr) {
  os.precision(17);
  os << "t,state_bits\n";
  os << tr.t0 << ',' << state_string(tr.x0, tr.n_bits) << '\n';
  for (const auto& [t, x] : tr.jumps) os << t << ',' << state_string(x, tr.n_bits) << '\n';
}

}  // namespace thermoai::sbit
