#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "thermoai/core/errors.hpp"
#include "thermoai/core/json_io.hpp"
#include "thermoai/core/rng.hpp"

namespace thermoai::sbit {

/// Nonnegative piecewise-linear rate lambda(t) on [t0, tf).
///
/// Adjacent collinear segments are merged on construction, so two
/// representations of the same function produce identical samples.
class RateSchedule {
 public:
  struct Segment {
    double t_start;
    double t_end;
    double rate_start;
    double rate_end;

    bool constant() const { return rate_start == rate_end; }
    double bound() const { return std::max(rate_start, rate_end); }
    double at(double t) const {
      if (constant()) return rate_start;
      return rate_start + (rate_end - rate_start) * (t - t_start) / (t_end - t_start);
    }
  };

  RateSchedule() : RateSchedule(std::vector<Segment>{{0.0, std::numeric_limits<double>::infinity(), 0.0, 0.0}}) {}

  explicit RateSchedule(std::vector<Segment> segments) {
    require(!segments.empty(), "RateSchedule: needs at least one segment");
    for (std::size_t k = 0; k < segments.size(); ++k) {
      const auto& s = segments[k];
      require(std::isfinite(s.t_start) && s.t_start < s.t_end, "RateSchedule: need t_start < t_end");
      require(std::isfinite(s.rate_start) && std::isfinite(s.rate_end) && s.rate_start >= 0.0 && s.rate_end >= 0.0,
              "RateSchedule: rates must be finite and nonnegative");
      require(std::isfinite(s.t_end) || s.constant(), "RateSchedule: an unbounded segment must be constant");
      if (k > 0) require(s.t_start == segments[k - 1].t_end, "RateSchedule: segments must be contiguous");
    }
    for (const auto& s : segments) {
      if (!segments_.empty() && collinear(segments_.back(), s)) {
        segments_.back().t_end = s.t_end;
        segments_.back().rate_end = s.rate_end;
      } else {
        segments_.push_back(s);
      }
    }
  }

  static RateSchedule constant(double rate, double t0 = 0.0,
                               double tf = std::numeric_limits<double>::infinity()) {
    return RateSchedule({{t0, tf, rate, rate}});
  }

  /// rates[k] holds on [breaks[k], breaks[k+1]).
  static RateSchedule piecewise_constant(const std::vector<double>& breaks, const std::vector<double>& rates) {
    require(breaks.size() == rates.size() + 1 && !rates.empty(), "RateSchedule: need one more break than rates");
    std::vector<Segment> segs;
    for (std::size_t k = 0; k < rates.size(); ++k) segs.push_back({breaks[k], breaks[k + 1], rates[k], rates[k]});
    return RateSchedule(std::move(segs));
  }

  /// Linear interpolation between (knots[k], values[k]).
  static RateSchedule piecewise_linear(const std::vector<double>& knots, const std::vector<double>& values) {
    require(knots.size() == values.size() && knots.size() >= 2, "RateSchedule: need matching knots and values");
    std::vector<Segment> segs;
    for (std::size_t k = 0; k + 1 < knots.size(); ++k) segs.push_back({knots[k], knots[k + 1], values[k], values[k + 1]});
    return RateSchedule(std::move(segs));
  }

  double t0() const { return segments_.front().t_start; }
  double tf() const { return segments_.back().t_end; }
  const std::vector<Segment>& segments() const { return segments_; }

  bool covers(double a, double b) const { return t0() <= a && tf() >= b; }

  std::size_t segment_index(double t) const {
    std::size_t k = 0;
    while (k + 1 < segments_.size() && t >= segments_[k].t_end) ++k;
    return k;
  }

  double operator()(double t) const {
    require(t >= t0() && t <= tf(), "RateSchedule: t outside domain");
    return segments_[segment_index(t)].at(t);
  }

  /// lambda_max over the segment containing t.
  double bound_at(double t) const { return segments_[segment_index(t)].bound(); }

  bool identically_zero() const {
    return std::all_of(segments_.begin(), segments_.end(), [](const Segment& s) { return s.bound() == 0.0; });
  }

  /// Integral of lambda over [a, b].
  double integral(double a, double b) const {
    double total = 0.0;
    for (const auto& s : segments_) {
      const double lo = std::max(a, s.t_start), hi = std::min(b, s.t_end);
      if (hi > lo) total += 0.5 * (s.at(lo) + s.at(hi)) * (hi - lo);
    }
    return total;
  }

 private:
  static bool close(double a, double b) {
    return std::abs(a - b) <= 1e-12 * std::max({1.0, std::abs(a), std::abs(b)});
  }

  static bool collinear(const Segment& a, const Segment& b) {
    if (a.constant() && b.constant()) return a.rate_start == b.rate_start;
    if (a.constant() != b.constant() || !std::isfinite(b.t_end)) return false;
    if (!close(a.rate_end, b.rate_start)) return false;
    const double sa = (a.rate_end - a.rate_start) / (a.t_end - a.t_start);
    const double sb = (b.rate_end - b.rate_start) / (b.t_end - b.t_start);
    return close(sa, sb);
  }

  std::vector<Segment> segments_;
};

/// First event of the inhomogeneous Poisson clock lambda after s, or +inf if
/// none occurs before horizon. Lewis thinning against the per-segment bound;
/// a candidate that passes the segment end restarts the clock there.
inline double next_event(const RateSchedule& rate, double s, double horizon, Rng& rng) {
  constexpr double kNever = std::numeric_limits<double>::infinity();
  double t = s;
  const auto& segs = rate.segments();
  std::size_t k = rate.segment_index(t);
  while (t < horizon) {
    const auto& seg = segs[k];
    const double end = std::min(seg.t_end, horizon);
    const double bound = seg.bound();
    if (bound > 0.0) {
      const double cand = t + rng.exponential(bound);
      if (cand < end) {
        if (seg.constant() || rng.uniform() * bound <= seg.at(cand)) return cand;
        t = cand;
        continue;
      }
    }
    t = end;
    if (k + 1 >= segs.size()) break;
    ++k;
  }
  return kNever;
}

inline Json rate_schedule_to_json(const RateSchedule& r) {
  Json segs = Json::array();
  for (const auto& s : r.segments()) {
    Json j{{"t_start", s.t_start}, {"rate_start", s.rate_start}, {"rate_end", s.rate_end}};
    j["t_end"] = std::isfinite(s.t_end) ? Json(s.t_end) : Json("inf");
    segs.push_back(std::move(j));
  }
  return Json{{"segments", std::move(segs)}};
}

/// Accepts a bare number (constant on [0, inf)), {"constant": c},
/// {"breaks": [...], "rates": [...]}, {"knots": [...], "values": [...]},
/// or {"segments": [{t_start, t_end, rate_start, rate_end}]}.
inline RateSchedule rate_schedule_from_json(const Json& j, const std::string& field = "rate") {
  try {
    if (j.is_number()) return RateSchedule::constant(j.get<double>());
    if (!j.is_object()) throw ConfigError(field, "expected a number or an object");
    if (j.contains("constant"))
      return RateSchedule::constant(j.at("constant").get<double>(), j.value("t_start", 0.0),
                                    j.contains("t_end") ? j.at("t_end").get<double>()
                                                        : std::numeric_limits<double>::infinity());
    if (j.contains("breaks"))
      return RateSchedule::piecewise_constant(j.at("breaks").get<std::vector<double>>(),
                                              j.at("rates").get<std::vector<double>>());
    if (j.contains("knots"))
      return RateSchedule::piecewise_linear(j.at("knots").get<std::vector<double>>(),
                                            j.at("values").get<std::vector<double>>());
    if (j.contains("segments")) {
      std::vector<RateSchedule::Segment> segs;
      for (const auto& s : j.at("segments")) {
        const auto& te = s.at("t_end");
        const double t_end = te.is_string() ? std::numeric_limits<double>::infinity() : te.get<double>();
        const double r0 = s.at("rate_start").get<double>();
        segs.push_back({s.at("t_start").get<double>(), t_end, r0, s.value("rate_end", r0)});
      }
      return RateSchedule(std::move(segs));
    }
    throw ConfigError(field, "unrecognized rate schedule");
  } catch (const Json::exception& e) {
    throw ConfigError(field, e.what());
  } catch (const ContractError& e) {
    throw ConfigError(field, e.what());
  }
}

}  // namespace thermoai::sbit
