#include "qross/strategies.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "qross/error.hpp"
#include "qross/min_fitness.hpp"

namespace qross {

namespace {

constexpr double kInvPhi = 0.6180339887498949;  // 1 / golden ratio

std::vector<double> make_grid(ARange r, std::size_t n, bool log_space) {
  std::vector<double> g(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = n == 1 ? 0.0 : static_cast<double>(k) / static_cast<double>(n - 1);
    g[k] = log_space ? std::exp(std::log(r.lo) + t * (std::log(r.hi) - std::log(r.lo)))
                     : r.lo + t * (r.hi - r.lo);
  }
  return g;
}

}  // namespace

double scan_minimize(const std::function<double(double)>& f, ARange range, std::size_t grid_points) {
  if (!(range.hi > range.lo)) throw ValidationError("A range must satisfy hi > lo");
  if (grid_points < 3) throw ValidationError("scan needs at least 3 grid points");
  const bool log_space = range.lo > 0.0;
  const auto grid = make_grid(range, grid_points, log_space);
  std::size_t best = 0;
  double best_val = f(grid[0]);
  for (std::size_t k = 1; k < grid.size(); ++k) {
    const double v = f(grid[k]);
    if (v < best_val) {
      best = k;
      best_val = v;
    }
  }

  // Golden section in the scan's coordinate (log A or A).
  auto to_u = [&](double a) { return log_space ? std::log(a) : a; };
  auto from_u = [&](double u) { return log_space ? std::exp(u) : u; };
  double lo = to_u(grid[best == 0 ? 0 : best - 1]);
  double hi = to_u(grid[std::min(best + 1, grid.size() - 1)]);
  double x1 = hi - kInvPhi * (hi - lo);
  double x2 = lo + kInvPhi * (hi - lo);
  double f1 = f(from_u(x1));
  double f2 = f(from_u(x2));
  for (int it = 0; it < 80 && hi - lo > 1e-12 * (1.0 + std::abs(lo)); ++it) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - kInvPhi * (hi - lo);
      f1 = f(from_u(x1));
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + kInvPhi * (hi - lo);
      f2 = f(from_u(x2));
    }
  }
  const double refined = from_u(f1 <= f2 ? x1 : x2);
  const double refined_val = std::min(f1, f2);
  return refined_val <= best_val ? refined : grid[best];
}

double mfs_propose(const SurrogateView& surrogate, ARange range, std::size_t batch_size) {
  if (!(range.lo > 0.0)) throw ValidationError("MFS needs a positive lower A bound");
  auto d_min = [&](double a) {
    const auto p = surrogate.predict(a);
    return expected_min_fitness(p.p_f, p.e_avg, p.e_std, batch_size);
  };
  const double a = scan_minimize(d_min, range);
  if (!std::isfinite(d_min(a))) {
    throw NoFeasibleRegionError(
        "surrogate predicts no feasible solutions anywhere in the A range; widen the range");
  }
  return a;
}

double pbs_propose(const SurrogateView& surrogate, double p, ARange range) {
  if (!(p > 0.0 && p < 1.0)) throw ValidationError("PBS target probability must lie in (0, 1)");
  return scan_minimize([&](double a) { return std::abs(surrogate.predict(a).p_f - p); }, range);
}

std::size_t ofs_bracket(TuningTrace& trace, const EvaluateNormFn& evaluate, std::size_t max_calls,
                        const OfsOptions& options) {
  if (trace.empty()) throw InsufficientHistoryError("bracketing needs a starting evaluation");
  std::size_t calls = 0;
  auto extreme = [&](bool smallest) {
    double a = trace.entries().front().a_norm;
    for (const auto& e : trace.entries()) a = smallest ? std::min(a, e.a_norm) : std::max(a, e.a_norm);
    return a;
  };
  for (std::size_t k = 0; !trace.a_left() && calls < max_calls && k < options.max_bracket_steps; ++k) {
    trace.append(evaluate(extreme(true) / 2.0), "bracket-left");
    ++calls;
  }
  for (std::size_t k = 0; !trace.a_right() && calls < max_calls && k < options.max_bracket_steps; ++k) {
    trace.append(evaluate(extreme(false) * 2.0), "bracket-right");
    ++calls;
  }
  return calls;
}

SigmoidFit fit_trace(const TuningTrace& trace) {
  std::vector<double> a, p;
  for (const auto& e : trace.entries()) {
    a.push_back(e.a_norm);
    p.push_back(e.stats.p_f);
  }
  std::optional<SigmoidFit> start;
  if (trace.a_left() && trace.a_right() && *trace.a_right() > *trace.a_left()) {
    start = sigmoid_initial_guess(*trace.a_left(), *trace.a_right());
  }
  return fit_sigmoid(a, p, start);
}

ARange ofs_draw_region(const TuningTrace& trace, const SigmoidFit& fit, double epsilon) {
  const bool bracket_ok = trace.a_left() && trace.a_right() && *trace.a_right() > *trace.a_left();
  ARange fitted{0.0, 0.0};
  bool fitted_ok = fit.theta_s > 0.0 && std::isfinite(fit.theta_s) && std::isfinite(fit.theta_o);
  if (fitted_ok) {
    fitted = {fit.inverse(epsilon), fit.inverse(1.0 - epsilon)};
    fitted.lo = std::max(fitted.lo, 1e-9);
    fitted_ok = fitted.hi > fitted.lo;
  }
  if (bracket_ok) {
    const ARange bracket{*trace.a_left(), *trace.a_right()};
    if (fitted_ok) {
      const ARange both{std::max(fitted.lo, bracket.lo), std::min(fitted.hi, bracket.hi)};
      if (both.hi > both.lo) return both;
    }
    return bracket;
  }
  if (fitted_ok) return fitted;
  // Degenerate history: fall back to the span of evaluated A values.
  double lo = trace.entries().front().a_norm;
  double hi = lo;
  for (const auto& e : trace.entries()) {
    lo = std::min(lo, e.a_norm);
    hi = std::max(hi, e.a_norm);
  }
  return {lo, hi};
}

void ofs_step(TuningTrace& trace, const EvaluateNormFn& evaluate, std::mt19937_64& rng,
              const OfsOptions& options) {
  std::vector<double> distinct;
  for (const auto& e : trace.entries()) distinct.push_back(e.a_norm);
  std::sort(distinct.begin(), distinct.end());
  if (std::unique(distinct.begin(), distinct.end()) - distinct.begin() < 2) {
    throw InsufficientHistoryError("OFS step needs at least 2 distinct A values in the trace");
  }
  SigmoidFit fit;
  try {
    fit = fit_trace(trace);
  } catch (const NumericalError&) {
    fit.theta_s = std::numeric_limits<double>::quiet_NaN();
  }
  const ARange region = ofs_draw_region(trace, fit, options.epsilon);
  std::uniform_real_distribution<double> draw(region.lo, region.hi);
  const double a_next = region.hi > region.lo ? draw(rng) : region.lo;
  trace.append(evaluate(a_next), "ofs");
}

TuningTrace run_ofs(const EvaluateNormFn& evaluate, double a0_norm, std::size_t max_trials,
                    std::mt19937_64& rng, const OfsOptions& options) {
  TuningTrace trace;
  if (max_trials == 0) return trace;
  trace.append(evaluate(a0_norm), "start");
  ofs_bracket(trace, evaluate, max_trials - trace.size(), options);
  while (trace.size() < max_trials) ofs_step(trace, evaluate, rng, options);
  return trace;
}

TuningTrace composed_strategy(const SurrogateView& surrogate, const EvaluateNormFn& evaluate,
                              std::size_t max_trials, std::mt19937_64& rng,
                              const ComposedOptions& options) {
  if (max_trials < 3) throw ValidationError("composed strategy needs max_trials >= 3");
  double first = 0.0;
  std::string first_origin = "mfs";
  try {
    first = mfs_propose(surrogate, options.range, options.batch_size);
  } catch (const NoFeasibleRegionError&) {
    first = pbs_propose(surrogate, 0.5, options.range);
    first_origin = "pbs-0.5";
  }
  const double second = pbs_propose(surrogate, options.p_high, options.range);
  const double third = pbs_propose(surrogate, options.p_low, options.range);

  TuningTrace trace;
  trace.append(evaluate(first), first_origin);
  trace.append(evaluate(second), "pbs-high");
  trace.append(evaluate(third), "pbs-low");
  ofs_bracket(trace, evaluate, max_trials - trace.size(), options.ofs);
  while (trace.size() < max_trials) ofs_step(trace, evaluate, rng, options.ofs);
  return trace;
}

}  // namespace qross
