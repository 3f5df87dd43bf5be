#pragma once

#include <cstddef>
#include <functional>
#include <random>

#include "qross/dataset.hpp"
#include "qross/sigmoid_fit.hpp"
#include "qross/surrogate.hpp"
#include "qross/trace.hpp"

namespace qross {

struct ARange {
  double lo = 0.02;
  double hi = 4.0;
};

// One solver call at normalised A.
using EvaluateNormFn = std::function<BatchStats(double a_norm)>;

// Minimises f over [lo, hi]: 64-point grid (log-spaced when lo > 0, linear
// otherwise), then golden-section refinement between the neighbours of the
// best grid point. Ties keep the smallest A.
double scan_minimize(const std::function<double(double)>& f, ARange range,
                     std::size_t grid_points = 64);

// Minimum Fitness Strategy: argmin_A of the expected minimum fitness under
// the surrogate's predictions. No solver calls. Throws NoFeasibleRegionError
// when the expectation is +inf over the whole range.
double mfs_propose(const SurrogateView& surrogate, ARange range, std::size_t batch_size = 128);

// P_f-based Strategy: argmin_A |P_f(A) - p|. No solver calls.
double pbs_propose(const SurrogateView& surrogate, double p, ARange range);

struct OfsOptions {
  double epsilon = 0.01;
  std::size_t max_bracket_steps = 8;
};

// Extends the trace by halving below its smallest A until p_f == 0 and
// doubling above its largest A until p_f == 1, spending at most `max_calls`
// evaluations. Returns the number of evaluations made.
std::size_t ofs_bracket(TuningTrace& trace, const EvaluateNormFn& evaluate, std::size_t max_calls,
                        const OfsOptions& options = {});

// Fits the sigmoid to the trace's (A, P_f) history.
SigmoidFit fit_trace(const TuningTrace& trace);

// Interval {A : eps < S(A) < 1 - eps} intersected with the current bracket
// (when the bracket is valid and the intersection non-empty).
ARange ofs_draw_region(const TuningTrace& trace, const SigmoidFit& fit, double epsilon);

// One iteration of the online fitting loop: fit, draw, evaluate, append.
void ofs_step(TuningTrace& trace, const EvaluateNormFn& evaluate, std::mt19937_64& rng,
              const OfsOptions& options = {});

// Plain online fitting from a starting A (no surrogate): bracket, then steps.
TuningTrace run_ofs(const EvaluateNormFn& evaluate, double a0_norm, std::size_t max_trials,
                    std::mt19937_64& rng, const OfsOptions& options = {});

struct ComposedOptions {
  ARange range;
  std::size_t batch_size = 128;
  double p_high = 0.8;
  double p_low = 0.2;
  OfsOptions ofs;
};

// Trial 1: MFS. Trials 2-3: PBS at p_high and p_low. Remaining trials:
// bracketing probes, then OFS steps. Exactly max_trials evaluations.
TuningTrace composed_strategy(const SurrogateView& surrogate, const EvaluateNormFn& evaluate,
                              std::size_t max_trials, std::mt19937_64& rng,
                              const ComposedOptions& options = {});

}  // namespace qross
