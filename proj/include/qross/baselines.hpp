#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "qross/dataset.hpp"
#include "qross/trace.hpp"

namespace qross {

// Generic tuners search raw A in [a_lo, a_hi].
struct TunerConfig {
  double a_lo = 1.0;
  double a_hi = 100.0;
  std::size_t n_init = 5;
  std::uint64_t seed = 0;
  std::size_t max_trials = 20;

  void validate() const;
};

// One tuner trial: A and its objective (best feasible fitness, +inf if none).
struct Observation {
  double a = 0.0;
  double objective = 0.0;
};

// Solver call at raw A.
using EvaluateRawFn = std::function<BatchStats(double a_raw)>;

TuningTrace random_search(const TunerConfig& config, const EvaluateRawFn& evaluate);

// Tree-structured Parzen estimator with gamma = 0.25 and 64 candidates drawn
// from the "good" density; returns the candidate maximising good/bad density.
// Uniform draw while fewer than n_init observations or when none is feasible.
double tpe_suggest(std::span<const Observation> history, const TunerConfig& config,
                   std::mt19937_64& rng);

// Gaussian-process BO with a squared-exponential kernel; hyperparameters by
// maximum marginal likelihood over a log grid; argmax of Expected Improvement
// on a 256-point grid. Uniform draw while fewer than n_init observations or
// when none is feasible.
double gp_bo_suggest(std::span<const Observation> history, const TunerConfig& config,
                     std::mt19937_64& rng);

using SuggestFn = std::function<double(std::span<const Observation>, const TunerConfig&,
                                       std::mt19937_64&)>;

// n_init uniform draws, then `suggest` for the remaining trials.
TuningTrace run_sequential_tuner(const TunerConfig& config, const EvaluateRawFn& evaluate,
                                 const SuggestFn& suggest);
TuningTrace run_tpe(const TunerConfig& config, const EvaluateRawFn& evaluate);
TuningTrace run_gp_bo(const TunerConfig& config, const EvaluateRawFn& evaluate);

namespace gp {

struct Hyperparameters {
  double length_scale = 0.2;
  double signal_variance = 1.0;
  double noise_variance = 1e-6;
};

// Posterior of a zero-mean GP with squared-exponential kernel on 1-D inputs.
class Posterior {
 public:
  Posterior(std::vector<double> x, std::vector<double> y, Hyperparameters hp);

  double log_marginal_likelihood() const { return log_ml_; }
  double jitter() const { return jitter_; }
  // Posterior mean and variance at x.
  std::pair<double, double> predict(double x) const;

 private:
  double kernel(double a, double b) const;

  std::vector<double> x_;
  Hyperparameters hp_;
  std::vector<double> chol_;  // lower-triangular, row-major n x n
  std::vector<double> alpha_;
  double jitter_ = 0.0;
  double log_ml_ = 0.0;
};

Posterior fit(std::vector<double> x, std::vector<double> y);
double expected_improvement(double mean, double variance, double best);

}  // namespace gp

}  // namespace qross
