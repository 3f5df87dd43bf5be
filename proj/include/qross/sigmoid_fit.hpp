#pragma once

#include <cstddef>
#include <optional>
#include <span>

namespace qross {

// S(A) = 1 / (1 + exp(-A * theta_s + theta_o))
struct SigmoidFit {
  double theta_s = 1.0;
  double theta_o = 0.0;
  double residual = 0.0;  // sum of squared residuals at the solution
  std::size_t iterations = 0;

  double operator()(double a) const;
  // A at which S(A) == p, p in (0, 1).
  double inverse(double p) const;
};

double sigmoid(double a, double theta_s, double theta_o);

// Starting point: theta_s = 8 / (a_right - a_left), theta_o = theta_s * midpoint,
// so the fitted curve spans roughly [0.02, 0.98] across the bracket.
SigmoidFit sigmoid_initial_guess(double a_left, double a_right);

// Unweighted least squares by Gauss-Newton with backtracking. Without an
// explicit start the bracket is taken from the data (largest A with p <= 0.5
// and smallest A with p > 0.5, or the A range when that fails).
SigmoidFit fit_sigmoid(std::span<const double> a, std::span<const double> p,
                       std::optional<SigmoidFit> start = std::nullopt,
                       std::size_t max_iterations = 200);

}  // namespace qross
