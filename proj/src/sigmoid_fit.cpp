#include "qross/sigmoid_fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "qross/error.hpp"

namespace qross {

double sigmoid(double a, double theta_s, double theta_o) {
  return 1.0 / (1.0 + std::exp(-a * theta_s + theta_o));
}

double SigmoidFit::operator()(double a) const { return sigmoid(a, theta_s, theta_o); }

double SigmoidFit::inverse(double p) const {
  return (theta_o + std::log(p / (1.0 - p))) / theta_s;
}

SigmoidFit sigmoid_initial_guess(double a_left, double a_right) {
  if (!(a_right > a_left)) throw ValidationError("sigmoid initial guess needs a_right > a_left");
  SigmoidFit s;
  s.theta_s = 8.0 / (a_right - a_left);
  s.theta_o = s.theta_s * 0.5 * (a_left + a_right);
  return s;
}

namespace {

double sse(std::span<const double> a, std::span<const double> p, double ts, double to) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double r = sigmoid(a[k], ts, to) - p[k];
    s += r * r;
  }
  return s;
}

SigmoidFit guess_from_data(std::span<const double> a, std::span<const double> p) {
  const auto [lo_it, hi_it] = std::minmax_element(a.begin(), a.end());
  double left = -std::numeric_limits<double>::infinity();
  double right = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (p[k] <= 0.5) left = std::max(left, a[k]);
    if (p[k] > 0.5) right = std::min(right, a[k]);
  }
  if (std::isfinite(left) && std::isfinite(right) && right > left) {
    return sigmoid_initial_guess(left, right);
  }
  return sigmoid_initial_guess(*lo_it, *hi_it);
}

}  // namespace

SigmoidFit fit_sigmoid(std::span<const double> a, std::span<const double> p,
                       std::optional<SigmoidFit> start, std::size_t max_iterations) {
  if (a.size() != p.size()) throw DimensionError("fit_sigmoid: A and P_f lengths differ");
  std::size_t distinct = 0;
  {
    std::vector<double> sorted(a.begin(), a.end());
    std::sort(sorted.begin(), sorted.end());
    distinct = static_cast<std::size_t>(std::unique(sorted.begin(), sorted.end()) - sorted.begin());
  }
  if (distinct < 2) throw InsufficientHistoryError("sigmoid fit needs at least 2 distinct A values");

  SigmoidFit fit = start ? *start : guess_from_data(a, p);
  double current = sse(a, p, fit.theta_s, fit.theta_o);

  for (std::size_t it = 0; it < max_iterations; ++it) {
    // Normal equations of the linearised residuals.
    double jss = 0.0, jso = 0.0, joo = 0.0, gs = 0.0, go = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
      const double s = sigmoid(a[k], fit.theta_s, fit.theta_o);
      const double w = s * (1.0 - s);
      const double ds = w * a[k];  // dS/dtheta_s
      const double d_o = -w;       // dS/dtheta_o
      const double r = s - p[k];
      jss += ds * ds;
      jso += ds * d_o;
      joo += d_o * d_o;
      gs += ds * r;
      go += d_o * r;
    }
    const double ridge = 1e-12 * (jss + joo) + std::numeric_limits<double>::min();
    jss += ridge;
    joo += ridge;
    const double det = jss * joo - jso * jso;
    if (!(std::abs(det) > 0.0) || !std::isfinite(det)) break;
    const double step_s = -(joo * gs - jso * go) / det;
    const double step_o = -(jss * go - jso * gs) / det;

    double t = 1.0;
    bool improved = false;
    while (t > 1e-12) {
      const double ts = fit.theta_s + t * step_s;
      const double to = fit.theta_o + t * step_o;
      const double trial = sse(a, p, ts, to);
      if (std::isfinite(trial) && trial < current) {
        fit.theta_s = ts;
        fit.theta_o = to;
        improved = current - trial > 1e-30;
        current = trial;
        break;
      }
      t *= 0.5;
    }
    fit.iterations = it + 1;
    const double step_size = t * std::hypot(step_s, step_o);
    if (!improved || step_size <= 1e-12 * (1.0 + std::hypot(fit.theta_s, fit.theta_o))) break;
  }
  fit.residual = current;
  if (!std::isfinite(fit.theta_s) || !std::isfinite(fit.theta_o)) {
    throw NumericalError("sigmoid fit diverged");
  }
  return fit;
}

}  // namespace qross
