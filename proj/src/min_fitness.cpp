#include "qross/min_fitness.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "qross/error.hpp"

namespace qross {

namespace {

struct Panel {
  double a, b, fa, fm, fb, whole;
};

double simpson_recurse(const std::function<double(double)>& f, const Panel& p, double tol,
                       int depth) {
  const double m = 0.5 * (p.a + p.b);
  const double lm = 0.5 * (p.a + m);
  const double rm = 0.5 * (m + p.b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - p.a) / 6.0 * (p.fa + 4.0 * flm + p.fm);
  const double right = (p.b - m) / 6.0 * (p.fm + 4.0 * frm + p.fb);
  const double diff = left + right - p.whole;
  if (depth <= 0 || std::abs(diff) <= 15.0 * tol) return left + right + diff / 15.0;
  return simpson_recurse(f, {p.a, m, p.fa, flm, p.fm, left}, 0.5 * tol, depth - 1) +
         simpson_recurse(f, {m, p.b, p.fm, frm, p.fb, right}, 0.5 * tol, depth - 1);
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double rel_tol,
                        int max_depth) {
  const double fa = f(a);
  const double fb = f(b);
  const double m = 0.5 * (a + b);
  const double fm = f(m);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  // Coarse magnitude estimate for the absolute tolerance; a few extra probes
  // keep sharp transitions from being missed.
  double magnitude = std::abs(whole);
  constexpr int kProbes = 16;
  double probe_sum = 0.0;
  for (int k = 0; k < kProbes; ++k) {
    probe_sum += std::abs(f(a + (b - a) * (k + 0.5) / kProbes));
  }
  magnitude = std::max(magnitude, probe_sum * (b - a) / kProbes);
  const double tol = std::max(rel_tol * magnitude, std::numeric_limits<double>::min());
  // Start from 8 panels so a narrow feature is not skipped by the first estimate.
  constexpr int kPanels = 8;
  double total = 0.0;
  for (int k = 0; k < kPanels; ++k) {
    const double pa = a + (b - a) * k / kPanels;
    const double pb = a + (b - a) * (k + 1) / kPanels;
    const double pm = 0.5 * (pa + pb);
    const double fpa = f(pa), fpm = f(pm), fpb = f(pb);
    total += simpson_recurse(f, {pa, pb, fpa, fpm, fpb, (pb - pa) / 6.0 * (fpa + 4.0 * fpm + fpb)},
                             tol / kPanels, max_depth);
  }
  return total;
}

double expected_min_fitness(double p_f, double e_avg, double e_std, std::size_t b) {
  if (!(e_std > 0.0) || !std::isfinite(e_std)) {
    throw ValidationError("expected_min_fitness: e_std must be positive");
  }
  if (b < 1) throw ValidationError("expected_min_fitness: batch size must be >= 1");
  if (!(p_f >= 0.0 && p_f <= 1.0)) throw ValidationError("expected_min_fitness: p_f outside [0, 1]");
  const double bd = static_cast<double>(b);
  if (p_f < 1.0 / (2.0 * bd)) return std::numeric_limits<double>::infinity();
  const double m = p_f * bd;
  const double lower = e_avg - 8.0 * e_std;
  const double upper = e_avg + 8.0 * e_std;
  const double inv = 1.0 / (e_std * std::numbers::sqrt2);
  auto survival_m = [&](double z) {
    const double survival = 0.5 * std::erfc((z - e_avg) * inv);  // 1 - Phi(z)
    return std::pow(survival, m);
  };
  return lower + adaptive_simpson(survival_m, lower, upper, 1e-6);
}

}  // namespace qross
