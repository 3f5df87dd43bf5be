#pragma once

#include <cstddef>
#include <functional>

namespace qross {

// Expected minimum of m = p_f * b i.i.d. N(e_avg, e_std^2) draws, computed as
//   E[min] = L + int_L^U (1 - Phi(z))^m dz,   L = mu - 8 sigma, U = mu + 8 sigma
// which equals int_0^U (1 - Phi)^m dz whenever L >= 0 (the integrand is 1 to
// double precision below L) and stays correct for energies that go negative.
// m is real-valued. Returns +infinity when p_f < 1 / (2 b).
double expected_min_fitness(double p_f, double e_avg, double e_std, std::size_t b);

// Adaptive Simpson on [a, b] to relative tolerance `rel_tol`.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double rel_tol, int max_depth = 40);

}  // namespace qross
