#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"

#include "qross/baselines.hpp"
#include "qross/error.hpp"

using namespace qross;

namespace {

BatchStats quad_eval(double a, double center) {
  BatchStats s;
  s.a_raw = a;
  s.a_norm = a;
  s.batch_size = 10;
  s.p_f = 1.0;
  s.best_fitness = (a - center) * (a - center) + 10.0;
  return s;
}

}  // namespace

TEST_CASE("tuner config validation") {
  TunerConfig c;
  CHECK_NOTHROW(c.validate());
  c.a_lo = 0.0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = {};
  c.a_hi = 0.5;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = {};
  c.n_init = 20;
  CHECK_THROWS_AS(c.validate(), ValidationError);
}

TEST_CASE("random search is reproducible and spends every trial") {
  TunerConfig c;
  c.seed = 3;
  std::size_t calls = 0;
  auto eval = [&](double a) {
    ++calls;
    return quad_eval(a, 37.0);
  };
  const auto t1 = random_search(c, eval);
  const auto t2 = random_search(c, eval);
  CHECK(calls == 40);
  CHECK(t1.size() == 20);
  for (std::size_t k = 0; k < 20; ++k) {
    CHECK(t1.entries()[k].a_norm == t2.entries()[k].a_norm);
    CHECK(t1.entries()[k].a_norm >= 1.0);
    CHECK(t1.entries()[k].a_norm <= 100.0);
  }
}

TEST_CASE("random search with 1000 trials gets within 5% of the minimiser") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    TunerConfig c;
    c.seed = seed;
    c.max_trials = 1000;
    const auto t = random_search(c, [](double a) { return quad_eval(a, 37.0); });
    const double a = t.entries()[*t.best_index()].a_norm;
    CHECK(std::abs(a - 37.0) <= 0.05 * 37.0);
  }
}

TEST_CASE("TPE cold start, infeasible history and determinism") {
  TunerConfig c;
  std::vector<Observation> few{{10.0, 5.0}};
  std::mt19937_64 r1(1), r2(1);
  std::uniform_real_distribution<double> u(c.a_lo, c.a_hi);
  CHECK(tpe_suggest(few, c, r1) == u(r2));

  const double inf = std::numeric_limits<double>::infinity();
  std::vector<Observation> dead(8, Observation{50.0, inf});
  for (std::size_t k = 0; k < dead.size(); ++k) dead[k].a = 5.0 + 10.0 * static_cast<double>(k);
  std::mt19937_64 r3(2), r4(2);
  CHECK(tpe_suggest(dead, c, r3) == u(r4));

  std::vector<Observation> hist;
  for (int k = 0; k < 10; ++k) hist.push_back({5.0 + 9.0 * k, std::abs(40.0 - (5.0 + 9.0 * k))});
  std::mt19937_64 r5(5), r6(5);
  CHECK(tpe_suggest(hist, c, r5) == tpe_suggest(hist, c, r6));
}

TEST_CASE("TPE suggestions fall in the basin of a single-minimum objective") {
  TunerConfig c;
  std::vector<Observation> hist;
  std::mt19937_64 draw(11);
  std::uniform_real_distribution<double> u(1.0, 100.0);
  for (int k = 0; k < 20; ++k) {
    const double a = u(draw);
    hist.push_back({a, (a - 30.0) * (a - 30.0)});
  }
  auto sorted = hist;
  std::sort(sorted.begin(), sorted.end(), [](auto& x, auto& y) { return x.objective < y.objective; });
  double lo = 1e9, hi = -1e9;
  for (std::size_t k = 0; k < 5; ++k) {  // gamma = 0.25 of 20
    lo = std::min(lo, sorted[k].a);
    hi = std::max(hi, sorted[k].a);
  }
  int inside = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed);
    const double a = tpe_suggest(hist, c, rng);
    inside += a >= lo && a <= hi;
  }
  CHECK(inside >= 80);
}

TEST_CASE("GP posterior interpolates noiseless data") {
  const std::vector<double> x{0.1, 0.3, 0.5, 0.9};
  const std::vector<double> y{1.0, -0.5, 0.2, 0.7};
  const gp::Posterior post(x, y, {0.2, 1.0, 1e-10});
  for (std::size_t k = 0; k < x.size(); ++k) {
    const auto [m, v] = post.predict(x[k]);
    CHECK(m == doctest::Approx(y[k]).epsilon(1e-5));
    CHECK(v < 1e-6);
  }
  CHECK(post.predict(5.0).second == doctest::Approx(1.0).epsilon(1e-6));
  // Duplicate inputs with zero noise are singular; jitter rescues the factorisation.
  const gp::Posterior dup({0.5, 0.5}, {1.0, 1.0}, {0.2, 1.0, 0.0});
  CHECK(dup.jitter() > 0.0);
  CHECK(gp::expected_improvement(0.0, 0.0, 1.0) == 1.0);
  CHECK(gp::expected_improvement(2.0, 0.0, 1.0) == 0.0);
  CHECK(gp::expected_improvement(1.0, 1.0, 1.0) == doctest::Approx(1.0 / std::sqrt(2.0 * M_PI)));
}

TEST_CASE("GP-BO explores away from a duplicated point") {
  TunerConfig c;
  c.n_init = 2;
  const std::vector<Observation> hist{{50.0, 3.0}, {50.0, 3.0}};
  std::mt19937_64 rng(1);
  CHECK(gp_bo_suggest(hist, c, rng) != doctest::Approx(50.0).epsilon(1e-3));
}

TEST_CASE("GP-BO on a noiseless quadratic suggests near the minimiser") {
  TunerConfig c;
  std::vector<Observation> hist;
  for (double a : {5.0, 18.0, 27.0, 52.0, 63.0, 75.0, 88.0, 97.0}) hist.push_back({a, (a - 40.0) * (a - 40.0)});
  std::mt19937_64 rng(1);
  const double a = gp_bo_suggest(hist, c, rng);
  CHECK(std::abs(a - 40.0) <= 4.0);
}

TEST_CASE("GP-BO imputes infeasible trials and runs end to end") {
  TunerConfig c;
  c.seed = 4;
  std::size_t calls = 0;
  auto eval = [&](double a) {
    ++calls;
    auto s = quad_eval(a, 60.0);
    if (a < 30.0) {
      s.p_f = 0.0;
      s.best_fitness.reset();
    }
    return s;
  };
  const auto t = run_gp_bo(c, eval);
  CHECK(calls == 20);
  const auto best = t.best_so_far();
  for (std::size_t k = 1; k < best.size(); ++k) CHECK(best[k] <= best[k - 1]);
  CHECK(std::abs(t.entries()[*t.best_index()].a_norm - 60.0) < 10.0);

  calls = 0;
  const auto tp = run_tpe(c, eval);
  CHECK(calls == 20);
  CHECK(tp.size() == 20);
}
