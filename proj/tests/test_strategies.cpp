#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"

#include "qross/annealer.hpp"
#include "qross/error.hpp"
#include "qross/min_fitness.hpp"
#include "qross/sigmoid_fit.hpp"
#include "qross/strategies.hpp"
#include "qross/trace.hpp"

using namespace qross;

namespace {

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

class StubSurrogate final : public SurrogateView {
 public:
  std::function<Prediction(double)> fn;
  explicit StubSurrogate(std::function<Prediction(double)> f) : fn(std::move(f)) {}
  Prediction predict(double a) const override { return fn(a); }
};

double mc_expected_min(double mu, double sigma, int m, int draws, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(mu, sigma);
  double total = 0.0;
  for (int k = 0; k < draws; ++k) {
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < m; ++i) best = std::min(best, g(rng));
    total += best;
  }
  return total / draws;
}

// Deterministic stats at normalised A; p_f from `pf(a)`, quantised to B = 100.
BatchStats stub_stats(double a, double p) {
  BatchStats s;
  s.a_norm = a;
  s.a_raw = 50.0 * a;
  s.batch_size = 100;
  s.p_f = std::round(p * 100.0) / 100.0;
  s.e_avg = 100.0 + 50.0 * a;
  s.e_std = 5.0;
  if (s.p_f > 0.0) s.best_fitness = 100.0 + std::abs(a - 0.8) * 40.0;
  return s;
}

}  // namespace

TEST_CASE("expected min fitness: limits and Monte Carlo") {
  CHECK(expected_min_fitness(1.0 / 128.0, 100.0, 10.0, 128) == doctest::Approx(100.0).epsilon(1e-3));
  CHECK(std::isinf(expected_min_fitness(0.0, 100.0, 10.0, 128)));
  CHECK(std::isinf(expected_min_fitness(0.003, 100.0, 10.0, 128)));
  CHECK_THROWS_AS(expected_min_fitness(0.5, 100.0, 0.0, 128), ValidationError);
  const double mc = mc_expected_min(100.0, 10.0, 16, 200000, 1);
  CHECK(std::abs(expected_min_fitness(16.0 / 128.0, 100.0, 10.0, 128) - mc) / mc < 0.005);
  // Negative means work too (energies are not fitness values).
  const double mc_neg = mc_expected_min(-50.0, 10.0, 4, 200000, 2);
  CHECK(expected_min_fitness(4.0 / 128.0, -50.0, 10.0, 128) == doctest::Approx(mc_neg).epsilon(0.005));
}

TEST_CASE("expected min fitness monotonicity") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 30; ++rep) {
    const double mu = 10.0 + 990.0 * u(rng);
    const double sigma = 1.0 + 99.0 * u(rng);
    const double p = 0.05 + 0.9 * u(rng);
    const double base = expected_min_fitness(p, mu, sigma, 128);
    CHECK(expected_min_fitness(std::min(1.0, p + 0.05), mu, sigma, 128) <= base + 1e-9 * mu);
    CHECK(expected_min_fitness(p, mu, sigma, 256) <= base + 1e-9 * mu);
    CHECK(expected_min_fitness(p, mu + 1.0, sigma, 128) > base);
    CHECK(base <= mu + 1e-6 * mu);
  }
}

TEST_CASE("adaptive simpson") {
  CHECK(adaptive_simpson([](double x) { return x * x; }, 0.0, 3.0, 1e-10) == doctest::Approx(9.0).epsilon(1e-10));
  CHECK(adaptive_simpson([](double x) { return std::exp(-x * x); }, -10.0, 10.0, 1e-9) ==
        doctest::Approx(std::sqrt(M_PI)).epsilon(1e-8));
}

TEST_CASE("sigmoid fit recovers noiseless parameters") {
  std::vector<double> a, p;
  for (int k = 0; k < 12; ++k) {
    a.push_back(0.5 + 4.0 * k / 11.0);
    p.push_back(sigmoid(a.back(), 2.0, 5.0));
  }
  const auto fit = fit_sigmoid(a, p);
  CHECK(fit.theta_s == doctest::Approx(2.0).epsilon(1e-3));
  CHECK(fit.theta_o == doctest::Approx(5.0).epsilon(1e-3));
  CHECK(fit.inverse(0.5) == doctest::Approx(2.5).epsilon(1e-3));
  CHECK(fit(fit.inverse(0.9)) == doctest::Approx(0.9));
  CHECK_THROWS_AS(fit_sigmoid(std::vector<double>{1.0, 1.0}, std::vector<double>{0.0, 1.0}),
                  InsufficientHistoryError);
}

TEST_CASE("PBS on a logistic stub") {
  const StubSurrogate stub([](double a) { return Prediction{logistic(a), 10.0, 1.0}; });
  const ARange r{-10.0, 10.0};
  CHECK(std::abs(pbs_propose(stub, 0.5, r)) < 1e-3);
  CHECK(pbs_propose(stub, 0.9, r) == doctest::Approx(std::log(9.0)).epsilon(1e-3));
  CHECK(pbs_propose(stub, 0.2, r) <= pbs_propose(stub, 0.8, r));
  CHECK_THROWS_AS(pbs_propose(stub, 1.0, r), ValidationError);
}

TEST_CASE("MFS on a stub lands on the dense-grid minimiser inside the slope") {
  const StubSurrogate stub([](double a) { return Prediction{logistic(a - 5.0), 10.0 + a, 1.0}; });
  const ARange r{0.1, 20.0};
  const double a = mfs_propose(stub, r, 128);
  auto d = [&](double x) {
    const auto p = stub.predict(x);
    return expected_min_fitness(p.p_f, p.e_avg, p.e_std, 128);
  };
  double best = std::numeric_limits<double>::infinity(), arg = 0.0;
  for (int k = 0; k <= 20000; ++k) {
    const double x = r.lo + (r.hi - r.lo) * k / 20000.0;
    if (d(x) < best) {
      best = d(x);
      arg = x;
    }
  }
  CHECK(d(a) <= best + 1e-6);
  CHECK(a == doctest::Approx(arg).epsilon(1e-2));
  const double pf = stub.predict(a).p_f;
  CHECK(pf > 0.0);
  CHECK(pf < 1.0);
  CHECK(mfs_propose(stub, r, 128) == a);

  const StubSurrogate dead([](double) { return Prediction{1e-9, 10.0, 1.0}; });
  CHECK_THROWS_AS(mfs_propose(dead, r, 128), NoFeasibleRegionError);
}

TEST_CASE("trace bookkeeping") {
  TuningTrace t;
  t.append(stub_stats(0.2, 0.0));
  t.append(stub_stats(2.0, 1.0));
  t.append(stub_stats(0.9, 0.4));
  t.append(stub_stats(0.3, 0.0));
  CHECK(t.a_left() == 0.3);
  CHECK(t.a_right() == 2.0);
  // A newer evaluation at the same A replaces the older p_f.
  t.append(stub_stats(0.3, 0.1));
  CHECK(t.a_left() == 0.2);
  const auto best = t.best_so_far();
  for (std::size_t k = 1; k < best.size(); ++k) CHECK(best[k] <= best[k - 1]);
  CHECK(std::isinf(best[0]));
  REQUIRE(t.best_index());
  CHECK(t.entries()[*t.best_index()].a_norm == 0.9);
}

TEST_CASE("OFS draws stay inside the bracket with a step-function solver") {
  auto eval = [](double a) { return stub_stats(a, a > 1.0 ? 1.0 : 0.0); };
  TuningTrace trace;
  trace.append(eval(0.7));
  ofs_bracket(trace, eval, 10);
  REQUIRE(trace.a_left());
  REQUIRE(trace.a_right());
  std::mt19937_64 rng(4);
  for (int k = 0; k < 10; ++k) {
    const double lo = *trace.a_left();
    const double hi = *trace.a_right();
    ofs_step(trace, eval, rng);
    const double a = trace.entries().back().a_norm;
    CHECK(a >= lo);
    CHECK(a <= hi);
    CHECK(trace.entries().back().origin == "ofs");
  }
  CHECK_THROWS_AS(
      [&] {
        TuningTrace one;
        one.append(eval(0.5));
        ofs_step(one, eval, rng);
      }(),
      InsufficientHistoryError);
}

TEST_CASE("OFS is reproducible for a fixed seed") {
  auto eval = [](double a) { return stub_stats(a, logistic((a - 0.8) * 10.0)); };
  std::mt19937_64 r1(7), r2(7);
  const auto t1 = run_ofs(eval, 0.5, 15, r1);
  const auto t2 = run_ofs(eval, 0.5, 15, r2);
  REQUIRE(t1.size() == 15);
  for (std::size_t k = 0; k < 15; ++k) CHECK(t1.entries()[k].a_norm == t2.entries()[k].a_norm);
}

TEST_CASE("composed strategy call accounting") {
  const StubSurrogate stub([](double a) { return Prediction{logistic((a - 0.8) * 10.0), 100.0 + 50.0 * a, 5.0}; });
  std::size_t calls = 0;
  auto eval = [&](double a) {
    ++calls;
    return stub_stats(a, logistic((a - 0.8) * 10.0));
  };
  std::mt19937_64 rng(8);
  const auto t3 = composed_strategy(stub, eval, 3, rng);
  CHECK(calls == 3);
  CHECK(t3.size() == 3);
  CHECK(t3.entries()[0].origin == "mfs");
  CHECK(t3.entries()[1].stats.p_f > t3.entries()[2].stats.p_f);

  calls = 0;
  const auto t20 = composed_strategy(stub, eval, 20, rng);
  CHECK(calls == 20);
  const auto best = t20.best_so_far();
  for (std::size_t k = 1; k < best.size(); ++k) CHECK(best[k] <= best[k - 1]);
  CHECK_THROWS_AS(composed_strategy(stub, eval, 2, rng), ValidationError);
}

TEST_CASE("composed strategy on a real 10-city instance") {
  std::mt19937_64 prng(9);
  std::uniform_real_distribution<double> u(0.0, 100.0);
  std::vector<Point> pts(10);
  for (auto& p : pts) p = {u(prng), u(prng)};
  const auto inst = make_euclidean_instance("ten", pts);
  AnnealConfig cfg;
  cfg.sweeps = 200;
  const SimulatedAnnealer sa(cfg);
  Evaluator ev(inst, sa, 32, 1);
  const StubSurrogate stub([](double a) { return Prediction{logistic((a - 0.6) * 12.0), 300.0, 20.0}; });
  std::mt19937_64 rng(10);
  const auto t = composed_strategy(stub, [&](double a) { return ev.evaluate_norm(a); }, 20, rng);
  CHECK(ev.calls() == 20);
  const auto best = t.best_so_far();
  for (std::size_t k = 1; k < best.size(); ++k) CHECK(best[k] <= best[k - 1]);
  CHECK(std::isfinite(best.back()));
}
