#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>
#include <sstream>

#include "doctest.h"

#include "qross/error.hpp"
#include "qross/mvc.hpp"
#include "qross/stats.hpp"
#include "qross/tsp.hpp"
#include "qross/tsplib.hpp"

using namespace qross;

namespace {

SquareMatrix unit_triangle() {
  SquareMatrix d(3, 1.0);
  for (std::size_t i = 0; i < 3; ++i) d(i, i) = 0.0;
  return d;
}

std::vector<Point> random_points(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 100.0);
  std::vector<Point> p(n);
  for (auto& q : p) q = {u(rng), u(rng)};
  return p;
}

std::vector<double> off_diagonal(const SquareMatrix& d) {
  std::vector<double> v;
  for (std::size_t i = 0; i < d.size(); ++i)
    for (std::size_t j = 0; j < d.size(); ++j)
      if (i != j) v.push_back(d(i, j));
  return v;
}

double variance(const std::vector<double>& v) {
  const double s = stats::population_std(v);
  return s * s;
}

// Every tour starting at city 0, each undirected cycle once.
std::pair<double, std::vector<std::size_t>> brute_tour(const SquareMatrix& d) {
  std::vector<std::size_t> perm(d.size());
  std::iota(perm.begin(), perm.end(), 0);
  double best = 1e300;
  std::vector<std::size_t> arg;
  do {
    if (perm[1] > perm.back()) continue;
    double len = 0.0;
    for (std::size_t k = 0; k < perm.size(); ++k) len += d(perm[k], perm[(k + 1) % perm.size()]);
    if (len < best - 1e-9) {
      best = len;
      arg = perm;
    }
  } while (std::next_permutation(perm.begin() + 1, perm.end()));
  return {best, arg};
}

}  // namespace

TEST_CASE("TSP encoding on the unit triangle") {
  const auto inst = make_tsp_instance("tri", unit_triangle());
  const auto enc = encode_tsp(inst);
  CHECK(enc.objective.n_vars() == 9);
  CHECK(enc.penalty.n_vars() == 9);
  const std::vector<std::size_t> id{0, 1, 2};
  const auto x = encode_tour(id);
  CHECK(energy(enc.penalty, x) == 0.0);
  // Equal distances survive MVODM unchanged, so the objective sees three unit edges.
  CHECK(energy(enc.objective, x) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(energy(enc.penalty, Bits(9, 0)) == 6.0);
  CHECK(enc.penalty.offset() == 6.0);
}

TEST_CASE("penalty vanishes exactly on the six permutation matrices (n = 3)") {
  std::mt19937_64 rng(1);
  const auto inst = make_euclidean_instance("r3", random_points(3, rng));
  const auto enc = encode_tsp(inst);
  int zeros = 0;
  for (unsigned mask = 0; mask < 512; ++mask) {
    Bits x(9);
    for (std::size_t i = 0; i < 9; ++i) x[i] = (mask >> i) & 1U;
    // Permutation matrix: every row and column sums to one.
    bool perm = true;
    for (std::size_t r = 0; r < 3; ++r) {
      int rs = 0, cs = 0;
      for (std::size_t c = 0; c < 3; ++c) {
        rs += x[r * 3 + c];
        cs += x[c * 3 + r];
      }
      perm = perm && rs == 1 && cs == 1;
    }
    const double e = energy(enc.penalty, x);
    CHECK((e == 0.0) == perm);
    CHECK(e >= 0.0);
    zeros += e == 0.0;
  }
  CHECK(zeros == 6);
}

TEST_CASE("objective energy equals the cycle length under dist_solver") {
  std::mt19937_64 rng(2);
  for (int rep = 0; rep < 10; ++rep) {
    const std::size_t n = 3 + rng() % 8;
    const auto inst = make_euclidean_instance("r", random_points(n, rng));
    const auto enc = encode_tsp(inst);
    std::vector<std::size_t> tour(n);
    std::iota(tour.begin(), tour.end(), 0);
    std::shuffle(tour.begin(), tour.end(), rng);
    const auto x = encode_tour(tour);
    double len = 0.0;
    for (std::size_t k = 0; k < n; ++k) len += inst.dist_solver(tour[k], tour[(k + 1) % n]);
    CHECK(energy(enc.objective, x) == doctest::Approx(len).epsilon(1e-9));
    CHECK(is_feasible(enc, x));
    CHECK(decode_tour(n, x) == tour);
    const auto score = decode_and_score(enc, inst, x);
    REQUIRE(score);
    CHECK(*score == doctest::Approx(tour_length(inst.dist_original, tour)).epsilon(1e-12));
  }
}

TEST_CASE("decode and score basics") {
  const auto inst = make_tsp_instance("tri", unit_triangle());
  const auto enc = encode_tsp(inst);
  const std::vector<std::size_t> id{0, 1, 2};
  CHECK(tour_length(inst.dist_original, id) == 3.0);
  CHECK(!decode_and_score(enc, inst, Bits(9, 0)));
  CHECK(!decode_tour(3, Bits(9, 0)));
  CHECK_THROWS_AS(decode_and_score(enc, inst, Bits(8, 0)), DimensionError);
}

TEST_CASE("instance validation") {
  CHECK_THROWS_AS(make_tsp_instance("two", SquareMatrix(2, 0.0)), DegenerateInstanceError);
  auto d = unit_triangle();
  d(0, 1) = 2.0;
  CHECK_THROWS_AS(make_tsp_instance("asym", d), ValidationError);
  d = unit_triangle();
  d(1, 1) = 0.5;
  CHECK_THROWS_AS(make_tsp_instance("diag", d), ValidationError);
  d = unit_triangle();
  d(0, 2) = d(2, 0) = -1.0;
  CHECK_THROWS_AS(make_tsp_instance("neg", d), ValidationError);
}

TEST_CASE("MVODM matches an independent least-squares fit") {
  std::mt19937_64 rng(3);
  for (std::size_t n : {3, 5, 8, 12}) {
    const auto inst = make_euclidean_instance("ls", random_points(n, rng));
    const auto& d = inst.dist_original;
    const std::size_t m = n * (n - 1) / 2;
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
    Eigen::VectorXd y(static_cast<Eigen::Index>(m));
    std::size_t row = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j, ++row) {
        a(row, i) = 1.0;
        a(row, j) = 1.0;
        y(row) = d(i, j);
      }
    const Eigen::VectorXd coef = a.colPivHouseholderQr().solve(y);
    const Eigen::VectorXd resid = y - a * coef;
    const double mean_d = y.mean();
    row = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j, ++row) {
        CHECK(inst.dist_solver(i, j) == doctest::Approx(resid(row) + mean_d).epsilon(1e-9));
        CHECK(inst.dist_solver(i, j) == inst.dist_solver(j, i));
      }
    CHECK(std::accumulate(inst.pi.begin(), inst.pi.end(), 0.0) == doctest::Approx(0.0).epsilon(1e-9).scale(1.0));
  }
}

TEST_CASE("MVODM on additive and constant matrices") {
  const std::vector<double> a{1.0, 4.0, 2.5, 7.0, 3.0};
  SquareMatrix d(5, 0.0);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j)
      if (i != j) d(i, j) = a[i] + a[j];
  const auto r = mvodm_preprocess(d);
  CHECK(variance(off_diagonal(r.transformed)) == doctest::Approx(0.0).epsilon(1e-12).scale(1.0));

  SquareMatrix c(4, 7.0);
  for (std::size_t i = 0; i < 4; ++i) c(i, i) = 0.0;
  const auto rc = mvodm_preprocess(c);
  for (double p : rc.pi) CHECK(std::abs(p) < 1e-12);
  CHECK_THROWS_AS(mvodm_preprocess(SquareMatrix(2, 0.0)), DegenerateInstanceError);
}

TEST_CASE("MVODM reduces variance and keeps optimal tours (n = 7)") {
  std::mt19937_64 rng(4);
  for (int rep = 0; rep < 5; ++rep) {
    const auto inst = make_euclidean_instance("v", random_points(7, rng));
    CHECK(variance(off_diagonal(inst.dist_solver)) <= variance(off_diagonal(inst.dist_original)) + 1e-12);
    const auto [len_o, tour_o] = brute_tour(inst.dist_original);
    const auto [len_s, tour_s] = brute_tour(inst.dist_solver);
    CHECK(tour_o == tour_s);
    // Every cycle shifts by the same constant.
    const double shift = 2.0 * std::accumulate(inst.pi.begin(), inst.pi.end(), 0.0);
    CHECK(len_o - len_s == doctest::Approx(shift).epsilon(1e-9).scale(1.0));
  }
}

TEST_CASE("MVODM is invariant to relabelling cities") {
  std::mt19937_64 rng(5);
  auto pts = random_points(9, rng);
  const auto a = make_euclidean_instance("a", pts);
  std::vector<std::size_t> perm(9);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<Point> shuffled(9);
  for (std::size_t i = 0; i < 9; ++i) shuffled[i] = pts[perm[i]];
  const auto b = make_euclidean_instance("b", shuffled);
  for (std::size_t i = 0; i < 9; ++i)
    for (std::size_t j = 0; j < 9; ++j) CHECK(b.dist_solver(i, j) == a.dist_solver(perm[i], perm[j]));
}

TEST_CASE("instance JSON round trip and size flag") {
  std::mt19937_64 rng(6);
  const auto inst = make_euclidean_instance("rt", random_points(10, rng));
  CHECK(inst.size_flagged);
  const auto back = instance_from_json(instance_to_json(inst));
  CHECK(back.name == "rt");
  CHECK(back.dist_original == inst.dist_original);
  CHECK(back.dist_solver == inst.dist_solver);
  CHECK(back.coords == inst.coords);
  CHECK(!make_euclidean_instance("big", random_points(20, rng)).size_flagged);

  const auto path = std::filesystem::temp_directory_path() / "qross_rt_instance.json";
  write_instance(inst, path);
  CHECK(read_instance(path).dist_original == inst.dist_original);
  CHECK_THROWS_AS(instance_from_json(nlohmann::json{{"name", "x"}}), ParseError);
}

TEST_CASE("TSPLIB EUC_2D parsing") {
  std::istringstream in(
      "NAME : tiny\nTYPE : TSP\nDIMENSION : 3\nEDGE_WEIGHT_TYPE : EUC_2D\n"
      "NODE_COORD_SECTION\n1 0 0\n2 3 0\n3 0 4\nEOF\n");
  const auto inst = parse_tsplib(in);
  CHECK(inst.name == "tiny");
  CHECK(inst.dist_original(0, 1) == 3.0);
  CHECK(inst.dist_original(0, 2) == 4.0);
  CHECK(inst.dist_original(1, 2) == 5.0);
  CHECK(inst.size_flagged);
}

TEST_CASE("TSPLIB rounds to the nearest integer") {
  CHECK(tsplib_nint(2.5) == 3);
  CHECK(tsplib_nint(2.49) == 2);
  std::istringstream in(
      "NAME: r\nTYPE: TSP\nDIMENSION: 3\nEDGE_WEIGHT_TYPE: EUC_2D\n"
      "NODE_COORD_SECTION\n1 0 0\n2 1 1\n3 2.6 0\nEOF\n");
  const auto inst = parse_tsplib(in);
  CHECK(inst.dist_original(0, 1) == 1.0);  // sqrt(2)
  CHECK(inst.dist_original(0, 2) == 3.0);  // 2.6
  CHECK(inst.dist_original(1, 2) == 2.0);  // sqrt(3.56)
}

TEST_CASE("TSPLIB explicit full matrix") {
  std::istringstream in(
      "NAME: m\nTYPE: TSP\nDIMENSION: 3\nEDGE_WEIGHT_TYPE: EXPLICIT\nEDGE_WEIGHT_FORMAT: FULL_MATRIX\n"
      "EDGE_WEIGHT_SECTION\n0 2 9\n2 0 4\n9 4 0\nEOF\n");
  const auto inst = parse_tsplib(in);
  CHECK(inst.dist_original(0, 2) == 9.0);
  CHECK(!inst.coords);
}

TEST_CASE("TSPLIB malformed inputs") {
  auto parse = [](const std::string& s) {
    std::istringstream in(s);
    return parse_tsplib(in);
  };
  CHECK_THROWS_AS(parse("NAME: x\nTYPE: TSP\nDIMENSION: 3\nEDGE_WEIGHT_TYPE: EUC_2D\n"
                        "NODE_COORD_SECTION\n1 0 0\n2 3 0\nEOF\n"),
                  ParseError);
  CHECK_THROWS_AS(parse("NAME: x\nTYPE: TSP\nDIMENSION: 3\nEDGE_WEIGHT_TYPE: GEO\n"), ParseError);
  CHECK_THROWS_AS(parse("NAME: x\nTYPE: ATSP\nDIMENSION: 3\n"), ParseError);
  CHECK_THROWS_AS(parse("NAME: x\nTYPE: TSP\nDIMENSION: three\n"), ParseError);
  CHECK_THROWS_AS(parse("NAME: x\nTYPE: TSP\nEDGE_WEIGHT_TYPE: EUC_2D\n"), ParseError);
  CHECK_THROWS_AS(parse("just some text\n"), ParseError);
}

TEST_CASE("MVC encoding on K3") {
  MvcInstance k3{3, {{0, 1}, {1, 2}, {0, 2}}, {1.0, 1.0, 1.0}};
  const auto enc = encode_mvc(k3);
  const auto total = add_scaled(enc.objective, enc.penalty, 2.0);
  CHECK(energy(total, Bits{0, 1, 1}) == 2.0);
  CHECK(energy(total, Bits{0, 0, 0}) == 6.0);
  CHECK(energy(enc.penalty, Bits{1, 1, 1}) == 0.0);
  CHECK(energy(enc.objective, Bits{1, 1, 1}) == 3.0);
  // Brute force: the cheapest total energy is a 2-node cover.
  double best = 1e9;
  for (unsigned mask = 0; mask < 8; ++mask) {
    Bits u{static_cast<std::uint8_t>(mask & 1U), static_cast<std::uint8_t>((mask >> 1) & 1U),
           static_cast<std::uint8_t>((mask >> 2) & 1U)};
    best = std::min(best, energy(total, u));
  }
  CHECK(best == 2.0);
}

TEST_CASE("MVC full cover on a random graph and validation") {
  std::mt19937_64 rng(8);
  MvcInstance g{6, {}, {}};
  std::uniform_real_distribution<double> w(0.5, 2.0);
  for (std::size_t i = 0; i < 6; ++i) g.weights.push_back(w(rng));
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = i + 1; j < 6; ++j)
      if (rng() % 2) g.edges.emplace_back(i, j);
  const auto enc = encode_mvc(g);
  const Bits all(6, 1);
  CHECK(energy(enc.penalty, all) == 0.0);
  CHECK(energy(enc.objective, all) ==
        doctest::Approx(std::accumulate(g.weights.begin(), g.weights.end(), 0.0)).epsilon(1e-12));

  CHECK_THROWS_AS(validate(MvcInstance{2, {{0, 0}}, {1, 1}}), ValidationError);
  CHECK_THROWS_AS(validate(MvcInstance{2, {{0, 2}}, {1, 1}}), ValidationError);
  CHECK_THROWS_AS(validate(MvcInstance{2, {{0, 1}, {1, 0}}, {1, 1}}), ValidationError);
  CHECK_THROWS_AS(validate(MvcInstance{2, {{0, 1}}, {1, -1}}), ValidationError);
}
