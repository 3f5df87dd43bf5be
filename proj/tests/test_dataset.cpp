#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include "doctest.h"

#include "qross/annealer.hpp"
#include "qross/dataset.hpp"
#include "qross/error.hpp"
#include "qross/features.hpp"
#include "qross/stats.hpp"
#include "qross/tsp.hpp"

using namespace qross;

namespace {

std::vector<Point> random_points(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 100.0);
  std::vector<Point> p(n);
  for (auto& q : p) q = {u(rng), u(rng)};
  return p;
}

// Kruskal with union-find.
double kruskal(const SquareMatrix& d) {
  const std::size_t n = d.size();
  std::vector<std::tuple<double, std::size_t, std::size_t>> edges;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) edges.emplace_back(d(i, j), i, j);
  std::sort(edges.begin(), edges.end());
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  double total = 0.0;
  for (const auto& [w, i, j] : edges) {
    const auto a = find(i), b = find(j);
    if (a != b) {
      parent[a] = b;
      total += w;
    }
  }
  return total;
}

// Step-function stub: p_f = 0 below 10, 1 above 40, linear in between.
BatchStats stub_eval(double a) {
  BatchStats s;
  s.instance_id = "stub";
  s.a_raw = a;
  s.a_norm = a / 50.0;
  s.batch_size = 100;
  s.p_f = std::clamp(std::round((a - 10.0) / 30.0 * 100.0) / 100.0, 0.0, 1.0);
  s.e_avg = a;
  s.e_std = 1.0;
  if (s.p_f > 0.0) s.best_fitness = 100.0;
  return s;
}

DatasetRecord sample_record(std::mt19937_64& rng, std::size_t k) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  DatasetRecord r;
  r.stats.instance_id = "inst_" + std::to_string(k % 7);
  r.stats.batch_size = 128;
  r.stats.p_f = static_cast<double>(rng() % 129) / 128.0;
  r.stats.a_raw = 1.0 + 99.0 * u(rng);
  r.stats.a_norm = r.stats.a_raw / 70.0;
  r.stats.e_avg = 300.0 * u(rng);
  r.stats.e_std = 10.0 * u(rng);
  if (r.stats.p_f > 0.0) r.stats.best_fitness = 250.0 + u(rng);
  r.features.resize(kFeatureCount);
  for (auto& f : r.features) f = u(rng) * 1e3 - 500.0;
  r.split = k % 5 == 0 ? Split::Test : Split::Train;
  return r;
}

}  // namespace

TEST_CASE("stats helpers") {
  const std::vector<double> v{1.0, 2.0, 3.0};
  CHECK(stats::mean(v) == 2.0);
  CHECK(stats::population_std(v) == doctest::Approx(std::sqrt(2.0 / 3.0)));
  CHECK(stats::sample_std(v) == doctest::Approx(1.0));
  CHECK(stats::quantile_sorted(v, 0.25) == doctest::Approx(1.5));
  CHECK(stats::ranks(std::vector<double>{3.0, 1.0, 3.0}) == std::vector<double>{2.5, 1.0, 2.5});
  CHECK(stats::spearman(std::vector<double>{1, 2, 3, 4}, std::vector<double>{1, 4, 9, 16}) == doctest::Approx(1.0));
  CHECK(stats::normal_cdf(0.0) == doctest::Approx(0.5));
  CHECK(stats::normal_cdf(1.959963985) == doctest::Approx(0.975).epsilon(1e-8));
}

TEST_CASE("batch statistics") {
  SquareMatrix d(3, 1.0);
  for (std::size_t i = 0; i < 3; ++i) d(i, i) = 0.0;
  const auto inst = make_tsp_instance("tri", d);
  const auto enc = encode_tsp(inst);
  const std::vector<std::size_t> tour{0, 1, 2};
  const Bits good = encode_tour(tour);
  const Bits bad(9, 0);

  SolveBatch all;
  for (int k = 0; k < 128; ++k) all.solutions.push_back({good, 3.0});
  CHECK(batch_stats(all, enc, inst, 2.0).p_f == 1.0);
  CHECK(batch_stats(all, enc, inst, 2.0).best_fitness == 3.0);

  SolveBatch half;
  for (int k = 0; k < 128; ++k) half.solutions.push_back({k % 2 ? good : bad, 1.0});
  CHECK(batch_stats(half, enc, inst, 2.0).p_f == 0.5);

  SolveBatch three{{{bad, 1.0}, {bad, 2.0}, {bad, 3.0}}};
  const auto s = batch_stats(three, enc, inst, 2.0);
  CHECK(s.e_avg == doctest::Approx(2.0));
  CHECK(s.e_std == doctest::Approx(std::sqrt(2.0 / 3.0)));
  CHECK(s.p_f == 0.0);
  CHECK(!s.best_fitness);
  CHECK(s.a_norm == doctest::Approx(2.0 / solver_distance_scale(inst)));
  CHECK_THROWS_AS(batch_stats(SolveBatch{}, enc, inst, 1.0), ValidationError);
}

TEST_CASE("sample_a_grid budget accounting and bracket") {
  const auto g = sample_a_grid(stub_eval, 25.0, 20);
  CHECK(g.records.size() - g.bracket_probes == 20);
  CHECK(stub_eval(g.bracket.a_low).p_f == 0.0);
  CHECK(stub_eval(g.bracket.a_high).p_f == 1.0);
  std::size_t inside = 0;
  for (std::size_t k = g.bracket_probes; k < g.records.size(); ++k) {
    const double a = g.records[k].a_raw;
    CHECK(a > g.bracket.a_low / 8.0);
    CHECK(a < g.bracket.a_high * 8.0);
    inside += a > g.bracket.a_low && a < g.bracket.a_high;
  }
  CHECK(inside == 12);
  CHECK_THROWS_AS(sample_a_grid(stub_eval, 25.0, 5), ValidationError);
  CHECK_THROWS(sample_a_grid([](double a) { auto s = stub_eval(a); s.p_f = 0.5; return s; }, 25.0, 12));
}

TEST_CASE("evaluator counts calls and is reproducible") {
  std::mt19937_64 rng(1);
  const auto inst = make_euclidean_instance("e", random_points(5, rng));
  AnnealConfig cfg;
  cfg.sweeps = 200;
  const SimulatedAnnealer sa(cfg);
  Evaluator a(inst, sa, 16, 9), b(inst, sa, 16, 9);
  const auto s1 = a.evaluate(80.0);
  const auto s2 = a.evaluate(80.0);
  CHECK(a.calls() == 2);
  CHECK(b.evaluate(80.0) == s1);
  CHECK(b.evaluate(80.0) == s2);
  CHECK(a.evaluate_norm(1.0).a_raw == doctest::Approx(a.scale()));
  CHECK_THROWS_AS(a.evaluate(-1.0), ValidationError);
}

TEST_CASE("features: MST oracle and relabelling invariance") {
  std::mt19937_64 rng(2);
  for (int rep = 0; rep < 5; ++rep) {
    const auto inst = make_euclidean_instance("f", random_points(12, rng));
    CHECK(mst_length(inst.dist_solver) == doctest::Approx(kruskal(inst.dist_solver)).epsilon(1e-12));
    CHECK(mst_length(inst.dist_original) == doctest::Approx(kruskal(inst.dist_original)).epsilon(1e-12));
  }
  auto pts = random_points(11, rng);
  const auto a = make_euclidean_instance("a", pts);
  std::shuffle(pts.begin(), pts.end(), rng);
  const auto b = make_euclidean_instance("b", pts);
  CHECK(extract_features(a, 0.7) == extract_features(b, 0.7));
  const auto f = extract_features(a, 0.7);
  CHECK(f.size() == kFeatureCount);
  CHECK(f[0] == 11.0);
  CHECK(f[kLogANormFeature] == doctest::Approx(std::log(0.7)));
  CHECK_THROWS_AS(extract_features(a, 0.0), ValidationError);
}

TEST_CASE("features of an all-equal distance matrix") {
  SquareMatrix d(6, 4.0);
  for (std::size_t i = 0; i < 6; ++i) d(i, i) = 0.0;
  const auto f = extract_features(make_tsp_instance("eq", d), 1.0);
  CHECK(f[1] == doctest::Approx(4.0));
  CHECK(f[2] == doctest::Approx(0.0));
  for (std::size_t k = 5; k <= 9; ++k) CHECK(f[k] == doctest::Approx(4.0));
  CHECK(f[11] == doctest::Approx(0.0));
}

TEST_CASE("corpus round trip and validation") {
  std::mt19937_64 rng(3);
  std::vector<DatasetRecord> records;
  for (std::size_t k = 0; k < 100; ++k) records.push_back(sample_record(rng, k));
  const auto path = std::filesystem::temp_directory_path() / "qross_corpus_rt.jsonl";
  write_corpus(records, path);
  CHECK(read_corpus(path) == records);

  const auto empty = std::filesystem::temp_directory_path() / "qross_corpus_empty.jsonl";
  { std::ofstream(empty).flush(); }
  CHECK(read_corpus(empty).empty());

  auto bad = records[0];
  bad.stats.p_f = 1.2;
  try {
    validate_record(bad);
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("p_f") != std::string::npos);
  }
  const auto broken = std::filesystem::temp_directory_path() / "qross_corpus_bad.jsonl";
  {
    std::ofstream out(broken);
    out << "{\"schema\":1}\n" << record_to_json(records[0]).dump() << "\n{not json\n";
  }
  try {
    read_corpus(broken);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find(":3") != std::string::npos);
  }
}
