#include "qross/tsp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include "qross/error.hpp"

namespace qross {

namespace {

void validate_distance_matrix(const SquareMatrix& dist) {
  const std::size_t n = dist.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (dist(i, i) != 0.0) {
      throw ValidationError("distance matrix has non-zero diagonal at " + std::to_string(i));
    }
    for (std::size_t j = 0; j < n; ++j) {
      const double d = dist(i, j);
      if (!std::isfinite(d) || d < 0.0) {
        throw ValidationError("distance matrix entry (" + std::to_string(i) + ", " +
                              std::to_string(j) + ") is negative or non-finite");
      }
      if (d != dist(j, i)) throw ValidationError("distance matrix is not symmetric");
    }
  }
}

}  // namespace

MvodmResult mvodm_preprocess(const SquareMatrix& dist) {
  const std::size_t n = dist.size();
  if (n < 3) {
    throw DegenerateInstanceError("MVODM needs at least 3 cities (normal equations singular)");
  }
  // Normal equations of d_ij ~ mu + pi_i + pi_j with sum(pi) = 0 reduce to
  //   mu   = mean of off-diagonal entries
  //   pi_i = (r_i - (n-1) mu) / (n-2),  r_i = sum_{j != i} d_ij
  // Sums run over sorted values so relabelling cities permutes pi exactly.
  std::vector<double> row_sum(n, 0.0);
  std::vector<double> entries;
  for (std::size_t i = 0; i < n; ++i) {
    entries.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) entries.push_back(dist(i, j));
    }
    std::sort(entries.begin(), entries.end());
    for (double e : entries) row_sum[i] += e;
  }
  std::vector<double> sorted_rows = row_sum;
  std::sort(sorted_rows.begin(), sorted_rows.end());
  double total = 0.0;
  for (double r : sorted_rows) total += r;
  const double nn = static_cast<double>(n);
  const double mu = total / (nn * (nn - 1.0));
  MvodmResult out{SquareMatrix(n), std::vector<double>(n)};
  for (std::size_t i = 0; i < n; ++i) out.pi[i] = (row_sum[i] - (nn - 1.0) * mu) / (nn - 2.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) out.transformed(i, j) = dist(i, j) - (out.pi[i] + out.pi[j]);
    }
  }
  return out;
}

TspInstance make_tsp_instance(std::string name, SquareMatrix dist,
                              std::optional<std::vector<Point>> coords) {
  const std::size_t n = dist.size();
  if (n < 3) throw DegenerateInstanceError("TSP instance needs at least 3 cities");
  if (coords && coords->size() != n) {
    throw DimensionError("coordinate count does not match distance matrix dimension");
  }
  validate_distance_matrix(dist);
  auto mvodm = mvodm_preprocess(dist);
  TspInstance inst;
  inst.name = std::move(name);
  inst.n_cities = n;
  inst.coords = std::move(coords);
  inst.dist_original = std::move(dist);
  inst.dist_solver = std::move(mvodm.transformed);
  inst.pi = std::move(mvodm.pi);
  inst.size_flagged = n >= 90 || n <= 14;
  return inst;
}

TspInstance make_euclidean_instance(std::string name, std::vector<Point> coords) {
  const std::size_t n = coords.size();
  SquareMatrix dist(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = std::hypot(coords[i].x - coords[j].x, coords[i].y - coords[j].y);
      dist(i, j) = d;
      dist(j, i) = d;
    }
  }
  return make_tsp_instance(std::move(name), std::move(dist), std::move(coords));
}

double solver_distance_scale(const TspInstance& instance) {
  double scale = 0.0;
  const std::size_t n = instance.n_cities;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) scale = std::max(scale, std::abs(instance.dist_solver(i, j)));
    }
  }
  if (scale <= 0.0) throw DegenerateInstanceError("instance has an all-zero solver distance matrix");
  return scale;
}

double mean_off_diagonal(const SquareMatrix& dist) {
  const std::size_t n = dist.size();
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) sum += dist(i, j);
    }
  }
  return sum / static_cast<double>(n * (n - 1));
}

TspEncoding encode_tsp(const TspInstance& instance) {
  const std::size_t n = instance.n_cities;
  if (n < 3) throw DegenerateInstanceError("TSP encoding needs at least 3 cities");
  const std::size_t n_vars = n * n;
  TspEncoding enc{QuboModel(n_vars), QuboModel(n_vars), n};

  // H_B: sum over ordered city pairs and positions, position n wraps to 0.
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = 0; v < n; ++v) {
      if (u == v) continue;
      const double d = instance.dist_solver(u, v);
      for (std::size_t j = 0; j < n; ++j) {
        enc.objective.add_term(enc.var(u, j), enc.var(v, (j + 1) % n), d);
      }
    }
  }

  // H_A: (1 - sum x)^2 = 1 - sum x + 2 sum_{a<b} x_a x_b for every row and
  // column of the assignment matrix.
  enc.penalty.add_offset(2.0 * static_cast<double>(n));
  for (std::size_t v = 0; v < n; ++v) {
    for (std::size_t j = 0; j < n; ++j) {
      enc.penalty.add_term(enc.var(v, j), enc.var(v, j), -2.0);
      for (std::size_t k = j + 1; k < n; ++k) {
        enc.penalty.add_term(enc.var(v, j), enc.var(v, k), 2.0);  // same city
        enc.penalty.add_term(enc.var(j, v), enc.var(k, v), 2.0);  // same position
      }
    }
  }
  return enc;
}

bool is_feasible(const TspEncoding& encoding, std::span<const std::uint8_t> bits) {
  return encoding.penalty.energy(bits) == 0.0;
}

std::optional<std::vector<std::size_t>> decode_tour(std::size_t n_cities,
                                                    std::span<const std::uint8_t> bits) {
  if (bits.size() != n_cities * n_cities) {
    throw DimensionError("bit vector length does not match n_cities^2");
  }
  std::vector<std::size_t> tour(n_cities, n_cities);
  std::vector<bool> seen(n_cities, false);
  for (std::size_t j = 0; j < n_cities; ++j) {
    for (std::size_t v = 0; v < n_cities; ++v) {
      if (!bits[v * n_cities + j]) continue;
      if (tour[j] != n_cities || seen[v]) return std::nullopt;
      tour[j] = v;
      seen[v] = true;
    }
    if (tour[j] == n_cities) return std::nullopt;
  }
  return tour;
}

Bits encode_tour(std::span<const std::size_t> tour) {
  const std::size_t n = tour.size();
  Bits bits(n * n, 0);
  for (std::size_t j = 0; j < n; ++j) bits[tour[j] * n + j] = 1;
  return bits;
}

double tour_length(const SquareMatrix& dist, std::span<const std::size_t> tour) {
  double len = 0.0;
  const std::size_t n = tour.size();
  for (std::size_t j = 0; j < n; ++j) len += dist(tour[j], tour[(j + 1) % n]);
  return len;
}

std::optional<double> decode_and_score(const TspEncoding& encoding, const TspInstance& instance,
                                       std::span<const std::uint8_t> bits) {
  if (!is_feasible(encoding, bits)) return std::nullopt;
  const auto tour = decode_tour(encoding.n_cities, bits);
  if (!tour) return std::nullopt;
  return tour_length(instance.dist_original, *tour);
}

nlohmann::json instance_to_json(const TspInstance& instance) {
  nlohmann::json j;
  j["name"] = instance.name;
  j["n"] = instance.n_cities;
  if (instance.coords) {
    auto arr = nlohmann::json::array();
    for (const auto& p : *instance.coords) arr.push_back({p.x, p.y});
    j["coords"] = std::move(arr);
  }
  auto rows = nlohmann::json::array();
  for (std::size_t i = 0; i < instance.n_cities; ++i) {
    const auto r = instance.dist_original.row(i);
    rows.push_back(std::vector<double>(r.begin(), r.end()));
  }
  j["dist_original"] = std::move(rows);
  return j;
}

TspInstance instance_from_json(const nlohmann::json& j) {
  try {
    const auto name = j.at("name").get<std::string>();
    const auto n = j.at("n").get<std::size_t>();
    const auto& rows = j.at("dist_original");
    if (rows.size() != n) throw ParseError("instance '" + name + "': dist_original has wrong row count");
    SquareMatrix dist(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (rows[i].size() != n) throw ParseError("instance '" + name + "': ragged dist_original");
      for (std::size_t k = 0; k < n; ++k) dist(i, k) = rows[i][k].get<double>();
    }
    std::optional<std::vector<Point>> coords;
    if (j.contains("coords")) {
      std::vector<Point> pts;
      for (const auto& p : j.at("coords")) pts.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
      coords = std::move(pts);
    }
    return make_tsp_instance(name, std::move(dist), std::move(coords));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed instance JSON: ") + e.what());
  }
}

void write_instance(const TspInstance& instance, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << instance_to_json(instance).dump() << '\n';
}

TspInstance read_instance(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open instance file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return instance_from_json(j);
}

}  // namespace qross
