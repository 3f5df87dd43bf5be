#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "qross/qubo.hpp"

namespace qross {

// Dense row-major n x n matrix.
class SquareMatrix {
 public:
  SquareMatrix() = default;
  explicit SquareMatrix(std::size_t n, double fill = 0.0) : n_(n), data_(n * n, fill) {}

  std::size_t size() const { return n_; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * n_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * n_, n_}; }

  bool operator==(const SquareMatrix&) const = default;

 private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

struct Point {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Point&) const = default;
};

struct MvodmResult {
  SquareMatrix transformed;
  std::vector<double> pi;
};

// Fits the additive model d_ij ~ mu + pi_i + pi_j over the off-diagonal
// entries by least squares (gauge: sum(pi) = 0) and returns d_ij - pi_i - pi_j.
// The transform shifts every Hamiltonian cycle by the same constant
// 2 * sum(pi), so optimal tours are preserved.
MvodmResult mvodm_preprocess(const SquareMatrix& dist);

struct TspInstance {
  std::string name;
  std::size_t n_cities = 0;
  std::optional<std::vector<Point>> coords;
  SquareMatrix dist_original;
  SquareMatrix dist_solver;
  std::vector<double> pi;
  // Set when n is outside the (14, 90) band used for benchmark selection.
  bool size_flagged = false;
};

// Validates the matrix and applies MVODM.
TspInstance make_tsp_instance(std::string name, SquareMatrix dist,
                              std::optional<std::vector<Point>> coords = std::nullopt);
// Unrounded Euclidean distances.
TspInstance make_euclidean_instance(std::string name, std::vector<Point> coords);

// Largest |dist_solver[i][j]| over i != j; the unit for normalised A.
double solver_distance_scale(const TspInstance& instance);
double mean_off_diagonal(const SquareMatrix& dist);

struct TspEncoding {
  QuboModel objective;
  QuboModel penalty;
  std::size_t n_cities;

  // Variable index of "city v visited at position j".
  std::size_t var(std::size_t city, std::size_t position) const {
    return city * n_cities + position;
  }
  QuboModel compose(double a) const { return add_scaled(objective, penalty, a); }
};

TspEncoding encode_tsp(const TspInstance& instance);

// Penalty energy is exactly zero (coefficients are small integers).
bool is_feasible(const TspEncoding& encoding, std::span<const std::uint8_t> bits);

// perm[j] = city visited at position j, or nullopt when bits is not a
// permutation matrix.
std::optional<std::vector<std::size_t>> decode_tour(std::size_t n_cities,
                                                    std::span<const std::uint8_t> bits);
Bits encode_tour(std::span<const std::size_t> tour);

double tour_length(const SquareMatrix& dist, std::span<const std::size_t> tour);

// Cycle length under dist_original of the decoded tour; nullopt if infeasible.
std::optional<double> decode_and_score(const TspEncoding& encoding, const TspInstance& instance,
                                       std::span<const std::uint8_t> bits);

// Instance JSON: {"name", "n", "coords"?: [[x,y],...], "dist_original": [[...],...]}
nlohmann::json instance_to_json(const TspInstance& instance);
TspInstance instance_from_json(const nlohmann::json& j);
void write_instance(const TspInstance& instance, const std::filesystem::path& path);
TspInstance read_instance(const std::filesystem::path& path);

}  // namespace qross
