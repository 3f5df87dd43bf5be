#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <utility>
#include <vector>

namespace qross {

using Bits = std::vector<std::uint8_t>;

// Quadratic pseudo-boolean function
//   E(x) = sum_{i <= j} Q[i,j] x_i x_j + offset,   x in {0,1}^n
// Coefficients are kept in canonical upper-triangular form: a term added at
// (j, i) with j > i is accumulated into (i, j).
class QuboModel {
 public:
  using Index = std::size_t;
  using Key = std::pair<Index, Index>;

  explicit QuboModel(Index n_vars, double offset = 0.0);

  Index n_vars() const { return n_vars_; }
  double offset() const { return offset_; }
  const std::map<Key, double>& coeffs() const { return coeffs_; }

  // Coefficient at canonical (min(i,j), max(i,j)), 0 when absent.
  double coeff(Index i, Index j) const;

  void add_term(Index i, Index j, double value);
  void add_offset(double value) { offset_ += value; }

  double energy(std::span<const std::uint8_t> bits) const;

 private:
  Index n_vars_;
  double offset_;
  std::map<Key, double> coeffs_;
};

double energy(const QuboModel& model, std::span<const std::uint8_t> bits);

// model + weight * other, coefficient-wise (offsets included).
QuboModel add_scaled(const QuboModel& model, const QuboModel& other, double weight);

// Adjacency (CSR) view of a model used for O(degree) single-flip updates.
class CompiledQubo {
 public:
  explicit CompiledQubo(const QuboModel& model);

  std::size_t n_vars() const { return linear_.size(); }
  double offset() const { return offset_; }
  double linear(std::size_t i) const { return linear_[i]; }

  std::span<const std::uint32_t> neighbors(std::size_t i) const {
    return {nbr_index_.data() + row_start_[i], row_start_[i + 1] - row_start_[i]};
  }
  std::span<const double> couplings(std::size_t i) const {
    return {nbr_weight_.data() + row_start_[i], row_start_[i + 1] - row_start_[i]};
  }

  // Q[i,i] + sum_{j != i} Q[i,j] x_j
  double local_field(std::span<const std::uint8_t> bits, std::size_t i) const;
  double energy(std::span<const std::uint8_t> bits) const;

 private:
  double offset_;
  std::vector<double> linear_;
  std::vector<std::size_t> row_start_;
  std::vector<std::uint32_t> nbr_index_;
  std::vector<double> nbr_weight_;
};

// energy(bits with bit `flip_index` toggled) - energy(bits).
double delta_energy(const CompiledQubo& model, std::span<const std::uint8_t> bits,
                    std::size_t flip_index);
double delta_energy(const QuboModel& model, std::span<const std::uint8_t> bits,
                    std::size_t flip_index);

struct BinarySolution {
  Bits bits;
  double energy = 0.0;
};

struct SolveBatch {
  std::vector<BinarySolution> solutions;

  std::size_t batch_size() const { return solutions.size(); }
};

}  // namespace qross
