#include "qross/qubo.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qross/error.hpp"

namespace qross {

namespace {

void check_length(std::size_t n_vars, std::size_t n_bits) {
  if (n_vars != n_bits) {
    throw DimensionError("bit vector has length " + std::to_string(n_bits) + ", model has " +
                         std::to_string(n_vars) + " variables");
  }
}

}  // namespace

QuboModel::QuboModel(Index n_vars, double offset) : n_vars_(n_vars), offset_(offset) {
  if (n_vars == 0) throw DimensionError("QUBO model needs at least one variable");
}

double QuboModel::coeff(Index i, Index j) const {
  if (i > j) std::swap(i, j);
  auto it = coeffs_.find({i, j});
  return it == coeffs_.end() ? 0.0 : it->second;
}

void QuboModel::add_term(Index i, Index j, double value) {
  if (i >= n_vars_ || j >= n_vars_) {
    throw DimensionError("coefficient index (" + std::to_string(i) + ", " + std::to_string(j) +
                         ") outside [0, " + std::to_string(n_vars_) + ")");
  }
  if (!std::isfinite(value)) throw ValidationError("non-finite QUBO coefficient");
  if (i > j) std::swap(i, j);
  coeffs_[{i, j}] += value;
}

double QuboModel::energy(std::span<const std::uint8_t> bits) const {
  check_length(n_vars_, bits.size());
  double e = offset_;
  for (const auto& [key, c] : coeffs_) {
    if (bits[key.first] && bits[key.second]) e += c;
  }
  return e;
}

double energy(const QuboModel& model, std::span<const std::uint8_t> bits) {
  return model.energy(bits);
}

QuboModel add_scaled(const QuboModel& model, const QuboModel& other, double weight) {
  if (model.n_vars() != other.n_vars()) {
    throw DimensionError("add_scaled: models have " + std::to_string(model.n_vars()) + " and " +
                         std::to_string(other.n_vars()) + " variables");
  }
  QuboModel out = model;
  out.add_offset(weight * other.offset());
  for (const auto& [key, c] : other.coeffs()) out.add_term(key.first, key.second, weight * c);
  return out;
}

CompiledQubo::CompiledQubo(const QuboModel& model)
    : offset_(model.offset()), linear_(model.n_vars(), 0.0), row_start_(model.n_vars() + 1, 0) {
  const std::size_t n = model.n_vars();
  std::vector<std::size_t> degree(n, 0);
  for (const auto& [key, c] : model.coeffs()) {
    if (key.first != key.second && c != 0.0) {
      ++degree[key.first];
      ++degree[key.second];
    }
  }
  for (std::size_t i = 0; i < n; ++i) row_start_[i + 1] = row_start_[i] + degree[i];
  nbr_index_.resize(row_start_[n]);
  nbr_weight_.resize(row_start_[n]);
  std::vector<std::size_t> fill(row_start_.begin(), row_start_.end() - 1);
  for (const auto& [key, c] : model.coeffs()) {
    const auto [i, j] = key;
    if (i == j) {
      linear_[i] += c;
    } else if (c != 0.0) {
      nbr_index_[fill[i]] = static_cast<std::uint32_t>(j);
      nbr_weight_[fill[i]++] = c;
      nbr_index_[fill[j]] = static_cast<std::uint32_t>(i);
      nbr_weight_[fill[j]++] = c;
    }
  }
}

double CompiledQubo::local_field(std::span<const std::uint8_t> bits, std::size_t i) const {
  double f = linear_[i];
  const auto idx = neighbors(i);
  const auto w = couplings(i);
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (bits[idx[k]]) f += w[k];
  }
  return f;
}

double CompiledQubo::energy(std::span<const std::uint8_t> bits) const {
  check_length(n_vars(), bits.size());
  double e = offset_;
  for (std::size_t i = 0; i < n_vars(); ++i) {
    if (!bits[i]) continue;
    e += linear_[i];
    const auto idx = neighbors(i);
    const auto w = couplings(i);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      if (idx[k] > i && bits[idx[k]]) e += w[k];
    }
  }
  return e;
}

double delta_energy(const CompiledQubo& model, std::span<const std::uint8_t> bits,
                    std::size_t flip_index) {
  check_length(model.n_vars(), bits.size());
  if (flip_index >= model.n_vars()) {
    throw DimensionError("flip index " + std::to_string(flip_index) + " out of range");
  }
  const double field = model.local_field(bits, flip_index);
  return bits[flip_index] ? -field : field;
}

double delta_energy(const QuboModel& model, std::span<const std::uint8_t> bits,
                    std::size_t flip_index) {
  return delta_energy(CompiledQubo(model), bits, flip_index);
}

}  // namespace qross
