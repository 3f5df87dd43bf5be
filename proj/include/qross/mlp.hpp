#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "json.hpp"

namespace qross {

// Fully connected network with tanh hidden layers and a linear output layer.
// All weights and biases live in one flat parameter vector so optimisers and
// finite-difference checks can treat the network as a point in R^P.
class Mlp {
 public:
  Mlp() = default;
  // dims = {inputs, hidden..., outputs}; weights uniform in +-1/sqrt(fan_in).
  Mlp(std::vector<std::size_t> dims, std::mt19937_64& rng);

  const std::vector<std::size_t>& dims() const { return dims_; }
  std::size_t n_inputs() const { return dims_.front(); }
  std::size_t n_outputs() const { return dims_.back(); }

  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }

  std::vector<double> forward(std::span<const double> x) const;

  // Adds d(loss)/d(params) for one sample to `grad`, given d(loss)/d(output).
  // `grad` must have params().size() entries.
  void backward(std::span<const double> x, std::span<const double> d_output,
                std::span<double> grad) const;

  nlohmann::json to_json() const;
  static Mlp from_json(const nlohmann::json& j);

 private:
  std::size_t weight_offset(std::size_t layer) const { return offsets_[layer]; }
  std::size_t bias_offset(std::size_t layer) const {
    return offsets_[layer] + dims_[layer] * dims_[layer + 1];
  }
  void build_offsets();
  // Activations of every layer (post-activation; the input is layer 0).
  std::vector<std::vector<double>> activations(std::span<const double> x) const;

  std::vector<std::size_t> dims_;
  std::vector<std::size_t> offsets_;
  std::vector<double> params_;
};

}  // namespace qross
