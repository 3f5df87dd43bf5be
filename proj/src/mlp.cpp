#include "qross/mlp.hpp"

#include <cmath>
#include <string>

#include "qross/error.hpp"

namespace qross {

Mlp::Mlp(std::vector<std::size_t> dims, std::mt19937_64& rng) : dims_(std::move(dims)) {
  if (dims_.size() < 2) throw ValidationError("MLP needs at least an input and an output layer");
  build_offsets();
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(dims_[l]));
    std::uniform_real_distribution<double> init(-bound, bound);
    const std::size_t count = dims_[l] * dims_[l + 1] + dims_[l + 1];
    for (std::size_t k = 0; k < count; ++k) params_[weight_offset(l) + k] = init(rng);
  }
}

void Mlp::build_offsets() {
  offsets_.assign(dims_.size(), 0);
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
    if (dims_[l] == 0 || dims_[l + 1] == 0) throw ValidationError("MLP layer of width 0");
    offsets_[l] = total;
    total += dims_[l] * dims_[l + 1] + dims_[l + 1];
  }
  offsets_.back() = total;
  params_.assign(total, 0.0);
}

std::vector<std::vector<double>> Mlp::activations(std::span<const double> x) const {
  if (x.size() != n_inputs()) {
    throw DimensionError("MLP expects " + std::to_string(n_inputs()) + " inputs, got " +
                         std::to_string(x.size()));
  }
  const std::size_t n_layers = dims_.size() - 1;
  std::vector<std::vector<double>> act(dims_.size());
  act[0].assign(x.begin(), x.end());
  for (std::size_t l = 0; l < n_layers; ++l) {
    const std::size_t in = dims_[l];
    const std::size_t out = dims_[l + 1];
    const double* w = params_.data() + weight_offset(l);
    const double* b = params_.data() + bias_offset(l);
    auto& next = act[l + 1];
    next.resize(out);
    for (std::size_t o = 0; o < out; ++o) {
      double z = b[o];
      for (std::size_t i = 0; i < in; ++i) z += w[o * in + i] * act[l][i];
      next[o] = (l + 1 < n_layers) ? std::tanh(z) : z;
    }
  }
  return act;
}

std::vector<double> Mlp::forward(std::span<const double> x) const {
  return std::move(activations(x).back());
}

void Mlp::backward(std::span<const double> x, std::span<const double> d_output,
                   std::span<double> grad) const {
  if (d_output.size() != n_outputs()) throw DimensionError("MLP backward: bad output gradient size");
  if (grad.size() != params_.size()) throw DimensionError("MLP backward: bad gradient buffer size");
  const auto act = activations(x);
  const std::size_t n_layers = dims_.size() - 1;
  std::vector<double> delta(d_output.begin(), d_output.end());  // dL/dz of current layer
  for (std::size_t l = n_layers; l-- > 0;) {
    const std::size_t in = dims_[l];
    const std::size_t out = dims_[l + 1];
    const double* w = params_.data() + weight_offset(l);
    double* gw = grad.data() + weight_offset(l);
    double* gb = grad.data() + bias_offset(l);
    for (std::size_t o = 0; o < out; ++o) {
      gb[o] += delta[o];
      for (std::size_t i = 0; i < in; ++i) gw[o * in + i] += delta[o] * act[l][i];
    }
    if (l == 0) break;
    std::vector<double> prev(in, 0.0);
    for (std::size_t o = 0; o < out; ++o) {
      for (std::size_t i = 0; i < in; ++i) prev[i] += w[o * in + i] * delta[o];
    }
    for (std::size_t i = 0; i < in; ++i) prev[i] *= 1.0 - act[l][i] * act[l][i];  // tanh'
    delta = std::move(prev);
  }
}

nlohmann::json Mlp::to_json() const {
  nlohmann::json j;
  j["dims"] = dims_;
  auto weights = nlohmann::json::array();
  auto biases = nlohmann::json::array();
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
    const auto w0 = params_.begin() + static_cast<std::ptrdiff_t>(weight_offset(l));
    const auto b0 = params_.begin() + static_cast<std::ptrdiff_t>(bias_offset(l));
    weights.push_back(std::vector<double>(w0, b0));
    biases.push_back(std::vector<double>(b0, b0 + static_cast<std::ptrdiff_t>(dims_[l + 1])));
  }
  j["weights"] = std::move(weights);  // row-major [out][in]
  j["biases"] = std::move(biases);
  return j;
}

Mlp Mlp::from_json(const nlohmann::json& j) {
  Mlp m;
  m.dims_ = j.at("dims").get<std::vector<std::size_t>>();
  if (m.dims_.size() < 2) throw ParseError("MLP: need at least two layer dims");
  m.build_offsets();
  const auto& weights = j.at("weights");
  const auto& biases = j.at("biases");
  if (weights.size() != m.dims_.size() - 1 || biases.size() != m.dims_.size() - 1) {
    throw ParseError("MLP: layer count does not match dims");
  }
  for (std::size_t l = 0; l + 1 < m.dims_.size(); ++l) {
    const auto w = weights[l].get<std::vector<double>>();
    const auto b = biases[l].get<std::vector<double>>();
    if (w.size() != m.dims_[l] * m.dims_[l + 1] || b.size() != m.dims_[l + 1]) {
      throw ParseError("MLP: weight array size does not match dims");
    }
    std::copy(w.begin(), w.end(), m.params_.begin() + static_cast<std::ptrdiff_t>(m.weight_offset(l)));
    std::copy(b.begin(), b.end(), m.params_.begin() + static_cast<std::ptrdiff_t>(m.bias_offset(l)));
  }
  return m;
}

}  // namespace qross
