#include "qross/mvc.hpp"

#include <cmath>
#include <set>
#include <string>

#include "qross/error.hpp"

namespace qross {

void validate(const MvcInstance& instance) {
  if (instance.n_nodes == 0) throw ValidationError("MVC instance has no nodes");
  if (instance.weights.size() != instance.n_nodes) {
    throw DimensionError("MVC weight vector length does not match node count");
  }
  for (double w : instance.weights) {
    if (!std::isfinite(w) || w < 0.0) throw ValidationError("MVC weights must be non-negative");
  }
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (auto [a, b] : instance.edges) {
    if (a == b) throw ValidationError("MVC edge is a self-loop at node " + std::to_string(a));
    if (a >= instance.n_nodes || b >= instance.n_nodes) {
      throw ValidationError("MVC edge endpoint out of range");
    }
    if (a > b) std::swap(a, b);
    if (!seen.insert({a, b}).second) throw ValidationError("duplicate MVC edge");
  }
}

MvcEncoding encode_mvc(const MvcInstance& instance) {
  validate(instance);
  MvcEncoding enc{QuboModel(instance.n_nodes), QuboModel(instance.n_nodes)};
  for (std::size_t i = 0; i < instance.n_nodes; ++i) {
    enc.objective.add_term(i, i, instance.weights[i]);
  }
  for (const auto& [a, b] : instance.edges) {
    enc.penalty.add_offset(1.0);
    enc.penalty.add_term(a, a, -1.0);
    enc.penalty.add_term(b, b, -1.0);
    enc.penalty.add_term(a, b, 1.0);
  }
  return enc;
}

}  // namespace qross
